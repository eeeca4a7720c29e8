"""Image quality metrics over whole images or regions of interest."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .grid import RegionOfInterest, ValidationError, as_image, roi_mask

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1, K2 = 0.01, 0.03


class MetricError(ValueError):
    """Metric undefined for the given inputs."""


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _pair(a, b):
    a = as_image(a, "a")
    b = as_image(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def _mask(shape, roi):
    if roi is None:
        return None
    return roi_mask(shape, roi)


def ssim_map(a, b, data_range: float | None = None) -> np.ndarray:
    """Local SSIM at every pixel, with symmetric boundary extension.

    ``data_range`` defaults to the pooled range ``max(a, b) - min(a, b)``.
    """
    a, b = _pair(a, b)
    if data_range is None:
        data_range = float(max(a.max(), b.max()) - min(a.min(), b.min()))
    if data_range == 0.0:
        if np.array_equal(a, b):
            return np.ones_like(a)
        raise MetricError("zero dynamic range with unequal images")
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    win = gaussian_window()

    def filt(img):
        return ndimage.correlate(img, win, mode="reflect")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, roi: RegionOfInterest | list[RegionOfInterest] | None = None,
         data_range: float | None = None) -> float:
    """Mean SSIM over the image, or over the union of ``roi`` rectangles.

    The local statistics always use the full image so that small regions
    still see complete windows.
    """
    smap = ssim_map(a, b, data_range)
    mask = _mask(smap.shape, roi)
    return float(smap.mean() if mask is None else smap[mask].mean())


def rmse(a, b, roi: RegionOfInterest | list[RegionOfInterest] | None = None) -> float:
    a, b = _pair(a, b)
    diff = a - b
    mask = _mask(diff.shape, roi)
    if mask is not None:
        diff = diff[mask]
    return float(np.sqrt(np.mean(diff * diff)))
