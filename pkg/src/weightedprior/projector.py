"""2D parallel-beam projector using Joseph's interpolating ray model.

Coordinates are in pixel units with the origin at the image centre: pixel
``(row, col)`` sits at ``x = col - (W - 1) / 2``, ``y = row - (H - 1) / 2``.
The ray of angle ``theta`` and detector offset ``s`` is the line
``x cos(theta) + y sin(theta) = s``. Detector bins are centred on the image
centre and rays pass through bin centres.

Joseph's method walks the ray along whichever image axis it is most aligned
with, linearly interpolates the two neighbouring pixels at every step, and
scales by the step length. The forward operator is stored as a sparse matrix
so that the back projector is its exact transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .grid import ValidationError, as_image, load_raster, save_raster
from .keyvalue import read_key_values, write_key_values

DENSE_ORACLE_MAX_PIXELS = 4096


class GeometryError(ValueError):
    """Image or sinogram does not match the scan geometry."""


@dataclass(frozen=True, eq=False)
class ScanGeometry:
    angles: np.ndarray
    n_detectors: int
    image_width: int
    image_height: int
    detector_spacing: float = 1.0
    _key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        angles = np.array(self.angles, dtype=np.float64).reshape(-1)
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        if angles.size < 1:
            raise GeometryError("at least one projection angle is required")
        if not np.all(np.isfinite(angles)) or angles[0] < 0 or angles[-1] >= np.pi:
            raise GeometryError("angles must lie in [0, pi)")
        if np.any(np.diff(angles) <= 0):
            raise GeometryError("angles must be strictly increasing")
        if self.image_width < 1 or self.image_height < 1:
            raise GeometryError("image dimensions must be positive")
        if not self.detector_spacing > 0:
            raise GeometryError("detector_spacing must be positive")
        min_det = math.ceil(math.hypot(self.image_width, self.image_height))
        if self.n_detectors < min_det:
            raise GeometryError(
                f"n_detectors={self.n_detectors} < {min_det} does not cover the image diagonal"
            )
        key = (
            angles.tobytes(),
            int(self.n_detectors),
            int(self.image_width),
            int(self.image_height),
            float(self.detector_spacing),
        )
        object.__setattr__(self, "_key", key)

    @property
    def n_angles(self) -> int:
        return self.angles.size

    @property
    def image_shape(self) -> tuple[int, int]:
        return (self.image_height, self.image_width)

    @property
    def sinogram_shape(self) -> tuple[int, int]:
        return (self.n_angles, self.n_detectors)

    def detector_positions(self) -> np.ndarray:
        return (np.arange(self.n_detectors) - (self.n_detectors - 1) / 2.0) * self.detector_spacing

    def __eq__(self, other):
        if not isinstance(other, ScanGeometry):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)


@dataclass(frozen=True, eq=False)
class Sinogram:
    geometry: ScanGeometry
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.geometry.sinogram_shape:
            raise GeometryError(
                f"sinogram shape {data.shape} != geometry {self.geometry.sinogram_shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValidationError("sinogram contains non-finite values")
        object.__setattr__(self, "data", data)


def parallel_geometry(
    image_shape: tuple[int, int],
    n_views: int,
    total_views: int | None = None,
    n_detectors: int | None = None,
    detector_spacing: float = 1.0,
) -> ScanGeometry:
    """Evenly spaced views over ``[0, pi)``.

    With ``total_views`` the ``n_views`` angles are an evenly spread subset of
    the dense ``total_views`` grid, mimicking a sparse re-scan of an object
    whose full scan used ``total_views`` views.
    """
    height, width = image_shape
    if n_views < 1:
        raise GeometryError("n_views must be positive")
    if total_views is None:
        angles = np.arange(n_views) * (np.pi / n_views)
    else:
        if n_views > total_views:
            raise GeometryError(f"cannot pick {n_views} of {total_views} views")
        idx = np.floor(np.arange(n_views) * (total_views / n_views)).astype(int)
        angles = idx * (np.pi / total_views)
    if n_detectors is None:
        n_detectors = math.ceil(math.hypot(width, height))
    return ScanGeometry(angles, n_detectors, width, height, detector_spacing)


def _angle_entries(geom: ScanGeometry, a: int):
    theta = geom.angles[a]
    c, s = math.cos(theta), math.sin(theta)
    det = geom.detector_positions()
    w, h = geom.image_width, geom.image_height
    nd = geom.n_detectors
    if abs(c) >= abs(s):
        # step along rows, interpolate between columns
        y = np.arange(h) - (h - 1) / 2.0
        u = (det[:, None] - y[None, :] * s) / c + (w - 1) / 2.0
        lo = np.floor(u)
        frac = u - lo
        lo = lo.astype(np.int64)
        steps = np.broadcast_to(np.arange(h)[None, :], u.shape)
        scale = 1.0 / abs(c)
        pix_lo = steps * w + lo
        pix_hi = pix_lo + 1
        ok_lo = (lo >= 0) & (lo < w)
        ok_hi = (lo + 1 >= 0) & (lo + 1 < w)
    else:
        # step along columns, interpolate between rows
        x = np.arange(w) - (w - 1) / 2.0
        v = (det[:, None] - x[None, :] * c) / s + (h - 1) / 2.0
        lo = np.floor(v)
        frac = v - lo
        lo = lo.astype(np.int64)
        steps = np.broadcast_to(np.arange(w)[None, :], v.shape)
        scale = 1.0 / abs(s)
        pix_lo = lo * w + steps
        pix_hi = pix_lo + w
        ok_lo = (lo >= 0) & (lo < h)
        ok_hi = (lo + 1 >= 0) & (lo + 1 < h)
    rays = np.broadcast_to((a * nd + np.arange(nd))[:, None], frac.shape)
    w_lo = (1.0 - frac) * scale
    w_hi = frac * scale
    keep_lo = ok_lo & (w_lo != 0)
    keep_hi = ok_hi & (w_hi != 0)
    rows = np.concatenate([rays[keep_lo], rays[keep_hi]])
    cols = np.concatenate([pix_lo[keep_lo], pix_hi[keep_hi]])
    vals = np.concatenate([w_lo[keep_lo], w_hi[keep_hi]])
    return rows, cols, vals


@lru_cache(maxsize=8)
def _operators(geom: ScanGeometry) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    parts = [_angle_entries(geom, a) for a in range(geom.n_angles)]
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    n_rays = geom.n_angles * geom.n_detectors
    n_pix = geom.image_width * geom.image_height
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n_rays, n_pix))
    mat.sort_indices()
    mat_t = mat.T.tocsr()
    mat_t.sort_indices()
    return mat, mat_t


def system_matrix(geom: ScanGeometry) -> sp.csr_matrix:
    """Sparse ``(rays, pixels)`` matrix of the forward projector (cached)."""
    return _operators(geom)[0]


def forward_project(image, geom: ScanGeometry) -> Sinogram:
    arr = as_image(image)
    if arr.shape != geom.image_shape:
        raise GeometryError(f"image shape {arr.shape} != geometry {geom.image_shape}")
    data = _operators(geom)[0] @ arr.reshape(-1)
    return Sinogram(geom, data.reshape(geom.sinogram_shape))


def back_project(sino: Sinogram) -> np.ndarray:
    """Exact adjoint of :func:`forward_project`."""
    geom = sino.geometry
    img = _operators(geom)[1] @ sino.data.reshape(-1)
    return img.reshape(geom.image_shape)


@lru_cache(maxsize=8)
def _spectral_norm(geom: ScanGeometry, iterations: int) -> float:
    mat, mat_t = _operators(geom)
    x = np.ones(mat.shape[1])
    x /= np.linalg.norm(x)
    sigma_sq = 0.0
    for _ in range(iterations):
        z = mat_t @ (mat @ x)
        sigma_sq = float(np.linalg.norm(z))
        if sigma_sq == 0.0:
            return 0.0
        x = z / sigma_sq
    return math.sqrt(sigma_sq)


def operator_norm(geom: ScanGeometry, iterations: int = 30) -> float:
    """Power-iteration estimate of the largest singular value of the projector.

    The estimate approaches the true value from below.
    """
    return _spectral_norm(geom, int(iterations))


def dense_system_matrix(geom: ScanGeometry) -> np.ndarray:
    """Dense system matrix built ray by ray with scalar arithmetic.

    Independent of the vectorised assembly behind :func:`forward_project`;
    intended as a brute-force oracle on small grids.
    """
    w, h = geom.image_width, geom.image_height
    if w * h > DENSE_ORACLE_MAX_PIXELS:
        raise ValidationError(
            f"{w}x{h} grid exceeds the dense oracle limit of {DENSE_ORACLE_MAX_PIXELS} pixels"
        )
    nd = geom.n_detectors
    out = np.zeros((geom.n_angles * nd, w * h))
    for a, theta in enumerate(geom.angles):
        c, s = math.cos(theta), math.sin(theta)
        for k in range(nd):
            t = (k - (nd - 1) / 2.0) * geom.detector_spacing
            ray = a * nd + k
            if abs(c) >= abs(s):
                for row in range(h):
                    y = row - (h - 1) / 2.0
                    u = (t - y * s) / c + (w - 1) / 2.0
                    col = math.floor(u)
                    f = u - col
                    if 0 <= col < w:
                        out[ray, row * w + col] += (1.0 - f) / abs(c)
                    if 0 <= col + 1 < w:
                        out[ray, row * w + col + 1] += f / abs(c)
            else:
                for col in range(w):
                    x = col - (w - 1) / 2.0
                    v = (t - x * c) / s + (h - 1) / 2.0
                    row = math.floor(v)
                    f = v - row
                    if 0 <= row < h:
                        out[ray, row * w + col] += (1.0 - f) / abs(s)
                    if 0 <= row + 1 < h:
                        out[ray, (row + 1) * w + col] += f / abs(s)
    return out


def geometry_path(path) -> Path:
    """Sidecar geometry file that accompanies a sinogram raster."""
    return Path(path).with_suffix(".geom")


def save_sinogram(sino: Sinogram, path) -> None:
    """Write the sinogram as TPRASTER plus a ``.geom`` key=value sidecar."""
    geom = sino.geometry
    save_raster(sino.data, path)
    write_key_values(geometry_path(path), {
        "n_angles": geom.n_angles,
        "n_detectors": geom.n_detectors,
        "detector_spacing": repr(float(geom.detector_spacing)),
        "image_width": geom.image_width,
        "image_height": geom.image_height,
        "angles": ",".join(repr(float(a)) for a in geom.angles),
    })


def load_sinogram(path) -> Sinogram:
    meta = read_key_values(geometry_path(path))
    try:
        angles = [float(a) for a in meta["angles"].split(",")]
        geom = ScanGeometry(
            angles,
            int(meta["n_detectors"]),
            int(meta["image_width"]),
            int(meta["image_height"]),
            float(meta["detector_spacing"]),
        )
    except KeyError as exc:
        raise GeometryError(f"{geometry_path(path)}: missing key {exc}") from exc
    if int(meta.get("n_angles", geom.n_angles)) != geom.n_angles:
        raise GeometryError("n_angles disagrees with the angle list")
    return Sinogram(geom, load_raster(path))
