"""Raster helpers and the TPRASTER file format.

Images are plain 2D ``float64`` numpy arrays of shape ``(height, width)``
stored row-major. On disk they are little-endian binary32 after a one-line
ASCII header::

    TPRASTER 1 <width> <height>\\n
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

MAGIC = "TPRASTER"
VERSION = 1


class RasterFormatError(ValueError):
    """Malformed TPRASTER header."""


class RasterLengthError(ValueError):
    """Payload length does not match the header."""


class ValidationError(ValueError):
    """Input violates a documented invariant."""


class BoundsError(IndexError):
    """Region of interest falls outside the image."""


@dataclass(frozen=True)
class RegionOfInterest:
    """Axis-aligned rectangle ``[y0, y0 + h) x [x0, x0 + w)`` in pixel units."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise ValidationError(f"negative ROI origin ({self.x0}, {self.y0})")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(f"ROI size must be positive, got {self.w}x{self.h}")

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y0 + self.h), slice(self.x0, self.x0 + self.w)

    def fits(self, shape: tuple[int, int]) -> bool:
        height, width = shape
        return self.x0 + self.w <= width and self.y0 + self.h <= height


def as_image(data, name: str = "image") -> np.ndarray:
    """Validate ``data`` as a finite 2D grid and return it as float64."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def save_raster(image, path) -> None:
    """Write ``image`` as TPRASTER v1.

    Raises
    ------
    ValidationError
        If the image is not finite or overflows binary32.
    OSError
        If the file cannot be written.
    """
    arr = as_image(image)
    payload = arr.astype("<f4")
    if not np.all(np.isfinite(payload)):
        raise ValidationError("image values overflow binary32")
    height, width = arr.shape
    header = f"{MAGIC} {VERSION} {width} {height}\n".encode("ascii")
    with open(os.fspath(path), "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes(order="C"))


def load_raster(path) -> np.ndarray:
    """Read a TPRASTER v1 file into a ``(height, width)`` float64 array."""
    with open(os.fspath(path), "rb") as fh:
        raw = fh.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise RasterFormatError("missing header line")
    try:
        parts = raw[:newline].decode("ascii").split(" ")
    except UnicodeDecodeError as exc:
        raise RasterFormatError("header is not ASCII") from exc
    if len(parts) != 4 or parts[0] != MAGIC:
        raise RasterFormatError(f"bad header {raw[:newline]!r}")
    try:
        version, width, height = (int(p) for p in parts[1:])
    except ValueError as exc:
        raise RasterFormatError(f"bad header {raw[:newline]!r}") from exc
    if version != VERSION:
        raise RasterFormatError(f"unsupported TPRASTER version {version}")
    if width <= 0 or height <= 0:
        raise RasterFormatError(f"non-positive dimensions {width}x{height}")

    body = raw[newline + 1 :]
    expected = 4 * width * height
    if len(body) != expected:
        raise RasterLengthError(f"expected {expected} payload bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(height, width)
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: payload contains non-finite values")
    return data


def extract_roi(image, roi: RegionOfInterest) -> np.ndarray:
    arr = as_image(image)
    if not roi.fits(arr.shape):
        raise BoundsError(f"{roi} exceeds image of shape {arr.shape}")
    return arr[roi.slices].copy()


def roi_mask(shape: tuple[int, int], rois) -> np.ndarray:
    """Boolean mask of the union of one or more ROIs."""
    if isinstance(rois, RegionOfInterest):
        rois = [rois]
    mask = np.zeros(shape, dtype=bool)
    for roi in rois:
        if not roi.fits(shape):
            raise BoundsError(f"{roi} exceeds image of shape {shape}")
        mask[roi.slices] = True
    return mask
