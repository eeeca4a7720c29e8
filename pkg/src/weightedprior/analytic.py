"""Filtered backprojection, the parallel-beam counterpart of FDK."""

from __future__ import annotations

import numpy as np

from .projector import GeometryError, Sinogram, back_project

FILTERS = ("ram-lak", "hann")


def ramp_filter(n_detectors: int, spacing: float = 1.0, kind: str = "ram-lak") -> np.ndarray:
    """Frequency response of the ramp filter on the zero-padded detector grid.

    Built as the FFT of the band-limited spatial ramp kernel, which avoids the
    DC offset of sampling ``|f|`` directly.
    """
    if kind not in FILTERS:
        raise ValueError(f"unknown filter {kind!r}, expected one of {FILTERS}")
    size = int(2 ** np.ceil(np.log2(2 * n_detectors)))
    n = np.concatenate([np.arange(1, size // 2 + 1, 2), np.arange(size // 2 - 1, 0, -2)])
    kernel = np.zeros(size)
    kernel[0] = 0.25
    kernel[1::2] = -1.0 / (np.pi * n) ** 2
    response = np.real(np.fft.fft(kernel))
    if kind == "hann":
        freq = np.fft.fftfreq(size)
        response *= 0.5 * (1.0 + np.cos(2.0 * np.pi * freq))
    return response / spacing


def filter_sinogram(sino: Sinogram, kind: str = "ram-lak") -> Sinogram:
    geom = sino.geometry
    response = ramp_filter(geom.n_detectors, geom.detector_spacing, kind)
    size = response.size
    padded = np.zeros((geom.n_angles, size))
    padded[:, : geom.n_detectors] = sino.data
    filtered = np.real(np.fft.ifft(np.fft.fft(padded, axis=1) * response, axis=1))
    return Sinogram(geom, filtered[:, : geom.n_detectors])


def fbp_reconstruct(sino: Sinogram, filter: str = "ram-lak") -> np.ndarray:
    """Ramp-filter every view, back project, scale by ``pi / n_angles``."""
    geom = sino.geometry
    if geom.n_angles < 2:
        raise GeometryError("FBP needs at least 2 projection angles")
    return back_project(filter_sinogram(sino, filter)) * (np.pi / geom.n_angles)
