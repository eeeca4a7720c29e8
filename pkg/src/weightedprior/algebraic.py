"""Algebraic reconstruction: ART (Kaczmarz), SART and SIRT."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import ValidationError, as_image
from .projector import Sinogram, system_matrix

DEFAULT_ITERATIONS = {"ART": 10, "SART": 20, "SIRT": 100}


@dataclass(frozen=True, eq=False)
class AlgebraicOptions:
    method: str = "SIRT"
    iterations: Optional[int] = None
    relaxation: float = 1.0
    initial: Optional[np.ndarray] = None
    nonnegative: bool = False

    def __post_init__(self):
        method = self.method.upper()
        if method not in DEFAULT_ITERATIONS:
            raise ValidationError(f"unknown algebraic method {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.iterations is None:
            object.__setattr__(self, "iterations", DEFAULT_ITERATIONS[method])
        if int(self.iterations) < 1:
            raise ValidationError("iterations must be positive")
        if not 0.0 < self.relaxation < 2.0:
            raise ValidationError(f"relaxation {self.relaxation} outside (0, 2)")


def _safe_inverse(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=np.float64)
    nz = values != 0
    out[nz] = 1.0 / values[nz]
    return out


def _art(mat, y, x, opts, callback):
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    norms = np.asarray(mat.multiply(mat).sum(axis=1)).ravel()
    rows = np.flatnonzero(norms > 0)
    lam = opts.relaxation
    for it in range(opts.iterations):
        for i in rows:
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            a = data[lo:hi]
            step = lam * (y[i] - a @ x[idx]) / norms[i]
            x[idx] += step * a
        if opts.nonnegative:
            np.maximum(x, 0.0, out=x)
        if callback is not None:
            callback(it, x)
    return x


def _sart(mat, y, x, opts, callback, n_angles, n_det):
    blocks = []
    for a in range(n_angles):
        block = mat[a * n_det : (a + 1) * n_det]
        row_w = _safe_inverse(np.asarray(block.sum(axis=1)).ravel())
        col_w = _safe_inverse(np.asarray(block.sum(axis=0)).ravel())
        blocks.append((block, block.T.tocsr(), row_w, col_w, y[a * n_det : (a + 1) * n_det]))
    lam = opts.relaxation
    for it in range(opts.iterations):
        for block, block_t, row_w, col_w, y_b in blocks:
            x += lam * col_w * (block_t @ (row_w * (y_b - block @ x)))
        if opts.nonnegative:
            np.maximum(x, 0.0, out=x)
        if callback is not None:
            callback(it, x)
    return x


def _sirt(mat, y, x, opts, callback):
    mat_t = mat.T.tocsr()
    row_w = _safe_inverse(np.asarray(mat.sum(axis=1)).ravel())
    col_w = _safe_inverse(np.asarray(mat.sum(axis=0)).ravel())
    lam = opts.relaxation
    for it in range(opts.iterations):
        x += lam * col_w * (mat_t @ (row_w * (y - mat @ x)))
        if opts.nonnegative:
            np.maximum(x, 0.0, out=x)
        if callback is not None:
            callback(it, x)
    return x


def algebraic_reconstruct(
    sino: Sinogram,
    opts: AlgebraicOptions = AlgebraicOptions(),
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Iteratively solve ``A x = y`` with the chosen algebraic method.

    ART sweeps the rays in angle-major order. SART updates one view at a time
    and SIRT all rays at once; both normalise by inverse row and column sums,
    with empty rows and columns contributing no update.

    ``callback(iteration, x)`` receives the flattened iterate after every
    sweep; it must not modify ``x``.
    """
    geom = sino.geometry
    mat = system_matrix(geom)
    y = sino.data.reshape(-1)
    if opts.initial is None:
        x = np.zeros(mat.shape[1])
    else:
        init = as_image(opts.initial, "initial")
        if init.shape != geom.image_shape:
            raise ValidationError("initial image does not match the geometry")
        x = init.reshape(-1).copy()

    if opts.method == "ART":
        x = _art(mat, y, x, opts, callback)
    elif opts.method == "SART":
        x = _sart(mat, y, x, opts, callback, geom.n_angles, geom.n_detectors)
    else:
        x = _sirt(mat, y, x, opts, callback)
    return x.reshape(geom.image_shape)
