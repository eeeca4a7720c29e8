"""Eigenspace priors built from a set of aligned templates."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import ValidationError, as_image, load_raster, save_raster
from .keyvalue import read_key_values, write_key_values
from .projector import GeometryError

RELATIVE_SINGULAR_CUTOFF = 1e-10


class RankError(ValueError):
    """Requested rank exceeds what the template set can support."""


class DegenerateSpanError(ValueError):
    """Templates are identical, so their centred span is empty."""


def template_set(templates: Sequence) -> list[np.ndarray]:
    """Validate a list of at least two same-shape templates."""
    grids = [as_image(t, f"template {i}") for i, t in enumerate(templates)]
    if len(grids) < 2:
        raise ValidationError(f"need at least 2 templates, got {len(grids)}")
    shape = grids[0].shape
    if any(g.shape != shape for g in grids):
        raise ValidationError("templates must share dimensions")
    return grids


@dataclass(frozen=True, eq=False)
class Eigenspace:
    """Affine subspace ``mean + span(components)``.

    ``components`` has shape ``(rank, height, width)``; each slice is a unit
    vector and the slices are mutually orthogonal.
    """

    mean: np.ndarray
    components: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.components.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean.shape

    @property
    def basis(self) -> np.ndarray:
        """Components as columns of a ``(pixels, rank)`` matrix."""
        return self.components.reshape(self.rank, -1).T

    def synthesize(self, alpha) -> np.ndarray:
        """``mean + sum_i alpha_i V_i``."""
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (self.rank,):
            raise ValidationError(f"alpha must have length {self.rank}")
        return self.mean + (self.basis @ alpha).reshape(self.shape)


def build_eigenspace(templates: Sequence, rank: int | None = None) -> Eigenspace:
    """PCA of the templates via a thin SVD of the centred data matrix.

    ``rank`` defaults to ``L - 1``. Directions whose singular value falls
    below ``1e-10`` times the largest are dropped, so the returned rank may be
    smaller than requested.
    """
    grids = template_set(templates)
    n = len(grids)
    if rank is None:
        rank = n - 1
    if rank < 1 or rank > n - 1:
        raise RankError(f"rank {rank} not in [1, {n - 1}] for {n} templates")
    shape = grids[0].shape
    data = np.stack([g.reshape(-1) for g in grids], axis=1)
    mean = data.mean(axis=1)
    centred = data - mean[:, None]
    u, svals, _ = np.linalg.svd(centred, full_matrices=False)
    if svals[0] == 0.0:
        raise DegenerateSpanError("all templates are identical")
    keep = min(rank, int(np.sum(svals >= RELATIVE_SINGULAR_CUTOFF * svals[0])))
    components = u[:, :keep].T.reshape(keep, *shape).copy()
    return Eigenspace(mean.reshape(shape), components, svals[:keep].copy())


def project_onto_eigenspace(space: Eigenspace, x) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projection onto the affine eigenspace; returns ``(alpha, P)``."""
    x = as_image(x)
    if x.shape != space.shape:
        raise GeometryError(f"image shape {x.shape} != eigenspace shape {space.shape}")
    alpha = space.basis.T @ (x - space.mean).reshape(-1)
    return alpha, space.synthesize(alpha)


def solve_alpha_subproblem(x, weights, space: Eigenspace) -> np.ndarray:
    """``argmin_alpha ||W (x - mean - V alpha)||^2`` with a tiny Tikhonov term.

    The regulariser ``eps = 1e-10 * trace(V^T W^2 V) / r`` keeps the normal
    equations solvable when the weights vanish over the components' support.
    """
    x = as_image(x)
    w = as_image(weights, "weights")
    if x.shape != space.shape or w.shape != space.shape:
        raise GeometryError("x and weights must match the eigenspace shape")
    basis = space.basis
    w2 = (w * w).reshape(-1)
    weighted = basis * w2[:, None]
    gram = basis.T @ weighted
    eps = 1e-10 * np.trace(gram) / space.rank
    rhs = weighted.T @ (x - space.mean).reshape(-1)
    if eps == 0.0:
        return np.zeros(space.rank)
    return np.linalg.solve(gram + eps * np.eye(space.rank), rhs)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_eigenspace(space: Eigenspace, directory, sources: Sequence = ()) -> None:
    """Write ``mean.tpr``, ``component_XX.tpr`` and ``manifest.txt``.

    ``sources`` are optional template raster paths whose SHA-256 digests are
    recorded in the manifest.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    save_raster(space.mean, out / "mean.tpr")
    for i, comp in enumerate(space.components):
        save_raster(comp, out / f"component_{i:02d}.tpr")
    manifest = {
        "rank": space.rank,
        "width": space.shape[1],
        "height": space.shape[0],
        "singular_values": ",".join(repr(float(s)) for s in space.singular_values),
    }
    for i, src in enumerate(sources):
        manifest[f"source_{i:02d}"] = os.fspath(src)
        manifest[f"source_{i:02d}_sha256"] = _sha256(src)
    write_key_values(out / "manifest.txt", manifest)


def load_eigenspace(directory) -> Eigenspace:
    """Read an eigenspace written by :func:`save_eigenspace`.

    Components are stored as binary32, so orthonormality holds only to
    single precision after a round trip.
    """
    src = Path(directory)
    manifest = read_key_values(src / "manifest.txt")
    rank = int(manifest["rank"])
    mean = load_raster(src / "mean.tpr")
    comps = np.stack([load_raster(src / f"component_{i:02d}.tpr") for i in range(rank)])
    svals = np.array([float(v) for v in manifest.get("singular_values", "").split(",") if v])
    return Eigenspace(mean, comps, svals)
