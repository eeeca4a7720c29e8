"""Spatially varying prior weights from an ensemble of pilot reconstructions.

The test measurements are reconstructed with several cheap methods. The
templates are pushed through the same geometry and the same methods, so the
resulting low-quality template reconstructions carry the same
geometry-dependent artefacts. For every method an eigenspace is built from
those low-quality templates and the test pilot is projected onto it. Whatever
the projection misses is either genuinely new or a method-specific artefact of
the new structure; taking the minimum over methods keeps only what all
methods agree on.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import ndimage

from .algebraic import AlgebraicOptions, algebraic_reconstruct
from .analytic import fbp_reconstruct
from .cs import CsOptions, SparsifyingTransform, cs_reconstruct
from .grid import ValidationError, as_image, save_raster
from .prior import Eigenspace, build_eigenspace, project_onto_eigenspace, template_set
from .projector import GeometryError, ScanGeometry, Sinogram, forward_project

METHODS = ("FBP", "ART", "SART", "SIRT", "CS")
NORMALIZATION_PERCENTILE = 99.0


class PilotMethodError(RuntimeError):
    """A pilot reconstruction failed; ``method`` names the culprit."""

    def __init__(self, method: str, cause: BaseException):
        super().__init__(f"pilot method {method} failed: {cause}")
        self.method = method


@dataclass(frozen=True, eq=False)
class PilotMethod:
    identifier: str
    options: Any = None

    def __post_init__(self):
        ident = self.identifier.upper()
        if ident not in METHODS:
            raise ValidationError(f"unknown pilot method {self.identifier!r}")
        object.__setattr__(self, "identifier", ident)
        if self.options is None:
            if ident == "FBP":
                opts = "ram-lak"
            elif ident == "CS":
                opts = CsOptions()
            else:
                opts = AlgebraicOptions(ident)
            object.__setattr__(self, "options", opts)

    def reconstruct(self, sino: Sinogram) -> np.ndarray:
        if self.identifier == "FBP":
            return fbp_reconstruct(sino, self.options)
        if self.identifier == "CS":
            return cs_reconstruct(sino, SparsifyingTransform(sino.geometry.image_shape), self.options)
        return algebraic_reconstruct(sino, self.options)


def default_pilot_methods(cs_options: CsOptions | None = None) -> tuple[PilotMethod, ...]:
    return (
        PilotMethod("FBP"),
        PilotMethod("SIRT"),
        PilotMethod("SART"),
        PilotMethod("CS", cs_options),
    )


@dataclass(eq=False)
class PilotSet:
    methods: tuple[str, ...]
    test_pilots: list[np.ndarray]
    template_pilots: list[list[np.ndarray]]  # [method][template]
    eigenspaces: list[Eigenspace]
    projections: list[np.ndarray]

    def __post_init__(self):
        m = len(self.methods)
        if not (len(self.test_pilots) == len(self.template_pilots) == len(self.eigenspaces)
                == len(self.projections) == m):
            raise ValidationError("pilot set is inconsistent with the method count")
        shape = self.test_pilots[0].shape
        grids = self.test_pilots + self.projections + [g for row in self.template_pilots for g in row]
        if any(g.shape != shape for g in grids):
            raise ValidationError("pilot grids must share dimensions")


def simulate_template_sinograms(templates: Sequence, geom: ScanGeometry) -> list[Sinogram]:
    """Forward project every template with the test scan's geometry."""
    grids = [as_image(t, f"template {i}") for i, t in enumerate(templates)]
    return [forward_project(g, geom) for g in grids]


def build_pilot_set(
    test_sino: Sinogram,
    template_sinos: Sequence[Sinogram],
    methods: Sequence[PilotMethod],
    rank: int | None = None,
) -> PilotSet:
    methods = tuple(methods)
    if len(methods) < 2:
        raise ValidationError("at least two pilot methods are needed")
    idents = [m.identifier for m in methods]
    if len(set(idents)) != len(idents):
        raise ValidationError(f"duplicate pilot methods in {idents}")
    if any(s.geometry != test_sino.geometry for s in template_sinos):
        raise GeometryError("template sinograms must share the test geometry")

    test_pilots, template_pilots, spaces, projections = [], [], [], []
    for method in methods:
        try:
            x_j = method.reconstruct(test_sino)
            y_j = [method.reconstruct(s) for s in template_sinos]
        except Exception as exc:
            raise PilotMethodError(method.identifier, exc) from exc
        y_j = template_set(y_j)
        space = build_eigenspace(y_j, rank)
        _, p_j = project_onto_eigenspace(space, x_j)
        test_pilots.append(x_j)
        template_pilots.append(y_j)
        spaces.append(space)
        projections.append(p_j)
    return PilotSet(tuple(idents), test_pilots, template_pilots, spaces, projections)


def difference_maps(pilots: PilotSet) -> list[np.ndarray]:
    """Per-method ``|X^j - P^j|`` after scaling both by the 99th percentile of ``|X^j|``."""
    maps = []
    for x_j, p_j in zip(pilots.test_pilots, pilots.projections):
        ref = np.percentile(np.abs(x_j), NORMALIZATION_PERCENTILE)
        scale = 1.0 / ref if ref > 0 else 1.0
        maps.append(np.abs(x_j - p_j) * scale)
    return maps


def weights_from_difference(d: np.ndarray, k: float) -> np.ndarray:
    return 1.0 / (1.0 + k * d)


def compute_weight_map(pilots: PilotSet, k: float = 20.0, smoothing_sigma: float = 1.0) -> np.ndarray:
    """Per-pixel prior weights ``W = 1 / (1 + k * min_j |X^j - P^j|)``."""
    if not k > 0:
        raise ValidationError(f"k must be positive, got {k}")
    if smoothing_sigma < 0:
        raise ValidationError("smoothing_sigma must be non-negative")
    d = np.min(np.stack(difference_maps(pilots)), axis=0)
    if smoothing_sigma > 0:
        d = ndimage.gaussian_filter(d, smoothing_sigma, mode="nearest")
    return weights_from_difference(d, k)


def dump_difference_maps(pilots: PilotSet, directory) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for ident, d in zip(pilots.methods, difference_maps(pilots)):
        path = out / f"difference_{ident.lower()}.tpr"
        save_raster(d, path)
        paths.append(path)
    return paths
