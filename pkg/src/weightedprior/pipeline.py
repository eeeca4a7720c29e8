"""Weighted-prior reconstruction by alternating minimisation.

The objective is

    E(theta, alpha) = ||Phi x - y||^2 + lambda1 ||theta||_1
                      + lambda2 ||W (x - mean - V alpha)||^2,   x = Psi theta

where ``mean`` and ``V`` come from an eigenspace of high-quality templates and
``W`` from :mod:`weightedprior.weights`. The theta step is a FISTA solve with
the prior estimate fixed; the alpha step is a small weighted least-squares
problem. Both steps are warm-started, so ``E`` never increases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebraic import AlgebraicOptions, algebraic_reconstruct
from .analytic import fbp_reconstruct
from .cs import CsOptions, SparsifyingTransform, cs_reconstruct, solve_theta_subproblem, weighted_prior_objective
from .grid import ValidationError
from .prior import build_eigenspace, solve_alpha_subproblem, template_set
from .projector import GeometryError, Sinogram
from .weights import (
    PilotMethod,
    PilotSet,
    build_pilot_set,
    compute_weight_map,
    default_pilot_methods,
    simulate_template_sinograms,
)

RELATIVE_STOP = 1e-4


class UsageError(ValueError):
    """Unknown reconstruction method or missing inputs."""


@dataclass(frozen=True, eq=False)
class ReconConfig:
    lambda1: float = 0.5
    lambda2: float = 200.0
    k: float = 20.0
    smoothing_sigma: float = 1.0
    eigen_rank_high: Optional[int] = None
    eigen_rank_low: Optional[int] = None
    outer_iterations: int = 5
    cs_options: CsOptions = field(default_factory=CsOptions)
    pilot_methods: Optional[tuple[PilotMethod, ...]] = None
    fbp_filter: str = "ram-lak"
    seed: int = 0

    def __post_init__(self):
        if not self.lambda1 >= 0:
            raise ValidationError(f"lambda1 must be >= 0, got {self.lambda1}")
        if not self.lambda2 >= 0:
            raise ValidationError(f"lambda2 must be >= 0, got {self.lambda2}")
        if not self.k > 0:
            raise ValidationError(f"k must be > 0, got {self.k}")
        if not self.smoothing_sigma >= 0:
            raise ValidationError("smoothing_sigma must be >= 0")
        for name in ("eigen_rank_high", "eigen_rank_low"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValidationError(f"{name} must be positive")
        if self.outer_iterations < 1:
            raise ValidationError("outer_iterations must be positive")
        if self.pilot_methods is None:
            object.__setattr__(self, "pilot_methods", default_pilot_methods(self.cs))
        else:
            object.__setattr__(self, "pilot_methods", tuple(self.pilot_methods))

    @property
    def cs(self) -> CsOptions:
        """CS solver options carrying this config's ``lambda1``."""
        o = self.cs_options
        return CsOptions(self.lambda1, o.max_iterations, o.tolerance, o.lipschitz_power_iters)


@dataclass
class Diagnostics:
    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    pilots: Optional[PilotSet] = None
    seconds: float = 0.0

    @property
    def objective(self) -> list[float]:
        return [r[4] for r in self.rows]

    def table(self) -> str:
        lines = ["iteration\tdata\tsparsity\tprior\ttotal"]
        lines += [f"{i}\t{d:.10g}\t{s:.10g}\t{p:.10g}\t{t:.10g}" for i, d, s, p, t in self.rows]
        return "\n".join(lines) + "\n"


@dataclass
class ReconResult:
    image: np.ndarray
    weights: np.ndarray
    diagnostics: Diagnostics

    def __iter__(self):
        return iter((self.image, self.weights, self.diagnostics))


def _alternate(test_sino, templates, cfg, weights, diagnostics) -> np.ndarray:
    geom = test_sino.geometry
    space = build_eigenspace(templates, cfg.eigen_rank_high)
    transform = SparsifyingTransform(geom.image_shape)
    cs = cfg.cs

    def record(it, x, prior):
        terms = weighted_prior_objective(x, test_sino, transform, prior, weights, cfg.lambda1, cfg.lambda2)
        diagnostics.rows.append((it, *terms, sum(terms)))
        return sum(terms)

    x = fbp_reconstruct(test_sino, cfg.fbp_filter)
    prior = space.synthesize(solve_alpha_subproblem(x, weights, space))
    previous = record(0, x, prior)
    for it in range(1, cfg.outer_iterations + 1):
        x = solve_theta_subproblem(test_sino, transform, prior, weights, cfg.lambda1, cfg.lambda2, cs, initial=x)
        prior = space.synthesize(solve_alpha_subproblem(x, weights, space))
        current = record(it, x, prior)
        if abs(previous - current) <= RELATIVE_STOP * abs(current):
            break
        previous = current
    return x


def _check_inputs(test_sino: Sinogram, templates: Sequence) -> list[np.ndarray]:
    grids = template_set(templates)
    if grids[0].shape != test_sino.geometry.image_shape:
        raise GeometryError(
            f"templates of shape {grids[0].shape} do not match geometry {test_sino.geometry.image_shape}"
        )
    return grids


def weighted_prior_reconstruct(test_sino: Sinogram, templates: Sequence, cfg: ReconConfig = ReconConfig()) -> ReconResult:
    """Detect changed regions, then solve the weighted-prior objective."""
    start = time.perf_counter()
    grids = _check_inputs(test_sino, templates)
    if len(cfg.pilot_methods) < 2:
        raise ValidationError("weighted mode needs at least two pilot methods")
    diagnostics = Diagnostics()
    template_sinos = simulate_template_sinograms(grids, test_sino.geometry)
    pilots = build_pilot_set(test_sino, template_sinos, cfg.pilot_methods, cfg.eigen_rank_low)
    weights = compute_weight_map(pilots, cfg.k, cfg.smoothing_sigma)
    diagnostics.pilots = pilots
    image = _alternate(test_sino, grids, cfg, weights, diagnostics)
    diagnostics.seconds = time.perf_counter() - start
    return ReconResult(image, weights, diagnostics)


def plain_prior_reconstruct(test_sino: Sinogram, templates: Sequence, cfg: ReconConfig = ReconConfig()) -> ReconResult:
    """Same objective with ``W = 1`` everywhere; no pilot reconstructions."""
    start = time.perf_counter()
    grids = _check_inputs(test_sino, templates)
    diagnostics = Diagnostics()
    weights = np.ones(test_sino.geometry.image_shape)
    image = _alternate(test_sino, grids, cfg, weights, diagnostics)
    diagnostics.seconds = time.perf_counter() - start
    return ReconResult(image, weights, diagnostics)


RECON_METHODS = ("fdk", "art", "sart", "sirt", "cs", "prior", "weighted-prior")


def reconstruct(
    method: str,
    sino: Sinogram,
    templates: Sequence | None = None,
    cfg: ReconConfig = ReconConfig(),
    algebraic_options: AlgebraicOptions | None = None,
) -> np.ndarray:
    """Single entry point for every reconstruction method.

    ``fdk`` is filtered backprojection, the 2D parallel-beam analogue.
    """
    name = method.lower()
    if name == "fdk":
        return fbp_reconstruct(sino, cfg.fbp_filter)
    if name in ("art", "sart", "sirt"):
        opts = algebraic_options or AlgebraicOptions(name.upper())
        if opts.method != name.upper():
            raise UsageError(f"algebraic options are for {opts.method}, not {name}")
        return algebraic_reconstruct(sino, opts)
    if name == "cs":
        return cs_reconstruct(sino, SparsifyingTransform(sino.geometry.image_shape), cfg.cs)
    if name in ("prior", "weighted-prior"):
        if templates is None:
            raise UsageError(f"method {name!r} needs templates")
        if name == "prior":
            return plain_prior_reconstruct(sino, templates, cfg).image
        return weighted_prior_reconstruct(sino, templates, cfg).image
    raise UsageError(f"unknown method {method!r}; expected one of {RECON_METHODS}")
