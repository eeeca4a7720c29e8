"""Sparsifying transforms and proximal-gradient (FISTA) solvers.

Both solvers work on the coefficients ``theta`` of an orthonormal transform,
``x = Psi theta``, and minimise

    ||Phi x - y||^2 + lambda1 ||theta||_1 [+ lambda2 ||W (x - p)||^2]

with monotone FISTA (Beck & Teboulle, 2009): the accelerated step is only
accepted when it does not increase the objective, so the recorded objective
sequence is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .grid import ValidationError, as_image
from .projector import GeometryError, Sinogram, back_project, forward_project, operator_norm

LIPSCHITZ_SAFETY = 1.05


@dataclass(frozen=True)
class SparsifyingTransform:
    """Orthonormal analysis/synthesis pair on a ``shape`` grid."""

    shape: tuple[int, int]
    kind: str = "DCT2"

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in ("DCT2", "IDENTITY"):
            raise ValidationError(f"unknown transform {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    def _check(self, arr: np.ndarray) -> None:
        if arr.shape != self.shape:
            raise GeometryError(f"array shape {arr.shape} != transform shape {self.shape}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Analysis: ``theta = Psi^T x``."""
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        if self.kind == "IDENTITY":
            return x.copy()
        return fft.dctn(x, type=2, norm="ortho")

    def inverse(self, theta: np.ndarray) -> np.ndarray:
        """Synthesis: ``x = Psi theta``."""
        theta = np.asarray(theta, dtype=np.float64)
        self._check(theta)
        if self.kind == "IDENTITY":
            return theta.copy()
        return fft.idctn(theta, type=2, norm="ortho")


def transform_forward(x, t: SparsifyingTransform) -> np.ndarray:
    return t.forward(as_image(x))


def transform_inverse(theta, t: SparsifyingTransform) -> np.ndarray:
    return t.inverse(theta)


@dataclass(frozen=True)
class CsOptions:
    lambda1: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5
    lipschitz_power_iters: int = 30

    def __post_init__(self):
        if not self.lambda1 >= 0:
            raise ValidationError(f"lambda1 must be non-negative, got {self.lambda1}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.lipschitz_power_iters < 1:
            raise ValidationError("lipschitz_power_iters must be positive")


@dataclass
class SolverTrace:
    """Objective value after every FISTA iteration (index 0 is the start)."""

    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


class _WeightedPriorProblem:
    """Smooth part ``||Phi Psi theta - y||^2 + lambda2 ||W (Psi theta - p)||^2``."""

    def __init__(self, sino, transform, lambda2=0.0, prior=None, weights=None):
        self.sino = sino
        self.geom = sino.geometry
        self.t = transform
        self.lambda2 = float(lambda2)
        self.prior = prior
        self.w2 = None if weights is None else np.asarray(weights, dtype=np.float64) ** 2

    def value(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        x = self.t.inverse(theta)
        resid = forward_project(x, self.geom).data - self.sino.data
        val = float(np.sum(resid * resid))
        if self.lambda2 > 0:
            diff = x - self.prior
            val += self.lambda2 * float(np.sum(self.w2 * diff * diff))
        return val, resid

    def gradient(self, theta: np.ndarray, resid: np.ndarray) -> np.ndarray:
        grad_x = 2.0 * back_project(Sinogram(self.geom, resid))
        if self.lambda2 > 0:
            grad_x += 2.0 * self.lambda2 * self.w2 * (self.t.inverse(theta) - self.prior)
        return self.t.forward(grad_x)

    def lipschitz(self, power_iters: int) -> float:
        sigma = operator_norm(self.geom, power_iters)
        lip = 2.0 * sigma**2
        if self.lambda2 > 0:
            lip += 2.0 * self.lambda2 * float(self.w2.max())
        return LIPSCHITZ_SAFETY * lip


def _fista(problem, lambda1, opts, theta0, trace):
    lip = problem.lipschitz(opts.lipschitz_power_iters)
    if lip == 0.0:
        trace.objective.append(problem.value(theta0)[0] + lambda1 * np.abs(theta0).sum())
        return theta0
    step = 1.0 / lip

    def objective(theta):
        smooth, resid = problem.value(theta)
        return smooth + lambda1 * float(np.abs(theta).sum()), resid

    x_prev = theta0.copy()
    f_prev, _ = objective(x_prev)
    trace.objective.append(f_prev)
    yk = x_prev.copy()
    tk = 1.0
    for it in range(opts.max_iterations):
        _, resid_y = problem.value(yk)
        z = soft_threshold(yk - step * problem.gradient(yk, resid_y), step * lambda1)
        f_z, _ = objective(z)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        if f_z <= f_prev:
            x_new, f_new = z, f_z
        else:
            x_new, f_new = x_prev, f_prev
        yk = x_new + (tk / t_next) * (z - x_new) + ((tk - 1.0) / t_next) * (x_new - x_prev)
        tk = t_next
        trace.objective.append(f_new)
        trace.iterations = it + 1
        accepted = x_new is z
        rel = abs(f_prev - f_new) / max(abs(f_new), np.finfo(float).tiny)
        x_prev, f_prev = x_new, f_new
        if accepted and rel < opts.tolerance:
            trace.converged = True
            break
    return x_prev


def cs_reconstruct(
    sino: Sinogram,
    transform: SparsifyingTransform | None = None,
    opts: CsOptions = CsOptions(),
    initial=None,
    trace: SolverTrace | None = None,
) -> np.ndarray:
    """Compressed-sensing reconstruction, ``min ||Phi Psi theta - y||^2 + lambda1 ||theta||_1``."""
    geom = sino.geometry
    if transform is None:
        transform = SparsifyingTransform(geom.image_shape)
    if transform.shape != geom.image_shape:
        raise GeometryError("transform shape does not match the geometry")
    problem = _WeightedPriorProblem(sino, transform)
    theta0 = np.zeros(geom.image_shape) if initial is None else transform.forward(as_image(initial))
    theta = _fista(problem, opts.lambda1, opts, theta0, trace if trace is not None else SolverTrace())
    return transform.inverse(theta)


def solve_theta_subproblem(
    sino: Sinogram,
    transform: SparsifyingTransform | None,
    prior_estimate,
    weights,
    lambda1: float,
    lambda2: float,
    opts: CsOptions = CsOptions(),
    initial=None,
    trace: SolverTrace | None = None,
) -> np.ndarray:
    """Sparse-coefficient step of the weighted-prior objective with the prior fixed.

    Minimises ``||Phi Psi theta - y||^2 + lambda1 ||theta||_1
    + lambda2 ||W (Psi theta - p)||^2`` where ``p`` is ``prior_estimate``.
    ``opts.lambda1`` is ignored in favour of the explicit ``lambda1``.
    """
    if not lambda1 >= 0 or not lambda2 >= 0:
        raise ValidationError(f"lambdas must be non-negative, got {lambda1}, {lambda2}")
    geom = sino.geometry
    if transform is None:
        transform = SparsifyingTransform(geom.image_shape)
    prior = as_image(prior_estimate, "prior_estimate")
    w = as_image(weights, "weights")
    if prior.shape != geom.image_shape or w.shape != geom.image_shape:
        raise GeometryError("prior and weights must match the geometry")
    if transform.shape != geom.image_shape:
        raise GeometryError("transform shape does not match the geometry")
    problem = _WeightedPriorProblem(sino, transform, lambda2, prior, w)
    theta0 = np.zeros(geom.image_shape) if initial is None else transform.forward(as_image(initial))
    theta = _fista(problem, lambda1, opts, theta0, trace if trace is not None else SolverTrace())
    return transform.inverse(theta)


def weighted_prior_objective(
    x, sino: Sinogram, transform: SparsifyingTransform, prior_estimate, weights,
    lambda1: float, lambda2: float,
) -> tuple[float, float, float]:
    """Return the (data, sparsity, prior) terms of the weighted-prior objective at ``x``."""
    x = as_image(x)
    resid = forward_project(x, sino.geometry).data - sino.data
    data = float(np.sum(resid * resid))
    sparsity = lambda1 * float(np.abs(transform.forward(x)).sum())
    diff = np.asarray(weights) * (x - prior_estimate)
    prior = lambda2 * float(np.sum(diff * diff))
    return data, sparsity, prior
