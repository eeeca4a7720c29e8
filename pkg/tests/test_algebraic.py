import numpy as np
import pytest

from _support import consistent_system, image_rmse, smooth_disk
from weightedprior.algebraic import AlgebraicOptions, algebraic_reconstruct
from weightedprior.grid import ValidationError
from weightedprior.projector import Sinogram, forward_project, parallel_geometry


@pytest.fixture(scope="module")
def system():
    return consistent_system(seed=0)


def test_sirt_reaches_tiny_residual(system):
    geom, truth, sino, lstsq, a = system
    x = algebraic_reconstruct(sino, AlgebraicOptions("SIRT", 500))
    resid = np.linalg.norm(a @ x.ravel() - sino.data.ravel()) / np.linalg.norm(sino.data)
    assert resid < 1e-3
    assert image_rmse(x, lstsq) < 1e-2


@pytest.mark.parametrize("method, iterations", [("ART", 200), ("SART", 300), ("SIRT", 500)])
def test_methods_agree_with_least_squares(system, method, iterations):
    _, _, sino, lstsq, _ = system
    x = algebraic_reconstruct(sino, AlgebraicOptions(method, iterations))
    assert image_rmse(x, lstsq) < 2e-2


@pytest.mark.parametrize("method", ["ART", "SART", "SIRT"])
def test_zero_is_a_fixed_point(method):
    geom = parallel_geometry((8, 8), 6)
    x = algebraic_reconstruct(Sinogram(geom, np.zeros(geom.sinogram_shape)), AlgebraicOptions(method, 3))
    assert not x.any()


def test_sirt_residual_is_monotone_on_disk():
    size = 64
    geom = parallel_geometry((size, size), 45, 360)
    sino = forward_project(smooth_disk(size), geom)
    residuals = []

    def record(it, x):
        residuals.append(np.linalg.norm(forward_project(x.reshape(geom.image_shape), geom).data - sino.data))

    algebraic_reconstruct(sino, AlgebraicOptions("SIRT", 60, 1.0), callback=record)
    assert len(residuals) == 60
    assert np.all(np.diff(residuals) <= 1e-9 * residuals[0])


@pytest.mark.parametrize("method", ["ART", "SART", "SIRT"])
def test_deterministic(method):
    geom = parallel_geometry((16, 16), 9)
    sino = forward_project(np.random.default_rng(1).random((16, 16)), geom)
    a = algebraic_reconstruct(sino, AlgebraicOptions(method, 5))
    b = algebraic_reconstruct(sino, AlgebraicOptions(method, 5))
    assert a.tobytes() == b.tobytes()


def test_initial_image_is_a_fixed_point_when_consistent(system):
    _, truth, sino, _, _ = system
    x = algebraic_reconstruct(sino, AlgebraicOptions("SIRT", 5, initial=truth))
    np.testing.assert_allclose(x, truth, atol=1e-12)


def test_nonnegative_clamp():
    geom = parallel_geometry((8, 8), 4)
    sino = Sinogram(geom, -np.ones(geom.sinogram_shape))
    x = algebraic_reconstruct(sino, AlgebraicOptions("SIRT", 3, nonnegative=True))
    assert x.min() >= 0


@pytest.mark.parametrize("kwargs", [dict(relaxation=0.0), dict(relaxation=2.0), dict(method="KACZ"),
                                    dict(iterations=0)])
def test_invalid_options(kwargs):
    with pytest.raises(ValidationError):
        AlgebraicOptions(**kwargs)


def test_default_budgets():
    assert AlgebraicOptions("ART").iterations == 10
    assert AlgebraicOptions("SART").iterations == 20
    assert AlgebraicOptions("SIRT").iterations == 100
