import numpy as np
import pytest

from _support import image_rmse
from weightedprior.algebraic import AlgebraicOptions
from weightedprior.analytic import fbp_reconstruct
from weightedprior.cs import CsOptions
from weightedprior.grid import ValidationError
from weightedprior.phantom import generate_longitudinal_dataset, potato_spec
from weightedprior.pipeline import (
    ReconConfig,
    UsageError,
    plain_prior_reconstruct,
    reconstruct,
    weighted_prior_reconstruct,
)
from weightedprior.prior import build_eigenspace, project_onto_eigenspace
from weightedprior.projector import GeometryError, forward_project, parallel_geometry
from weightedprior.weights import PilotMethod

SIZE = 48
FAST = ReconConfig(
    cs_options=CsOptions(max_iterations=80),
    pilot_methods=(PilotMethod("FBP"), PilotMethod("SIRT", AlgebraicOptions("SIRT", 40)),
                   PilotMethod("CS", CsOptions(0.5, 80))),
    outer_iterations=3,
)


def with_changes(cfg, **changes):
    fields = dict(lambda1=cfg.lambda1, lambda2=cfg.lambda2, k=cfg.k, smoothing_sigma=cfg.smoothing_sigma,
                  outer_iterations=cfg.outer_iterations, cs_options=cfg.cs_options,
                  pilot_methods=cfg.pilot_methods)
    fields.update(changes)
    return ReconConfig(**fields)


@pytest.fixture(scope="module")
def case():
    ds = generate_longitudinal_dataset(potato_spec(size=SIZE, n_templates=3, seed=0))
    geom = parallel_geometry((SIZE, SIZE), 30, 360)
    return ds, forward_project(ds.test, geom)


@pytest.fixture(scope="module")
def weighted(case):
    ds, sino = case
    return weighted_prior_reconstruct(sino, ds.templates, FAST)


def test_lambda2_zero_matches_cs(case):
    ds, sino = case
    tight = CsOptions(max_iterations=3000, tolerance=1e-12)
    cfg = with_changes(FAST, lambda2=0.0, cs_options=tight, outer_iterations=1)
    ours = plain_prior_reconstruct(sino, ds.templates, cfg).image
    cs = reconstruct("cs", sino, cfg=cfg)
    assert image_rmse(ours, cs) < 1e-3


def test_objective_is_non_increasing(weighted):
    obj = np.array(weighted.diagnostics.objective)
    assert len(obj) >= 2
    assert np.all(np.diff(obj) <= 1e-9 * np.abs(obj[:-1]))


def test_diagnostics_table(weighted):
    lines = weighted.diagnostics.table().splitlines()
    assert lines[0].split("\t") == ["iteration", "data", "sparsity", "prior", "total"]
    first = [float(v) for v in lines[1].split("\t")]
    assert first[0] == 0
    assert first[4] == pytest.approx(sum(first[1:4]), rel=1e-9)


def test_weights_are_low_on_the_change(weighted, case):
    ds, _ = case
    from weightedprior.grid import roi_mask

    w = weighted.weights
    inside = roi_mask(w.shape, ds.new_regions)
    assert np.all((w > 0) & (w <= 1))
    assert w[inside].mean() < w[~inside].mean()


def test_dispatch(case, weighted):
    ds, sino = case
    np.testing.assert_array_equal(reconstruct("fdk", sino), fbp_reconstruct(sino))
    np.testing.assert_array_equal(reconstruct("weighted-prior", sino, ds.templates, FAST), weighted.image)
    sirt = reconstruct("sirt", sino, algebraic_options=AlgebraicOptions("SIRT", 5))
    assert sirt.shape == (SIZE, SIZE)


def test_unknown_method(case):
    _, sino = case
    with pytest.raises(UsageError):
        reconstruct("mlem", sino)
    with pytest.raises(UsageError):
        reconstruct("prior", sino)


def test_deterministic(case, weighted):
    ds, sino = case
    again = weighted_prior_reconstruct(sino, ds.templates, FAST)
    assert again.image.tobytes() == weighted.image.tobytes()
    assert again.weights.tobytes() == weighted.weights.tobytes()


def test_plain_equals_weighted_when_weights_are_unity():
    ds = generate_longitudinal_dataset(potato_spec(size=SIZE, n_templates=3, seed=1, noise_sigma=0.0))
    geom = parallel_geometry((SIZE, SIZE), 30, 360)
    sino = forward_project(ds.templates[1], geom)
    w = weighted_prior_reconstruct(sino, ds.templates, FAST)
    assert np.max(1 - w.weights) < 1e-6
    p = plain_prior_reconstruct(sino, ds.templates, FAST)
    assert image_rmse(w.image, p.image) < 1e-3


def test_prior_dominated_limit(case):
    ds, sino = case
    cfg = with_changes(FAST, lambda1=0.0, lambda2=1e6, outer_iterations=1,
                       cs_options=CsOptions(max_iterations=500))
    x = plain_prior_reconstruct(sino, ds.templates, cfg).image
    _, expected = project_onto_eigenspace(build_eigenspace(ds.templates), fbp_reconstruct(sino))
    assert image_rmse(x, expected) < 1e-2


def test_geometry_mismatch(case):
    ds, _ = case
    sino = forward_project(np.zeros((SIZE + 2, SIZE + 2)), parallel_geometry((SIZE + 2, SIZE + 2), 8))
    with pytest.raises(GeometryError):
        plain_prior_reconstruct(sino, ds.templates, FAST)


@pytest.mark.parametrize("kwargs", [dict(lambda1=-1), dict(lambda2=-1), dict(k=0), dict(smoothing_sigma=-1),
                                    dict(outer_iterations=0), dict(eigen_rank_high=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        ReconConfig(**kwargs)


def test_weighted_mode_needs_two_pilots(case):
    ds, sino = case
    with pytest.raises(ValidationError):
        weighted_prior_reconstruct(sino, ds.templates, with_changes(FAST, pilot_methods=(PilotMethod("FBP"),)))
