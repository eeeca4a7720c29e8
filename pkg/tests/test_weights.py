import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weightedprior.algebraic import AlgebraicOptions
from weightedprior.grid import ValidationError, load_raster, roi_mask
from weightedprior.phantom import generate_longitudinal_dataset, potato_spec
from weightedprior.prior import DegenerateSpanError, build_eigenspace
from weightedprior.projector import Sinogram, forward_project, parallel_geometry
from weightedprior.weights import (
    PilotMethod,
    PilotMethodError,
    PilotSet,
    build_pilot_set,
    compute_weight_map,
    default_pilot_methods,
    difference_maps,
    dump_difference_maps,
    simulate_template_sinograms,
    weights_from_difference,
)

FAST_METHODS = (PilotMethod("FBP"), PilotMethod("SIRT", AlgebraicOptions("SIRT", 30)))


def manual_pilots(tests, projections):
    """PilotSet with hand-written X^j and P^j; eigenspaces are placeholders."""
    shape = tests[0].shape
    rng = np.random.default_rng(0)
    templates = [rng.random(shape) for _ in range(2)]
    space = build_eigenspace(templates)
    m = len(tests)
    return PilotSet(tuple(f"M{j}" for j in range(m)), list(tests), [templates] * m, [space] * m,
                    list(projections))


@pytest.fixture(scope="module")
def potato64():
    ds = generate_longitudinal_dataset(potato_spec(size=64, n_templates=3, seed=0))
    geom = parallel_geometry((64, 64), 45, 360)
    return ds, geom


def test_simulated_sinograms_match_forward_projection(potato64):
    ds, geom = potato64
    sinos = simulate_template_sinograms(ds.templates, geom)
    assert len(sinos) == len(ds.templates)
    for s, t in zip(sinos, ds.templates):
        assert s.geometry == geom
        assert s.data.tobytes() == forward_project(t, geom).data.tobytes()


def test_zero_template_gives_zero_sinogram():
    geom = parallel_geometry((8, 8), 4)
    (s,) = simulate_template_sinograms([np.zeros((8, 8))], geom)
    assert not s.data.any()


def test_sparse_subset_rows():
    geom = parallel_geometry((16, 16), 45, 900)
    sinos = simulate_template_sinograms([np.ones((16, 16))] * 2, geom)
    assert all(s.data.shape[0] == 45 for s in sinos)


def test_test_equal_to_template_lies_in_span(potato64):
    ds, geom = potato64
    templates = ds.templates[:3]
    sinos = simulate_template_sinograms(templates, geom)
    pilots = build_pilot_set(sinos[0], sinos, FAST_METHODS)
    assert pilots.methods == ("FBP", "SIRT")
    for x, p in zip(pilots.test_pilots, pilots.projections):
        assert np.max(np.abs(x - p)) < 1e-6
    w = compute_weight_map(pilots)
    assert np.mean(1 - w) < 0.05


def test_single_method_rejected(potato64):
    ds, geom = potato64
    sinos = simulate_template_sinograms(ds.templates, geom)
    with pytest.raises(ValidationError):
        build_pilot_set(sinos[0], sinos, FAST_METHODS[:1])


def test_duplicate_methods_rejected(potato64):
    ds, geom = potato64
    sinos = simulate_template_sinograms(ds.templates, geom)
    with pytest.raises(ValidationError):
        build_pilot_set(sinos[0], sinos, (PilotMethod("FBP"), PilotMethod("fbp")))


def test_method_failure_names_the_method():
    geom = parallel_geometry((8, 8), 1)
    rng = np.random.default_rng(0)
    sinos = [Sinogram(geom, rng.random(geom.sinogram_shape)) for _ in range(3)]
    with pytest.raises(PilotMethodError) as info:
        build_pilot_set(sinos[0], sinos[1:], (PilotMethod("SIRT", AlgebraicOptions("SIRT", 2)), PilotMethod("FBP")))
    assert info.value.method == "FBP"


def test_identical_templates_are_degenerate():
    geom = parallel_geometry((8, 8), 4)
    sino = forward_project(np.ones((8, 8)), geom)
    with pytest.raises(DegenerateSpanError):
        build_pilot_set(sino, [sino, sino], FAST_METHODS)


def test_defect_is_elevated_in_every_difference_map(potato64):
    ds, geom = potato64
    test_sino = forward_project(ds.test, geom)
    pilots = build_pilot_set(test_sino, simulate_template_sinograms(ds.templates, geom),
                             default_pilot_methods())
    inside = roi_mask(ds.test.shape, ds.new_regions)
    for ident, d in zip(pilots.methods, difference_maps(pilots)):
        assert d[inside].mean() > 3 * d[~inside].mean(), ident
    w = compute_weight_map(pilots)
    assert w[inside].mean() < w[~inside].mean() - 0.1


def test_no_difference_gives_unit_weights():
    x = np.random.default_rng(1).random((6, 6)) + 0.5
    w = compute_weight_map(manual_pilots([x, 2 * x], [x, 2 * x]))
    np.testing.assert_array_equal(w, 1.0)


def test_direct_formula_single_voxel():
    x = np.ones((5, 5))
    p = x.copy()
    p[2, 3] = 0.0
    w = compute_weight_map(manual_pilots([x, x], [p, p]), k=3, smoothing_sigma=0)
    assert w[2, 3] == pytest.approx(0.25)
    w[2, 3] = 1.0
    np.testing.assert_array_equal(w, 1.0)


def test_minimum_suppresses_single_method_artefacts():
    x = np.ones((5, 5))
    artefact = x.copy()
    artefact[1, 1] = 0.0
    w = compute_weight_map(manual_pilots([x, x], [artefact, x]), k=20, smoothing_sigma=0)
    np.testing.assert_array_equal(w, 1.0)


def test_per_method_normalisation():
    # the same relative change seen at two intensity scales gives the same d
    x = np.ones((5, 5))
    p = x.copy()
    p[0, 0] = 0.5
    d = difference_maps(manual_pilots([x, 10 * x], [p, 10 * p]))
    np.testing.assert_allclose(d[0], d[1])


def test_smoothing_spreads_but_preserves_range():
    x = np.ones((9, 9))
    p = x.copy()
    p[4, 4] = 0.0
    pilots = manual_pilots([x, x], [p, p])
    sharp = compute_weight_map(pilots, smoothing_sigma=0)
    smooth = compute_weight_map(pilots, smoothing_sigma=1.0)
    assert smooth[4, 4] > sharp[4, 4]
    assert smooth[4, 5] < 1.0
    assert np.all((smooth > 0) & (smooth <= 1))


@pytest.mark.parametrize("k", [0.0, -1.0])
def test_non_positive_k_rejected(k):
    x = np.ones((3, 3))
    with pytest.raises(ValidationError):
        compute_weight_map(manual_pilots([x, x], [x, x]), k=k)


nonneg = arrays(np.float64, (4, 4), elements=st.floats(0, 1e6, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(nonneg, nonneg, st.floats(1e-3, 1e3))
def test_weights_are_bounded_and_antitone(d1, extra, k):
    d2 = d1 + extra
    w1, w2 = weights_from_difference(d1, k), weights_from_difference(d2, k)
    assert np.all((w1 > 0) & (w1 <= 1)) and np.all((w2 > 0) & (w2 <= 1))
    assert np.all(w1 >= w2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_min_is_dominated_by_every_map(seed):
    rng = np.random.default_rng(seed)
    tests = [rng.random((5, 5)) + 0.1 for _ in range(3)]
    projs = [rng.random((5, 5)) for _ in range(3)]
    pilots = manual_pilots(tests, projs)
    maps = difference_maps(pilots)
    d = np.min(maps, axis=0)
    for m in maps:
        assert np.all(d <= m)
    w = compute_weight_map(pilots, k=5, smoothing_sigma=0)
    np.testing.assert_allclose(w, 1 / (1 + 5 * d))


def test_dump_difference_maps(tmp_path):
    x = np.ones((4, 4))
    p = x.copy()
    p[0, 0] = 0.0
    paths = dump_difference_maps(manual_pilots([x, x], [p, x]), tmp_path)
    assert [q.name for q in paths] == ["difference_m0.tpr", "difference_m1.tpr"]
    assert load_raster(paths[0])[0, 0] == 1.0


def test_default_ensemble():
    assert [m.identifier for m in default_pilot_methods()] == ["FBP", "SIRT", "SART", "CS"]
    with pytest.raises(ValidationError):
        PilotMethod("MLEM")
