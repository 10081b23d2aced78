import math

import numpy as np
import pytest
from scipy import stats as sps

from ssmp_williams import williams as wl
from ssmp_williams.core import DomainError
from ssmp_williams.stable_cond import StableParams

CAUCHY2 = StableParams(1.0, 2)


def test_spec_validation():
    with pytest.raises(DomainError):
        wl.ClassicalBM(0.0)
    with pytest.raises(DomainError):
        wl.DecompositionSpec(wl.Stable(CAUCHY2), [0.0, 0.0], 1.0, 1e-3, 10)
    with pytest.raises(DomainError):
        wl.DecompositionSpec(wl.Stable(CAUCHY2), [1.0, 0.0, 0.0], 1.0, 1e-3, 10)
    with pytest.raises(DomainError):
        wl.DecompositionSpec(wl.ClassicalBM(0.5), 0.0, 1.0, 1e-3, 10, delta_offset=0.0)
    with pytest.raises(DomainError):
        wl.DecompositionSpec("bm", 0.0, 1.0, 1e-3, 10)


def test_classical_path_minimum_is_depth():
    dt = 1e-3
    for seed in range(5):
        cp = wl.construct_classical(0.5, 10.0, dt, seed)
        x = cp.path.xi
        assert x[0] == 0.0
        assert np.all(np.diff(cp.path.times) > 0)
        assert x.size == int(round(10.0 / dt)) + 1
        if math.isfinite(cp.gtime):
            assert abs(x.min() + cp.depth) <= 2 * math.sqrt(dt)
            # the post leg stays above -depth
            k = int(round(cp.gtime / dt))
            assert np.all(x[k + 1:] >= -cp.depth)


def test_classical_flipped_goes_below():
    cp = wl.construct_classical(0.5, 20.0, 1e-3, 3, variant="flipped")
    assert cp.path.xi.min() < -cp.depth
    with pytest.raises(DomainError):
        wl.construct_classical(0.5, 1.0, 1e-3, 3, variant="other")


def test_classical_seed_reproducible():
    a = wl.construct_classical(0.5, 2.0, 1e-3, 42)
    b = wl.construct_classical(0.5, 2.0, 1e-3, 42)
    assert np.array_equal(a.path.xi, b.path.xi)


def test_classical_depth_law():
    c = wl.classical_constructed_ensemble(0.5, 5000, 10.0, 1e-3, 1)
    assert sps.kstest(c["depth"], sps.expon().cdf).pvalue > 1e-3


def test_classical_ensembles_agree_small():
    c = wl.classical_constructed_ensemble(0.5, 3000, 10.0, 1e-3, 2)
    d = wl.classical_direct_ensemble(0.5, 3000, 10.0, 1e-3, 3)
    rep = wl.verify_decomposition(d, c, ["depth", "x_T", "gtime"], 0.06, seed=2)
    assert rep.passed, rep.details
    f = wl.classical_constructed_ensemble(0.5, 3000, 10.0, 1e-3, 4, variant="flipped")
    assert wl.functional_statistic(d, f, "depth")[0] > 0.1


def test_verify_identical_and_errors():
    rng = np.random.default_rng(0)
    e = {"a": rng.normal(size=500), "angle": rng.uniform(-3, 3, 500)}
    rep = wl.verify_decomposition(e, e, ["a", "angle"])
    assert rep.statistic == 0.0 and rep.passed
    with pytest.raises(DomainError):
        wl.verify_decomposition(e, e, [])
    with pytest.raises(DomainError):
        wl.verify_decomposition(e, {"a": np.array([])}, ["a"])


def test_verify_per_functional_thresholds():
    rng = np.random.default_rng(1)
    a = {"x": rng.normal(size=2000), "y": rng.normal(size=2000)}
    b = {"x": rng.normal(size=2000), "y": rng.normal(0.3, 1, size=2000)}
    rep = wl.verify_decomposition(a, b, ["x", "y"], {"x": 0.05, "y": 0.5})
    assert rep.passed
    assert not wl.verify_decomposition(a, b, ["x", "y"], 0.05).passed


def test_conditional_independence_detects_dependence():
    rng = np.random.default_rng(2)
    n = 4000
    depth = rng.exponential(size=n)
    a = rng.normal(size=n)
    indep = {"depth": depth, "t_half": a, "gain": rng.normal(size=n)}
    dep = {"depth": depth, "t_half": a, "gain": a + rng.normal(size=n)}
    assert wl.conditional_independence(indep).passed
    assert not wl.conditional_independence(dep).passed


def test_classical_conditional_independence():
    c = wl.classical_constructed_ensemble(0.5, 5000, 10.0, 1e-3, 6)
    assert wl.conditional_independence(c).passed


def test_construct_stable_path():
    spec = wl.DecompositionSpec(wl.Stable(CAUCHY2), [1.0, 0.0], 2.0, 1e-3, 1, seed=3)
    path = wl.construct_stable(spec)
    pts = path.points[: path.n_live]
    xs = np.array(path.meta["xstar"])
    assert np.all(np.diff(path.times) > 0)
    assert np.allclose(pts[0], [1.0, 0.0])
    slack = spec.smc.eta + spec.delta_offset
    assert np.linalg.norm(pts, axis=1).min() >= np.linalg.norm(xs) * (1 - slack)
    assert np.linalg.norm(xs) < 1.0
    with pytest.raises(DomainError):
        wl.construct_stable(wl.DecompositionSpec(wl.ClassicalBM(0.5), 0.0, 1.0, 1e-3, 1))


def test_stable_constructed_small():
    spec = wl.DecompositionSpec(wl.Stable(CAUCHY2), [1.0, 0.0], 10.0, 1e-3, 200, seed=4)
    direct, cons = wl.stable_ensembles(spec)
    assert cons["failed"] == 0
    assert np.all(cons["rmin"] <= np.linalg.norm(cons["xstar"], axis=1) + 1e-12)
    rep = wl.verify_decomposition(direct, cons, ["rmin", "r_T", "angle"], 0.15, seed=4)
    assert rep.passed, rep.details
    w = np.exp(cons["logz"])
    assert abs(w.mean() - 1) < 0.15
