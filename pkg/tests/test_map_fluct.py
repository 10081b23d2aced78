import math

import numpy as np
import pytest
from scipy import stats as sps

from ssmp_williams.core import DomainError, MapPath
from ssmp_williams.map_fluct import (MapModel, bm_pocr_ensemble, check_levy_occupation_identity,
                                     check_time_reversal, estimate_ladder_marginal, extract_excursions,
                                     pocr_from_path, running_minimum, simulate_map)
from ssmp_williams.sampling import SeedSpec
from ssmp_williams.stats import chi_square_counts, ks_two_sample


def _path(xi, dt=1.0):
    xi = np.asarray(xi, float)
    return MapPath(np.arange(xi.size) * dt, xi, np.ones((xi.size, 1)))


def test_drift_lln():
    m = MapModel.bm_drift(0.5)
    T = 10.0
    v = np.array([simulate_map(m, T, 0.01, SeedSpec(1, i)).xi[-1] / T for i in range(10**4)])
    assert abs(v.mean() - 0.5) < 3 * (1 / math.sqrt(T)) / 100


def test_degenerate_mmbm_matches_bm():
    Q = np.array([[-1.0, 1.0], [1.0, -1.0]])
    mm = MapModel.mmbm(Q, [0.5, 0.5], [1.0, 1.0])
    bm = MapModel.bm_drift(0.5)
    a = np.array([simulate_map(mm, 1.0, 0.05, SeedSpec(2, i)).xi[-1] for i in range(10**4)])
    b = np.array([simulate_map(bm, 1.0, 0.05, SeedSpec(3, i)).xi[-1] for i in range(10**4)])
    assert ks_two_sample(a, b)[0] < 0.02


def test_deterministic_path():
    p = simulate_map(MapModel.bm_drift(1.0, 0.0), 2.0, 0.1, 0)
    np.testing.assert_allclose(p.xi, p.times, atol=1e-12)


def test_mmbm_validation():
    with pytest.raises(DomainError):
        MapModel.mmbm(np.array([[-1.0, 1.0], [0.0, 0.0]]), [0, 0], [1, 1])
    with pytest.raises(DomainError):
        MapModel.mmbm(np.array([[-1.0, 1.0], [1.0, -1.0]]), [0, 0], [1, 0])


def test_running_minimum_examples():
    mins, g, st = running_minimum(_path([0.0, 1.0, 2.0, 3.0]))
    assert g == 0.0 and mins[-1] == 0.0
    mins, g, st = running_minimum(_path([0.0, -1.0, -0.5, -1.0]))
    assert mins[-1] == -1.0 and g == 3.0


def test_u_nonnegative(rng):
    p = _path(np.cumsum(rng.standard_normal(500)))
    mins, _, _ = running_minimum(p)
    assert np.all(p.xi - mins >= 0)


def test_pocr_deterministic():
    s = pocr_from_path(_path(np.linspace(0, 10, 101), 0.1), 8.0)
    assert s.depth == 0.0 and s.gtime == 0.0
    assert pocr_from_path(_path(np.linspace(0, 5, 51), 0.1), 8.0) is None


def test_depth_survival_mu1():
    r = bm_pocr_ensemble(1.0, 1.0, 10**4, 30.0, 1e-3, 8.0, 11)
    assert abs((r["depth"][r["ok"]] > 1).mean() - math.exp(-2)) < 0.01


def test_no_excursions_when_decreasing():
    assert extract_excursions(_path([0.0, -1.0, -2.0, -3.0])) == []


def test_v_shape_excursion():
    ex = extract_excursions(_path([0.0, -1.0, -2.0, -1.0, 0.0]))
    assert len(ex) == 1
    assert (ex[0].start_time, ex[0].end_time, ex[0].complete) == (2.0, 4.0, False)
    np.testing.assert_allclose(ex[0].heights, [0.0, 1.0, 2.0])


def test_excursions_partition(rng):
    dt = 0.01
    p = _path(np.cumsum(rng.standard_normal(2000)) * 0.1, dt)
    ex = extract_excursions(p)
    u = p.xi - np.minimum.accumulate(p.xi)
    at_min = np.sum((u[:-1] == 0) & (u[1:] == 0)) * dt
    assert sum(e.length for e in ex) + at_min == pytest.approx(p.times[-1])
    assert all(np.all(e.heights[1:-1] > 0) for e in ex if e.complete)


def test_ladder_depth_histogram_chi2():
    mu = 0.5
    edges = np.concatenate([np.linspace(0, 4, 20), [np.inf]])
    h = estimate_ladder_marginal(MapModel.bm_drift(mu), 20000, 40.0, 1e-2, 8.0, 5, depth_edges=edges)
    probs = np.diff(sps.expon(scale=1 / (2 * mu)).cdf(edges))
    assert chi_square_counts(h.counts[:, 0], probs)[1] > 0.01
    assert h.counts.sum() == h.normalization
    assert h.angle_marginal.sum() == pytest.approx(1.0)


def test_ladder_symmetric_mmbm_angle():
    Q = np.array([[-1.0, 1.0], [1.0, -1.0]])
    m = MapModel.mmbm(Q, [1.0, 1.0], [1.0, 1.0])
    h = estimate_ladder_marginal(m, 6000, 20.0, 0.05, 8.0, 6)
    np.testing.assert_allclose(h.angle_marginal, [0.5, 0.5], atol=0.02)


def test_occupation_zero_function():
    r = check_levy_occupation_identity(0.5, lambda y: np.zeros_like(y, dtype=float), 200, 50.0, 1e-2, 1)
    assert r["lhs_normalised"] == 0.0 and r["rhs_normalised"] == 0.0
    assert all(rep.passed for rep in r["reports"])


def test_occupation_exp_rhs_value():
    # analytic RHS: E[exp(-depth)] with depth ~ Exp(1) is 1/2
    r = check_levy_occupation_identity(0.5, lambda y: np.exp(-y), 200, 50.0, 1e-2, 1)
    assert r["rhs_normalised"] == pytest.approx(0.5, rel=1e-10)


def test_time_reversal_degenerate():
    reps = check_time_reversal(MapModel.bm_drift(1.0, 0.0), 1.0, 100, 1e-2, 0)
    assert all(r.statistic == 0.0 for r in reps)


def test_time_reversal_small():
    reps = check_time_reversal(MapModel.bm_drift(0.5), 1.0, 4000, 1e-2, 3, threshold=0.05)
    assert all(r.passed for r in reps)
