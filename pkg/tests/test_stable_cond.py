import math

import numpy as np
import pytest
from scipy import integrate, special

from ssmp_williams.core import Angle, DomainError, SsmpPath
from ssmp_williams.sampling import SeedSpec
from ssmp_williams.stable_cond import (Down, Patch, Point, StableParams, Up, bessel3_survival,
                                       check_harmonicity_hdown, check_martingale_up, doob_weight, h_down,
                                       h_down_full_sphere, h_up, h_up_limit, pocr_constant, pocr_density,
                                       pocr_radius_cdf, pocr_radius_density, sample_pocr, simulate_conditioned,
                                       simulate_stable)
from ssmp_williams.stats import chi_square_density_fit, ks_two_sample

CAUCHY2 = StableParams(1.0, 2)


def _rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def test_params_validation():
    with pytest.raises(DomainError):
        StableParams(2.0, 2)
    with pytest.raises(DomainError):
        StableParams(2.5, 3)
    StableParams(2.0, 3)


def test_bm_quadratic_martingale():
    p = StableParams(2.0, 3)
    x0 = np.array([1.0, 0.5, -0.2])
    t = 1.0
    v = np.array([np.sum(simulate_stable(p, x0, t, 0.05, SeedSpec(4, i)).points[-1] ** 2) for i in range(4000)])
    v -= x0 @ x0 + 3 * t
    assert abs(v.mean()) < 3 * v.std() / math.sqrt(v.size)


def test_increment_isotropy():
    x0 = np.array([1.0, 0.0])
    ang = np.array([math.atan2(*(simulate_stable(CAUCHY2, x0, 0.01, 0.01, SeedSpec(5, i)).points[1] - x0)[::-1])
                    for i in range(6000)])
    bins = np.linspace(-math.pi, math.pi, 13)
    assert chi_square_density_fit(ang, bins, bin_masses=np.full(12, 1 / 12))[1] > 0.01


def test_self_similarity():
    a, c, t = 1.0, 2.0, 0.5
    x0 = np.array([1.0, 0.0])
    r1 = [c * np.linalg.norm(simulate_stable(CAUCHY2, x0, c ** -a * t, 1e-2 * c ** -a, SeedSpec(6, i)).points[-1])
          for i in range(10**4)]
    r2 = [np.linalg.norm(simulate_stable(CAUCHY2, c * x0, t, 1e-2, SeedSpec(7, i)).points[-1]) for i in range(10**4)]
    assert ks_two_sample(r1, r2)[0] < 0.02


def test_pocr_constant_cauchy_plane():
    assert pocr_constant(CAUCHY2) == pytest.approx(math.pi ** -2, rel=1e-14)
    g = special.gamma
    assert pocr_constant(StableParams(1.5, 3)) == pytest.approx(
        math.pi ** -1.5 * g(1.5) ** 2 / (g(0.75) * g(0.75)), rel=1e-14)


def test_pocr_density_normalisation():
    x = np.array([1.0, 0.0])
    inner = lambda r: r * integrate.quad(lambda t: pocr_density(x, [r * math.cos(t), r * math.sin(t)], CAUCHY2),
                                         -math.pi, math.pi, points=[0.0], limit=400)[0]
    total = integrate.quad(inner, 0, 1, limit=400)[0]
    assert abs(total - 1.0) < 1e-3


def test_pocr_density_rotation_invariance(rng):
    for _ in range(20):
        x = rng.standard_normal(2) * 3
        y = x * rng.uniform(0.1, 0.9) + rng.standard_normal(2) * 0.1
        if np.linalg.norm(y) >= np.linalg.norm(x):
            continue
        R = _rot(rng.uniform(0, 2 * math.pi))
        assert pocr_density(R @ x, R @ y, CAUCHY2) == pytest.approx(pocr_density(x, y, CAUCHY2), rel=1e-12)


def test_pocr_density_domain():
    with pytest.raises(DomainError):
        pocr_density([1.0, 0.0], [1.5, 0.0], CAUCHY2)
    with pytest.raises(DomainError):
        pocr_density([1.0, 0.0], [0.0, 0.0], CAUCHY2)


def test_radius_density_against_angular_quadrature():
    x = np.array([1.0, 0.0])
    for u in (0.2, 0.5, 0.9):
        num = u * integrate.quad(lambda t: pocr_density(x, [u * math.cos(t), u * math.sin(t)], CAUCHY2),
                                 -math.pi, math.pi, points=[0.0], limit=400)[0]
        assert pocr_radius_density(u, CAUCHY2) == pytest.approx(num, rel=1e-7)
    # cdf is consistent with the density
    assert float(pocr_radius_cdf(0.6, CAUCHY2)) == pytest.approx(
        integrate.quad(lambda v: pocr_radius_density(v, CAUCHY2), 0, 0.6)[0], rel=1e-8)


def test_sample_pocr_radius_chi2():
    x = np.array([1.0, 0.0])
    y = sample_pocr(x, CAUCHY2, 9, n=10**4)
    u = np.linalg.norm(y, axis=1)
    assert np.all(u < 1.0)
    bins = np.linspace(0, 1, 21)
    assert chi_square_density_fit(u, bins, lambda v: pocr_radius_density(v, CAUCHY2))[1] > 0.01
    ang = np.arctan2(y[:, 1], y[:, 0])
    assert abs(ang.mean()) < 3 * ang.std() / math.sqrt(ang.size)


def test_sample_pocr_d3_radius():
    p = StableParams(1.5, 3)
    x = np.array([0.0, 2.0, 0.0])
    y = sample_pocr(x, p, 10, n=5000)
    u = np.linalg.norm(y, axis=1) / 2.0
    bins = np.linspace(0, 1, 11)
    assert chi_square_density_fit(u, bins, bin_masses=np.diff(pocr_radius_cdf(bins, p)))[1] > 0.01


def test_h_down_vanishes_at_sphere():
    tgt = Point(Angle([0.0, 1.0]))
    vals = [h_down([1 + e, 0.0], tgt, CAUCHY2) for e in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-2


def test_h_down_near_side_larger():
    tgt = Point(Angle([1.0, 0.0]))
    assert h_down([2.0, 0.0], tgt, CAUCHY2) > h_down([-2.0, 0.0], tgt, CAUCHY2)


def test_h_down_full_sphere_consistency():
    for x in ([1.5, 0.0], [0.3, -2.2]):
        patch = float(h_down(np.array(x), Patch.arc(-math.pi, math.pi), CAUCHY2))
        point = integrate.quad(lambda t: float(h_down(np.array(x), Point(Angle.from_radians(t)), CAUCHY2)),
                               -math.pi, math.pi, limit=200)[0] / (2 * math.pi)
        assert patch == pytest.approx(point, abs=1e-6)
        assert patch == pytest.approx(float(h_down_full_sphere(np.array(x), CAUCHY2)), rel=1e-8)


def test_h_down_domain():
    with pytest.raises(DomainError):
        h_down([0.5, 0.0], Point(Angle([1.0, 0.0])), CAUCHY2)


def test_h_up_values():
    assert float(h_up([1.0, 0.0], CAUCHY2)) == 0.0
    assert float(h_up([1.0, 1.0], CAUCHY2)) == pytest.approx(math.pi / 2, rel=1e-10)
    r = np.linspace(1.0, 50.0, 100)
    v = h_up(np.column_stack([r, np.zeros_like(r)]), CAUCHY2)
    assert np.all(np.diff(v) > 0)
    assert v[-1] < h_up_limit(CAUCHY2) == pytest.approx(math.pi, rel=1e-12)


def test_h_up_closed_forms_against_quadrature():
    for p, x in ((StableParams(1.0, 2), [3.0, 0.0]), (StableParams(2.0, 3), [0.0, 2.0, 0.0]),
                 (StableParams(0.7, 2), [1.7, 0.4])):
        r2 = float(np.dot(x, x))
        ref = integrate.quad(lambda u: (u + 1) ** (-p.d / 2) * u ** (p.alpha / 2 - 1), 0, r2 - 1, limit=200)[0]
        assert float(h_up(np.array(x), p)) == pytest.approx(ref, rel=1e-8)


def test_h_up_domain():
    with pytest.raises(DomainError):
        h_up([0.5, 0.0], CAUCHY2)


def test_doob_weight_trivial_cases():
    t = np.linspace(0, 1, 3)
    still = SsmpPath(t, np.tile([2.0, 0.0], (3, 1)), 1.0)
    assert doob_weight(still, Up(), 0.0, CAUCHY2).weight == 1.0
    assert doob_weight(still, Down(Point(Angle([1.0, 0.0]))), 0.0, CAUCHY2).weight == 1.0
    inside = SsmpPath(t, np.array([[2.0, 0.0], [0.5, 0.0], [2.0, 0.0]]), 1.0)
    w = doob_weight(inside, Up(), 0.0, CAUCHY2)
    assert w.weight == 0.0 and not w.alive


def test_doob_weight_martingale():
    x0 = np.array([2.0, 0.0])
    w = np.array([doob_weight(simulate_stable(CAUCHY2, x0, 0.5, 1e-3, SeedSpec(8, i)), Up(), 0.0, CAUCHY2).weight
                  for i in range(10**4)])
    assert abs(w.mean() - 1.0) < 3 * w.std() / math.sqrt(w.size)


def test_conditioned_up_never_inside():
    ens = simulate_conditioned([1.5, 0.0], Up(), 0.0, CAUCHY2, 0.5, 1e-2, 500, 3)
    r = np.array([np.linalg.norm(p.points, axis=1).min() for p in ens.paths])
    assert np.sum(ens.weights[r <= 1.0]) == 0.0


def _wmedian(x, w):
    o = np.argsort(x)
    c = np.cumsum(w[o]) / w.sum()
    return x[o][np.searchsorted(c, 0.5)]


def test_conditioned_down_min_decreases_in_t():
    tgt = Down(Point(Angle([1.0, 0.0])))
    meds = []
    for T in (0.2, 2.0):
        ens = simulate_conditioned([2.0, 0.0], tgt, 0.0, CAUCHY2, T, 1e-2, 2000, 4)
        rmin = np.array([np.linalg.norm(p.points, axis=1).min() for p in ens.paths])
        meds.append(_wmedian(rmin, ens.weights))
    assert meds[1] < meds[0]


def test_conditioned_up_bm_survival_identity():
    # E_up[H(x)/H(X_t)] = P_x(t < T_1) for 3-d BM
    p = StableParams(2.0, 3)
    x = np.array([2.0, 0.0, 0.0])
    T = 0.5
    ens = simulate_conditioned(x, Up(), 0.0, p, T, 2e-3, 4000, 5)
    end = np.array([q.points[-1] for q in ens.paths])
    ok = ens.weights > 0
    f = np.zeros(len(end))
    f[ok] = float(h_up(x, p)) / h_up(end[ok], p)
    w = ens.weights / ens.weights.sum()
    est = float(np.sum(w * f))
    se = math.sqrt(np.sum(w ** 2 * (f - est) ** 2))
    assert abs(est - bessel3_survival(2.0, T)) < 3 * se + 2e-3


def test_martingale_up_small():
    reps = check_martingale_up(CAUCHY2, [2.0, 0.0], 0.0, [0.5], 4000, 1)
    assert reps[0].passed


def test_harmonicity_trivial_start_on_shell():
    rep = check_harmonicity_hdown(CAUCHY2, Point(Angle([0.0, 1.0])), (1.0, 2.0), [2.0, 0.0], 10, 1)
    assert rep.statistic == 0.0


def test_harmonicity_small():
    rep = check_harmonicity_hdown(CAUCHY2, Point(Angle([0.0, 1.0])), (1.0, 1.5), [2.0, 1.0], 2000, 2)
    assert rep.details["disk"] == 0.25
    assert abs(rep.details["mc"] - rep.reference) < 4 * rep.details["se"]
    assert rep.details["se"] < 0.05 * rep.reference
    assert 0 < rep.details["frac_barrier"] < 1


@pytest.mark.parametrize("alpha", [1.0, 0.7])
def test_hdown_disk_rule(alpha):
    from scipy import integrate
    from ssmp_williams.stable_cond import _hdown_disk_rule
    th = np.array([math.cos(0.4), math.sin(0.4)])
    qy, qw = _hdown_disk_rule(th, alpha, 0.2)
    f = lambda y: 1.0 / (0.1 + np.sum((y - [1.5, -1.0]) ** 2, axis=-1))

    def g(r, a):
        y0, y1 = th[0] + r * math.cos(a), th[1] + r * math.sin(a)
        q = y0 * y0 + y1 * y1 - 1
        return q ** (alpha / 2) / r / (0.1 + (y0 - 1.5) ** 2 + (y1 + 1.0) ** 2) if q > 0 else 0.0

    ref = integrate.dblquad(lambda a, r: g(r, a), 0, 0.2, -math.pi, math.pi, epsabs=1e-10)[0]
    assert np.sum(qw * f(qy)) == pytest.approx(ref, rel=1e-3)
