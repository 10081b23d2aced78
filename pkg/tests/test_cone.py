import math

import numpy as np
import pytest
from scipy import integrate

from ssmp_williams import cone as cn
from ssmp_williams.core import DomainError, SsmpPath


def _images_density(phi, theta, s, a, n=30):
    """Killed BM on (-a, a) by the method of images."""
    g = lambda z: math.exp(-z * z / (2 * s)) / math.sqrt(2 * math.pi * s)
    tot = 0.0
    for k in range(-n, n + 1):
        tot += g(theta - phi + 4 * k * a) - g(theta + phi - 2 * a + 4 * k * a)
    return tot


def test_params_validation():
    with pytest.raises(DomainError):
        cn.ConeParams(0.0)
    with pytest.raises(DomainError):
        cn.ConeParams(math.pi)
    with pytest.raises(DomainError):
        cn.ConeParams(1.0, K=0)
    assert cn.ConeParams(math.pi / 2).c == pytest.approx(1.0)


def test_ground_state_and_eigenvalue():
    cone = cn.ConeParams(math.pi / 3)
    assert cn.ground_state(0.0, cone) == pytest.approx(1.0)
    assert cn.ground_state(cone.phi0, cone) == pytest.approx(0.0, abs=1e-15)
    assert cn.lambda1(cone) == pytest.approx(9 / 4)
    # -M'' = lambda1 M by finite differences
    h = 1e-4
    v = 0.3
    d2 = (cn.ground_state(v + h, cone) - 2 * cn.ground_state(v, cone) + cn.ground_state(v - h, cone)) / h ** 2
    assert -d2 == pytest.approx(cn.lambda1(cone) * cn.ground_state(v, cone), rel=1e-5)


@pytest.mark.parametrize("phi0,s", [(math.pi / 2, 0.05), (math.pi / 4, 0.3), (2.5, 1.0)])
def test_taboo_density_matches_images(phi0, s):
    cone = cn.ConeParams(phi0)
    for phi, th in [(0.0, 0.1), (0.3 * phi0, -0.5 * phi0)]:
        assert cn.taboo_density(phi, th, s, cone) == pytest.approx(_images_density(phi, th, s, phi0), rel=1e-8)


def test_taboo_survival_is_integral_of_density():
    cone = cn.ConeParams(1.2)
    for s in (0.1, 0.7):
        ref = integrate.quad(lambda t: cn.taboo_density(0.4, t, s, cone), -1.2, 1.2, epsabs=1e-12)[0]
        assert cn.taboo_survival(0.4, s, cone) == pytest.approx(ref, rel=1e-8)


def test_taboo_density_rejects_bad_input():
    cone = cn.ConeParams(1.0)
    with pytest.raises(DomainError):
        cn.taboo_density(1.0, 0.0, 0.1, cone)
    with pytest.raises(DomainError):
        cn.taboo_density(0.0, 0.0, 0.0, cone)


def test_u_dagger_s_integral():
    # integrating the first-passage factor in s leaves the ladder-type series without the k+1 shift
    cone = cn.ConeParams(math.pi / 2)
    y, th, ph = 0.7, 0.2, -0.1
    val = integrate.quad(lambda s: cn.u_dagger_density(s, y, th, ph, cone), 0, np.inf, epsabs=1e-12, limit=400)[0]
    k = np.arange(1, 2000)
    rate = math.sqrt(2 * cn.taboo_rate(cone)) * k
    ref = np.sum(np.exp(-y * rate) * cn._sin_k(k, ph, cone) * cn._sin_k(k, th, cone)) / cone.phi0
    assert val == pytest.approx(ref, rel=1e-6)


def test_ladder_series_divergent_at_zero():
    cone = cn.ConeParams(math.pi / 2)
    assert math.isnan(cn.ladder_density_cone(0.0, 0.1, 0.0, cone))
    assert np.isfinite(cn.ladder_density_cone(0.5, 0.1, 0.0, cone))
    with pytest.raises(DomainError):
        cn.ladder_density_cone(-1.0, 0.1, 0.0, cone)


@pytest.mark.parametrize("phi0", [math.pi / 2, 1.0])
def test_pocr_law_integrates_to_one(phi0):
    cone = cn.ConeParams(phi0)
    f = lambda th, y: cn.pocr_law_cone(y, th, 0.2 * phi0, cone)
    tot = integrate.dblquad(f, 1e-3, 12.0, -phi0 + 1e-12, phi0 - 1e-12, epsabs=1e-8)[0]
    # the strip y < 1e-3 carries at most rate * 1e-3 of the mass
    assert tot == pytest.approx(1.0, abs=4e-3)
    masses = cn.ladder_bin_masses([0.0, 0.5, np.inf], np.linspace(-phi0, phi0, 5), 0.2 * phi0, cone,
                                  corrected=True)
    assert masses.sum() == pytest.approx(1.0, abs=1e-6)


def test_bin_masses_match_quadrature():
    cone = cn.ConeParams(math.pi / 2)
    m = cn.ladder_bin_masses([0.2, 0.6], [-0.5, 0.4], 0.1, cone)
    ref = integrate.dblquad(lambda th, y: cn.ladder_density_cone(y, th, 0.1, cone), 0.2, 0.6, -0.5, 0.4)[0]
    assert m[0, 0] == pytest.approx(ref, rel=1e-7)


def test_survival_ladder_spot_value():
    assert cn.survival_ladder(1.0, math.pi) == pytest.approx(math.exp(-1), abs=1e-12)
    assert cn.survival_ladder(2.0, cn.ConeParams(math.pi / 2)) == pytest.approx(math.exp(-4))
    with pytest.raises(DomainError):
        cn.survival_ladder(1.0, 4.0)
    with pytest.raises(DomainError):
        cn.survival_ladder(-0.1, cn.ConeParams(1.0))


def test_com_weight():
    cone = cn.ConeParams(math.pi / 2)
    pts = np.array([[1.0, 0.0], [2.0, 0.0]])
    path = SsmpPath(np.array([0.0, 1.0]), pts, 2.0)
    assert cn.cone_com_weight(path, [1.0, 0.0], cone) == pytest.approx(2.0)
    out = SsmpPath(np.array([0.0, 1.0]), np.array([[1.0, 0.0], [-1.0, 0.1]]), 2.0)
    assert cn.cone_com_weight(out, [1.0, 0.0], cone) == 0.0
    with pytest.raises(DomainError):
        cn.cone_com_weight(path, [-1.0, 0.0], cone)


def test_taboo_survival_mc_small():
    rep = cn.taboo_survival_mc(0.3, 0.5, cn.ConeParams(math.pi / 2), 20000, 7)
    assert rep.details["mc"] == pytest.approx(rep.reference, abs=4 * rep.details["se"] + 0.01)


def test_cone_martingale_small():
    reps = cn.check_cone_martingale([1.0, 0.3], cn.ConeParams(math.pi / 2), [0.2, 0.5], 4000, 11)
    assert all(abs(r.details["mean"] - 1) < 5 * r.details["se"] for r in reps)


def test_large_s_leading_term():
    cone = cn.ConeParams(1.1)
    s = 32 * cone.phi0 ** 2 / math.pi ** 2
    rate = math.pi ** 2 / (8 * cone.phi0 ** 2)

    def lead_k(k, phi, th):
        return math.exp(-rate * k * k * s) / cone.phi0 * cn._sin_k(k, phi, cone) * cn._sin_k(k, th, cone)

    # at the centre the k=2 term vanishes and 1e-6 holds
    assert cn.taboo_density(0.0, 0.0, s, cone) / lead_k(1, 0.0, 0.0) == pytest.approx(1.0, abs=1e-6)
    # elsewhere the deviation is the k=2 term, of relative size about exp(-12)
    for phi, th in [(0.2, -0.4), (0.5, 0.5)]:
        dev = cn.taboo_density(phi, th, s, cone) / lead_k(1, phi, th) - 1
        assert dev == pytest.approx(lead_k(2, phi, th) / lead_k(1, phi, th), rel=1e-3)


def test_large_y_ladder_leading_term():
    cone = cn.ConeParams(math.pi / 2)
    y, phi, th = 12.0, 0.1, 0.3
    lead = (math.exp(-math.pi * y / cone.phi0) / cone.phi0
            * cn.ground_state(phi, cone) * cn.ground_state(th, cone))
    assert cn.ladder_density_cone(y, th, phi, cone) / lead == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("phi,s", [(0.0, 0.05), (0.9, 0.1), (0.0, 0.6), (-1.2, 2.0)])
def test_conditioned_angle_draws(phi, s):
    from scipy import stats
    cone = cn.ConeParams(math.pi / 2)
    dens = lambda t: (math.exp(cn.taboo_rate(cone) * s) * cn.ground_state(t, cone) / cn.ground_state(phi, cone)
                      * cn.taboo_density(phi, t, s, cone))
    assert cn.conditioned_angle_cdf(0.3, phi, s, cone) == pytest.approx(
        integrate.quad(dens, -cone.phi0 + 1e-12, 0.3, epsabs=1e-12)[0], abs=1e-9)
    assert cn.conditioned_angle_cdf(cone.phi0, phi, s, cone) == pytest.approx(1.0, abs=1e-10)
    th = cn._theta_exact_block(0, 5000, np.random.default_rng(3), phi, cone.phi0, np.full(5000, s), 1e-3,
                               cone.phi0 ** 2 / 10, 2049)[0]
    cdf = lambda x: np.array([cn.conditioned_angle_cdf(v, phi, s, cone) for v in np.atleast_1d(x)])
    assert stats.kstest(th, cdf).pvalue > 1e-3


def test_exact_and_weighted_angles_agree():
    cone = cn.ConeParams(math.pi / 2)
    a = cn.cone_pocr_ensemble(0.2, cone, 4000, 5)
    b = cn.cone_pocr_ensemble(0.2, cone, 4000, 5, method="weighted")
    assert np.array_equal(a["depth"], b["depth"])
    assert np.all(a["weight"] == 1.0)
    edges = np.linspace(-cone.phi0, cone.phi0, 7)
    pa = np.histogram(a["theta"], edges)[0] / a["theta"].size
    pb = np.histogram(b["theta"], edges, weights=b["weight"])[0]
    pb = pb / pb.sum()
    assert 0.5 * np.abs(pa - pb).sum() < 0.06
    with pytest.raises(DomainError):
        cn.cone_pocr_ensemble(0.2, cone, 10, 5, method="other")
