import math

import numpy as np
import pytest
from scipy import integrate, optimize

from ssmp_williams.core import DomainError, MapPath, SsmpPath
from ssmp_williams.lamperti_kiu import (build_clock, clock_convergence, map_from_ssmp, phi, round_trip_error,
                                        scale_map_path, ssmp_from_map, ssmp_round_trip_error, zeta_clock)


def _map(times, xi, theta=None):
    times = np.asarray(times, float)
    if theta is None:
        theta = np.tile([1.0, 0.0], (times.size, 1))
    return MapPath(times, np.asarray(xi, float), theta)


def _step_path(rng, n=100, d=2):
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 0.2, n - 1))])
    ang = rng.uniform(-math.pi, math.pi, n)
    return MapPath(t, np.cumsum(rng.normal(0, 0.4, n)), np.column_stack([np.cos(ang), np.sin(ang)]))


def test_identity_clock():
    t = np.linspace(0, 3, 31)
    tc = build_clock(_map(t, np.zeros(31)), 1.3)
    np.testing.assert_allclose(tc.clock, t, atol=1e-14)
    assert float(phi(tc, 0.7)) == pytest.approx(0.7, abs=1e-14)


def test_constant_clock():
    t = np.linspace(0, 2, 21)
    c, a = 0.4, 1.5
    tc = build_clock(_map(t, np.full(21, c)), a)
    np.testing.assert_allclose(tc.clock, t * math.exp(a * c), rtol=1e-13)
    assert float(phi(tc, 1.0)) == pytest.approx(math.exp(-a * c), rel=1e-13)


def test_step_clock_hand_integral():
    # xi = 0 on [0,1), 2 on [1,3]
    t = np.array([0.0, 1.0, 3.0])
    tc = build_clock(_map(t, [0.0, 2.0, 2.0]), 1.0)
    np.testing.assert_allclose(tc.clock, [0.0, 1.0, 1.0 + 2.0 * math.e ** 2])


def test_phi_inverse_at_knots(rng):
    p = _step_path(rng)
    tc = build_clock(p, 1.2)
    np.testing.assert_allclose(phi(tc, tc.clock[:-1]), p.times[:-1], atol=1e-12)


def test_phi_past_lifetime():
    tc = build_clock(_map([0.0, 1.0], [0.0, 0.0]), 1.0)
    assert math.isinf(float(phi(tc, 2.0)))
    with pytest.raises(DomainError):
        phi(tc, -1.0)


def test_constant_map_gives_constant_ssmp():
    t = np.linspace(0, 1, 11)
    theta = np.tile([0.6, 0.8], (11, 1))
    s = ssmp_from_map(_map(t, np.zeros(11), theta), 1.0, out_times=np.linspace(0, 0.9, 10))
    np.testing.assert_allclose(s.points, np.tile([0.6, 0.8], (10, 1)), atol=1e-15)


def test_linear_xi_against_root_finder():
    # xi_s = b s on a fine grid; the exact clock is (e^{a b s} - 1)/(a b)
    a, b = 1.0, 0.8
    t = np.linspace(0, 2, 200001)
    p = _map(t, b * t)
    out = np.array([0.0, 0.3, 1.0, 2.0])
    s = ssmp_from_map(p, a, out_times=out)
    for ti, x in zip(out[1:], s.points[1:]):
        s_exact = optimize.brentq(lambda u: integrate.quad(lambda v: math.exp(a * b * v), 0, u)[0] - ti, 0, 2)
        assert x[0] == pytest.approx(math.exp(b * s_exact), rel=1e-4)


def test_lifetime_is_final_clock(rng):
    p = _step_path(rng)
    tc = build_clock(p, 0.9)
    exact = np.sum(np.exp(0.9 * p.xi[:-1]) * np.diff(p.times))
    assert tc.lifetime == pytest.approx(exact, rel=1e-13)
    s = ssmp_from_map(p, 0.9, out_times=[0.0, tc.lifetime * 0.5, tc.lifetime * 1.01])
    assert s.killed == 2


def test_round_trip_step_paths(rng):
    for _ in range(20):
        p = _step_path(rng)
        assert round_trip_error(p, 1.0) <= 1e-9
        assert ssmp_round_trip_error(ssmp_from_map(p, 1.5)) <= 1e-9


def test_unit_radius_ssmp():
    t = np.linspace(0, 1, 11)
    ang = np.linspace(0, 1, 11)
    s = SsmpPath(t, np.column_stack([np.cos(ang), np.sin(ang)]), 1.0)
    m = map_from_ssmp(s)
    np.testing.assert_allclose(m.xi, 0.0, atol=1e-15)
    assert m.times[-1] == pytest.approx(s.times[-1])


def test_constant_radius_zeta():
    t = np.linspace(0, 2, 21)
    r, a = 3.0, 1.5
    s = SsmpPath(t, np.tile([r, 0.0], (21, 1)), a)
    assert zeta_clock(s)[-1] == pytest.approx(2.0 * r ** -a, rel=1e-13)


def test_zero_point_rejected():
    with pytest.raises(DomainError):
        SsmpPath(np.array([0.0, 1.0]), np.array([[1.0, 0.0], [0.0, 0.0]]), 1.0)


def test_scaling_property(rng):
    p = _step_path(rng)
    a, c = 1.3, 2.5
    tc = build_clock(p, a)
    out = np.linspace(0, tc.lifetime * 0.99, 50)
    base = ssmp_from_map(p, a, out_times=out)
    scaled = ssmp_from_map(scale_map_path(p, c), a, out_times=out * c ** a)
    np.testing.assert_allclose(scaled.points, c * base.points, rtol=1e-12)


def test_clock_convergence_first_order():
    cc = clock_convergence(0.5, 1.0, 1.0, 1.0, 1e-2, 100, 3)
    assert min(cc["ratios"]) >= 1.8
