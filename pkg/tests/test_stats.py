import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from ssmp_williams.core import DomainError
from ssmp_williams.stats import (TestReport, bootstrap_ci, chi_square_density_fit, exceeds_report, ks_one_sample,
                                 ks_two_sample, pvalue_report, threshold_report, total_variation, weighted_mean_se)


def test_ks_two_sample_identical(rng):
    a = rng.random(1000)
    assert ks_two_sample(a, a)[0] == 0.0


def test_ks_two_sample_shifted_uniform(rng):
    stat, _ = ks_two_sample(rng.random(10**4), rng.random(10**4) + 0.2)
    assert abs(stat - 0.2) < 0.02


def test_ks_two_sample_level():
    ok = 0
    for s in range(100):
        r = np.random.default_rng(s)
        ok += ks_two_sample(r.standard_normal(10**4), r.standard_normal(10**4))[1] >= 0.01
    assert ok >= 98


def test_ks_two_sample_equal_weights_reduce(rng):
    a, b = rng.random(500), rng.random(700)
    s0 = ks_two_sample(a, b)[0]
    s1 = ks_two_sample(a, b, np.full(500, 2.0), np.full(700, 0.3))[0]
    assert s1 == pytest.approx(s0, abs=1e-12)


def test_ks_empty():
    with pytest.raises(DomainError):
        ks_two_sample([], [1.0])


def test_ks_one_sample(rng):
    cdf = sps.expon().cdf
    assert ks_one_sample(rng.exponential(size=10**4), cdf)[0] < 0.02
    assert ks_one_sample(np.full(100, 0.7), cdf)[0] >= 0.5
    assert ks_one_sample(rng.exponential(size=10**4) + 0.5, cdf)[0] > 0.2


def test_ks_one_sample_weighted_reduces(rng):
    a = rng.exponential(size=2000)
    cdf = sps.expon().cdf
    assert ks_one_sample(a, cdf, w=np.ones(2000))[0] == pytest.approx(ks_one_sample(a, cdf)[0], abs=1e-12)


def _tri(x):
    return 2 * x


def test_chi_square_level():
    bins = np.linspace(0, 1, 21)
    masses = np.diff(bins ** 2)
    ok = 0
    for s in range(100):
        counts = np.random.default_rng(s).multinomial(5000, masses)
        # place each count at its bin centre
        samples = np.repeat(0.5 * (bins[:-1] + bins[1:]), counts)
        ok += chi_square_density_fit(samples, bins, _tri)[1] >= 0.01
    assert ok >= 98


def test_chi_square_gross_mismatch(rng):
    bins = np.linspace(0, 1, 21)
    assert chi_square_density_fit(rng.random(5000), bins, _tri)[1] < 1e-6


def test_chi_square_single_bin(rng):
    assert chi_square_density_fit(rng.random(100), [0.0, 1.0], _tri)[0] == 0.0


def test_chi_square_zero_mass(rng):
    with pytest.raises(DomainError):
        chi_square_density_fit(rng.random(10), [0.0, 1.0], bin_masses=[0.0])


def test_bootstrap_constant():
    lo, hi = bootstrap_ci(np.full(50, 3.0), np.mean, 200, 1)
    assert lo == hi == 3.0


def test_bootstrap_width(rng):
    x = rng.standard_normal(10**4)
    lo, hi = bootstrap_ci(x, np.mean, 1000, 2)
    assert (hi - lo) == pytest.approx(2 * 1.96 / 100, rel=0.2)


def test_bootstrap_coverage():
    hits = 0
    for s in range(200):
        x = np.random.default_rng(1000 + s).standard_normal(1000)
        lo, hi = bootstrap_ci(x, np.mean, 400, s)
        hits += lo <= 0.0 <= hi
    assert 0.90 <= hits / 200 <= 0.99


def test_bootstrap_min_b():
    with pytest.raises(DomainError):
        bootstrap_ci(np.ones(5), np.mean, 10, 0)


def test_report_rules_and_json():
    r = threshold_report("a", 0.01, "Exp(1)", 0.02, 100, 7, 0.5, extra=np.float64(1.5))
    assert r.passed
    d = json.loads(r.to_json())
    assert list(d)[:8] == ["name", "statistic", "reference", "threshold", "p_value", "n", "seed", "pass"]
    assert d["details"]["extra"] == 1.5
    assert not exceeds_report("b", 0.05, "x", 0.1, 10, 0).passed
    assert pvalue_report("c", 3.0, "x", 0.01, 0.2, 10, 0).passed
    assert not pvalue_report("c", 3.0, "x", 0.01, 0.001, 10, 0).passed
    assert "[PASS]" in r.line()
    assert isinstance(r, TestReport)


def test_total_variation_and_weighted_mean():
    assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5
    x = np.arange(10.0)
    m0, s0 = weighted_mean_se(x)
    m1, _ = weighted_mean_se(x, np.ones(10))
    assert m0 == m1 == 4.5
    assert s0 == pytest.approx(np.std(x, ddof=1) / math.sqrt(10))
