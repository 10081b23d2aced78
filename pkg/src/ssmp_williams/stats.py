"""Distributional tests and the TestReport record."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import stats as sps

from .core import DomainError

SMALL_SAMPLE = 100


@dataclass
class TestReport:
    """One pass/fail check.

    ``rule`` is "threshold" (pass iff statistic <= threshold), "p_value"
    (pass iff p_value >= threshold) or "exceeds" (pass iff statistic >
    threshold, used by negative controls).
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    reference: Union[float, str]
    threshold: float
    p_value: Optional[float]
    n: int
    seed: int
    passed: bool
    rule: str = "threshold"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "statistic": _clean(self.statistic),
            "reference": _clean(self.reference),
            "threshold": _clean(self.threshold),
            "p_value": _clean(self.p_value),
            "n": int(self.n),
            "seed": int(self.seed),
            "pass": bool(self.passed),
            "rule": self.rule,
        }
        if self.details:
            d["details"] = {k: _clean(v) for k, v in self.details.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def line(self) -> str:
        p = "" if self.p_value is None else f" p={self.p_value:.4g}"
        ref = self.reference if isinstance(self.reference, str) else f"{self.reference:.6g}"
        tag = "PASS" if self.passed else "FAIL"
        op = {"p_value": ">=", "exceeds": ">"}.get(self.rule, "<=")
        val = self.p_value if self.rule == "p_value" else self.statistic
        return (f"[{tag}] {self.name}: stat={self.statistic:.6g} ref={ref}{p} "
                f"(rule {self.rule} {val:.4g} {op} {self.threshold:.4g}, n={self.n})")


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else (str(v) if math.isinf(v) else v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


def threshold_report(name, statistic, reference, threshold, n, seed, p_value=None, **details):
    return TestReport(name, float(statistic), reference, threshold, p_value, int(n), int(seed),
                      bool(statistic <= threshold), "threshold", details)


def exceeds_report(name, statistic, reference, threshold, n, seed, p_value=None, **details):
    return TestReport(name, float(statistic), reference, threshold, p_value, int(n), int(seed),
                      bool(statistic > threshold), "exceeds", details)


def pvalue_report(name, statistic, reference, floor, p_value, n, seed, **details):
    return TestReport(name, float(statistic), reference, floor, float(p_value), int(n), int(seed),
                      bool(p_value >= floor), "p_value", details)


def kish_ess(w) -> float:
    w = np.asarray(w, dtype=float)
    s = w.sum()
    return float(s * s / np.sum(w * w)) if s > 0 else 0.0


def _check(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size == 0:
        raise DomainError("empty sample")
    return a


def _ecdf(a, w, grid):
    order = np.argsort(a, kind="mergesort")
    a, w = a[order], w[order]
    cw = np.concatenate([[0.0], np.cumsum(w)]) / w.sum()
    return cw[np.searchsorted(a, grid, side="right")]


def ks_two_sample(a, b, wa=None, wb=None) -> tuple:
    """KS distance and asymptotic p-value; optional weights use Kish sizes."""
    a, b = _check(a), _check(b)
    if wa is None and wb is None:
        r = sps.ks_2samp(a, b, method="asymp")
        return float(r.statistic), float(r.pvalue)
    wa = np.ones_like(a) if wa is None else np.asarray(wa, dtype=float)
    wb = np.ones_like(b) if wb is None else np.asarray(wb, dtype=float)
    grid = np.concatenate([a, b])
    stat = float(np.max(np.abs(_ecdf(a, wa, grid) - _ecdf(b, wb, grid))))
    na, nb = kish_ess(wa), kish_ess(wb)
    en = na * nb / (na + nb)
    return stat, float(sps.kstwobign.sf(stat * math.sqrt(en)))


def ks_one_sample(a, cdf: Callable, w=None) -> tuple:
    a = _check(a)
    if w is None:
        r = sps.kstest(a, cdf, method="asymp")
        return float(r.statistic), float(r.pvalue)
    w = np.asarray(w, dtype=float)
    order = np.argsort(a)
    a, w = a[order], w[order]
    cw = np.cumsum(w) / w.sum()
    F = cdf(a)
    stat = float(max(np.max(np.abs(cw - F)), np.max(np.abs(np.concatenate([[0.0], cw[:-1]]) - F))))
    return stat, float(sps.kstwobign.sf(stat * math.sqrt(kish_ess(w))))


def small_sample_flag(n: int) -> Optional[str]:
    return "small-sample, threshold-rule only" if n < SMALL_SAMPLE else None


def merge_bins(expected: np.ndarray, observed: np.ndarray, min_expected: float = 5.0):
    """Merge adjacent bins left to right until each expected count is >= min_expected."""
    e_out, o_out = [], []
    ce = co = 0.0
    for e, o in zip(expected, observed):
        ce += e
        co += o
        if ce >= min_expected:
            e_out.append(ce)
            o_out.append(co)
            ce = co = 0.0
    if ce > 0 or co > 0:
        if e_out:
            e_out[-1] += ce
            o_out[-1] += co
        else:
            e_out.append(ce)
            o_out.append(co)
    return np.array(e_out), np.array(o_out)


def chi_square_counts(observed, probs, n_eff: Optional[float] = None) -> tuple:
    """Pearson statistic for counts (or weighted masses) against bin probabilities."""
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if probs.sum() <= 0:
        raise DomainError("expected mass is zero")
    probs = probs / probs.sum()
    tot = observed.sum()
    n = tot if n_eff is None else n_eff
    obs = observed / tot * n
    e, o = merge_bins(probs * n, obs)
    if e.size < 2:
        return 0.0, 1.0
    stat = float(np.sum((o - e) ** 2 / e))
    return stat, float(sps.chi2.sf(stat, e.size - 1))


def chi_square_density_fit(samples, bins, density: Optional[Callable] = None, weights=None,
                           bin_masses=None) -> tuple:
    """Pearson fit of a sample to a density over ``bins``.

    Bin masses come from ``bin_masses`` if given, otherwise from adaptive
    quadrature of ``density`` on each bin. Weighted samples are rescaled
    to their Kish effective size.
    """
    samples = _check(samples)
    bins = np.asarray(bins, dtype=float)
    if bin_masses is None:
        from scipy import integrate
        bin_masses = np.array([integrate.quad(density, lo, hi, limit=200)[0]
                               for lo, hi in zip(bins[:-1], bins[1:])])
    w = np.ones_like(samples) if weights is None else np.asarray(weights, dtype=float)
    obs = np.histogram(samples, bins=bins, weights=w)[0]
    n_eff = None if weights is None else kish_ess(w)
    return chi_square_counts(obs, bin_masses, n_eff)


def bootstrap_ci(samples, functional: Callable, B: int, seed, level: float = 0.95) -> tuple:
    """Percentile bootstrap interval for ``functional`` of the sample(s).

    ``samples`` may be an array or a tuple of arrays, resampled independently.
    """
    if B < 100:
        raise DomainError("B must be >= 100")
    from .sampling import make_rng
    rng = make_rng(seed)
    multi = isinstance(samples, tuple)
    arrs = [np.asarray(s) for s in (samples if multi else (samples,))]
    vals = np.empty(B)
    for b in range(B):
        draw = [s[rng.integers(0, len(s), len(s))] for s in arrs]
        vals[b] = functional(*draw) if multi else functional(draw[0])
    lo, hi = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def bootstrap_se(samples, functional: Callable, B: int, seed) -> float:
    from .sampling import make_rng
    rng = make_rng(seed)
    multi = isinstance(samples, tuple)
    arrs = [np.asarray(s) for s in (samples if multi else (samples,))]
    vals = np.empty(B)
    for b in range(B):
        draw = [s[rng.integers(0, len(s), len(s))] for s in arrs]
        vals[b] = functional(*draw) if multi else functional(draw[0])
    return float(np.std(vals, ddof=1))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def weighted_mean_se(x, w=None) -> tuple:
    x = np.asarray(x, dtype=float)
    if w is None:
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
    w = np.asarray(w, dtype=float)
    m = float(np.sum(w * x) / w.sum())
    return m, float(math.sqrt(np.sum((w * (x - m)) ** 2)) / w.sum())
