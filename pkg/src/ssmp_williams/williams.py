"""Path decomposition at the point of closest reach, built and tested against direct simulation.

A path is rebuilt as pre-minimum leg, closest-reach point and post-minimum
leg. Two models are supported: Brownian motion with drift mu > 0 (the
classical case, where every leg is simulated exactly up to grid resolution)
and the isotropic alpha-stable process, whose conditioned legs come from the
particle kernels in :mod:`ssmp_williams._kernels`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .core import DomainError, MapPath, SsmpPath, concat_paths
from .map_fluct import bm_pocr_ensemble
from .sampling import SeedLike, as_seed, bridge_cross_prob, bridge_hit_fraction, bridge_minimum, concat_blocks, run_blocks
from .stable_cond import (StableParams, _pocr_draws, direct_pocr_ensemble, kernel_density_mode,
                          kernel_hup_mode)
from .stats import TestReport, bootstrap_se, ks_two_sample

log = logging.getLogger(__name__)

_EMPTY3 = np.zeros((1, 1, 1))
_EMPTY2 = np.zeros((1, 1))
_EMPTYI = np.zeros((1, 1), np.int64)


@dataclass(frozen=True)
class ClassicalBM:
    mu: float
    sigma: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("mu must be > 0")
        if not self.sigma > 0:
            raise DomainError("sigma must be > 0")


@dataclass(frozen=True)
class Stable:
    params: StableParams


@dataclass(frozen=True)
class SmcSettings:
    """Tuning of the particle legs used by the stable construction.

    Steps are h*(r - r*)**alpha; ``eta`` sets the freeze radius around x*
    relative to min(|x*|, |start - x*|); ``guide`` is the probability of a
    guided jump towards x* in the pre-minimum leg.
    """

    M: int = 48
    h: float = 1e-2
    K: int = 10
    eta: float = 0.05
    guide: float = 0.02
    ess_frac: float = 1.0
    maxsteps: int = 40000
    far: float = 1e8


@dataclass(frozen=True)
class DecompositionSpec:
    model: Union[ClassicalBM, Stable]
    start: Union[float, Sequence[float]]
    T: float
    dt: float
    N: int
    delta_offset: float = 1e-3
    seed: int = 0
    smc: SmcSettings = field(default_factory=SmcSettings)

    def __post_init__(self):
        if not isinstance(self.model, (ClassicalBM, Stable)):
            raise DomainError("model must be ClassicalBM or Stable")
        if not self.T > 0 or not self.dt > 0 or self.N < 1:
            raise DomainError("T, dt must be > 0 and N >= 1")
        if not self.delta_offset > 0:
            raise DomainError("delta_offset must be > 0")
        if isinstance(self.model, Stable):
            x = np.asarray(self.start, dtype=float)
            if x.shape != (self.model.params.d,) or np.linalg.norm(x) == 0:
                raise DomainError("start must be a nonzero point of R^d")


# --------------------------------------------------------------------- classical case

def _pre_leg(m: np.ndarray, mu: float, sigma: float, dt: float, T: float, rng):
    """BM(-mu) from 0 until it first hits -m, for a vector of levels m.

    Crossings inside a cell are detected with the bridge probability; the
    hitting time inside the cell is drawn from its bridge law (half-depth
    times are dated at the left knot). Returns the hitting times of -m and
    of -m/2, and the values at T (nan when -m was hit before T).
    """
    n = m.size
    x = np.zeros(n)
    tau = np.full(n, np.nan)
    half = np.full(n, np.nan)
    xT = np.full(n, np.nan)
    act = np.arange(n)
    kT = int(round(T / dt))
    var = sigma * sigma * dt
    k = 0
    while act.size:
        if k == kT:
            xT[act] = x[act]
        xa = x[act]
        xn = xa - mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(act.size)
        u = rng.random(act.size)
        hit = u < bridge_cross_prob(xa, xn, -m[act], var)
        hh = np.isnan(half[act]) & (u < bridge_cross_prob(xa, xn, -m[act] / 2, var))
        half[act[hh]] = k * dt
        if hit.any():
            frac = bridge_hit_fraction(xa[hit], xn[hit], -m[act][hit], np.full(int(hit.sum()), var),
                                       rng.random(int(hit.sum())))
            tau[act[hit]] = (k + frac) * dt
        x[act] = xn
        act = act[~hit]
        k += 1
    return tau, half, xT


def _pre_leg_path(m: float, mu: float, sigma: float, dt: float, nmax: int, rng):
    """Grid values of BM(-mu) from 0 up to the cell in which it first hits -m.

    Returns (values, hit); values stop at nmax knots when -m is not hit.
    """
    out = [np.zeros(1)]
    x = 0.0
    total = 1
    chunk = 4096
    while total <= nmax:
        xs = x + np.cumsum(-mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(chunk))
        prev = np.concatenate([[x], xs[:-1]])
        hit = rng.random(chunk) < bridge_cross_prob(prev, xs, -m, sigma * sigma * dt)
        if hit.any():
            j = int(np.argmax(hit))
            out.append(xs[:j])
            return np.concatenate(out), True
        out.append(xs)
        total += chunk
        x = xs[-1]
    return np.concatenate(out)[:nmax], False


def _check_variant(variant: str) -> None:
    if variant not in ("williams", "flipped"):
        raise DomainError(f"unknown variant {variant!r}")


def _classical_block(start, count, rng, mu, sigma, T, dt, variant):
    m = rng.exponential(sigma ** 2 / (2.0 * mu), count)
    tau, half, xT = _pre_leg(m, mu, sigma, dt, T, rng)
    s = np.maximum(T - tau, 0.0)
    s = np.where(np.isfinite(s), s, 0.0)
    post = tau <= T
    depth = m.copy()
    # post leg driver at times 1 and s (joint), for the gain over [0, 1] and the value at T
    t1, t2 = np.minimum(1.0, s), np.maximum(1.0, s)
    wa = rng.standard_normal((count, 3)) * np.sqrt(t1)[:, None]
    wb = wa + rng.standard_normal((count, 3)) * np.sqrt(t2 - t1)[:, None]
    late = (s >= 1.0)[:, None]
    w1, ws = np.where(late, wa, wb), np.where(late, wb, wa)
    if variant == "williams":
        w1[:, 0] += mu / sigma
        ws[:, 0] += (mu / sigma) * s
        gain = sigma * np.linalg.norm(w1, axis=1)
        val = -m + sigma * np.linalg.norm(ws, axis=1)
    elif variant == "flipped":
        gain = -mu + sigma * w1[:, 0]
        b = -mu * s + sigma * ws[:, 0]
        val = -m + b
        low = bridge_minimum(np.zeros(count), b, sigma ** 2 * np.maximum(s, 1e-300), rng.random(count))
        depth = m - np.minimum(np.where(post, low, 0.0), 0.0)
    else:
        raise DomainError(f"unknown variant {variant!r}")
    xT = np.where(post, val, xT)
    return depth, xT, tau, gain, half


@dataclass(frozen=True)
class ClassicalPath:
    """A constructed BM(+mu) path as the log-radius of a MAP, with its minimum."""

    path: MapPath
    depth: float
    gtime: float


def construct_classical(mu: float, T: float, dt: float, seed: SeedLike, sigma: float = 1.0,
                        variant: str = "williams") -> ClassicalPath:
    """One path of BM(+mu) on [0, T] rebuilt from its minimum.

    The depth is Exp(2 mu / sigma^2); the pre-minimum leg is BM(-mu) run
    until it first hits -depth; the post-minimum leg is
    -depth + sigma |W_s + (mu/sigma) s e_1| with W a 3-d standard BM, which
    is BM(+mu) conditioned to stay above -depth. ``variant="flipped"``
    replaces the post leg with plain BM(-mu) (a negative control). gtime
    is nan when the minimum falls after T.
    """
    ClassicalBM(mu, sigma)
    _check_variant(variant)
    rng = as_seed(seed).generator()
    m = float(rng.exponential(sigma ** 2 / (2.0 * mu)))
    n = int(round(T / dt))
    pre, hit = _pre_leg_path(m, mu, sigma, dt, n + 1, rng)
    tau = (pre.size - 1) * dt if hit and pre.size <= n + 1 else math.nan
    npost = n + 1 - pre.size
    if npost > 0:
        # the post leg starts at the minimum, one grid step after the last pre knot
        s = dt * np.arange(1, npost + 1)
        w = np.cumsum(rng.standard_normal((npost, 3)) * math.sqrt(dt), axis=0)
        if variant == "williams":
            w[:, 0] += (mu / sigma) * s
            post = -m + sigma * np.linalg.norm(w, axis=1)
        elif variant == "flipped":
            post = -m - mu * s + sigma * w[:, 0]
        else:
            raise DomainError(f"unknown variant {variant!r}")
        vals = np.concatenate([pre, post])
    else:
        vals = pre[: n + 1]
    times = dt * np.arange(vals.size)
    return ClassicalPath(MapPath(times, vals, np.ones((vals.size, 1))), m, tau)


def classical_constructed_ensemble(mu: float, N: int, T: float, dt: float, seed: SeedLike,
                                   sigma: float = 1.0, variant: str = "williams",
                                   threads: int = 1, block: int = 1000) -> dict:
    """Depth, X_T, time of minimum and post-minimum gain for N constructed paths."""
    ClassicalBM(mu, sigma)
    _check_variant(variant)
    res = run_blocks(_classical_block, N, block, seed, threads, (mu, sigma, T, dt, variant))
    depth, xT, gtime, gain, half = concat_blocks(res)
    return {"depth": depth, "x_T": xT, "gtime": gtime, "gain": gain, "t_half": half}


def classical_direct_ensemble(mu: float, N: int, T: float, dt: float, seed: SeedLike,
                              sigma: float = 1.0, horizon: float = 50.0, margin: float = 8.0,
                              threads: int = 1) -> dict:
    """Depth, X_T and time of minimum of N directly simulated BM(+mu) paths."""
    r = bm_pocr_ensemble(mu, sigma, N, max(horizon, T), dt, margin, seed, t_fixed=T, threads=threads)
    ok = r["ok"]
    return {"depth": r["depth"][ok], "x_T": r["x_fixed"][ok], "gtime": r["gtime"][ok],
            "horizon_fails": r["horizon_fails"]}


# --------------------------------------------------------------------- stable case

def _kernel_tables(params: StableParams):
    return kernel_hup_mode(params), kernel_density_mode(params)


def _freeze_radius(x0: np.ndarray, xs: np.ndarray, eta: float) -> float:
    return eta * min(float(np.linalg.norm(xs)), float(np.linalg.norm(x0 - xs)))


def _legs(x0, xs, params, T, delta, smc: SmcSettings, rng, tables, record=False):
    """Run the pre- and post-minimum particle legs for one closest-reach point."""
    (hmode, hs, hl), (dmode, ds, dl) = tables
    rs = float(np.linalg.norm(xs))
    th = xs / rs
    eta = _freeze_radius(x0, xs, smc.eta)
    alpha = float(params.alpha)
    d = params.d
    if record:
        hx = np.zeros((smc.maxsteps + 1, smc.M, d))
        ht = np.zeros((smc.maxsteps + 1, smc.M))
        ha = np.zeros((smc.maxsteps + 1, smc.M), np.int64)
    else:
        hx, ht, ha = _EMPTY3, _EMPTY2, _EMPTYI
    down = K.smc_leg(x0, smc.M, smc.h, smc.K, K.KIND_DOWN, rs, th, eta, math.inf, T, alpha, hmode, hs, hl,
                     smc.maxsteps, 1e-6, smc.far, rng, record, hx, ht, ha, smc.ess_frac, smc.guide, dmode,
                     ds, dl)
    out = {"xstar": xs, "rs": rs, "eta": eta, "down": down, "up": None,
           "down_hist": (hx, ht, ha) if record else None, "up_hist": None}
    if not down[0] or down[1] >= T:
        return out
    rem = T - down[1]
    if record:
        hx2 = np.zeros_like(hx)
        ht2 = np.zeros_like(ht)
        ha2 = np.zeros_like(ha)
    else:
        hx2, ht2, ha2 = hx, ht, ha
    up = K.smc_leg((1.0 + delta) * xs, smc.M, smc.h, smc.K, K.KIND_UP, rs, th, eta, rem, rem, alpha, hmode,
                   hs, hl, smc.maxsteps, 1e-6, smc.far, rng, record, hx2, ht2, ha2, smc.ess_frac, 0.0, dmode,
                   ds, dl)
    out["up"] = up
    out["up_hist"] = (hx2, ht2, ha2) if record else None
    return out


def _lineage(hist, nsteps: int, sel: int):
    """Trace the drawn particle back through the resampling genealogy."""
    hx, ht, ha = hist
    j = sel
    pts = np.empty((nsteps + 1, hx.shape[2]))
    ts = np.empty(nsteps + 1)
    for k in range(nsteps, -1, -1):
        j = ha[k, j]
        pts[k] = hx[k, j]
        ts[k] = ht[k, j]
    _, first = np.unique(ts, return_index=True)
    return ts[first], pts[first]


def construct_stable(spec: DecompositionSpec, replica: int = 0) -> SsmpPath:
    """One stable path on [0, T] built from its closest-reach point.

    x* is drawn from the closest-reach law; the pre-minimum leg is a particle
    run weighted by H-down towards x*, frozen within eta*min(|x*|, |x - x*|)
    of it, from which one particle is drawn by weight and traced back; the
    post-minimum leg starts at (1 + delta) x* and is weighted by H-up.
    Raises GlueError if the frozen point is farther from the post-minimum
    start than |x*| (delta + eta).
    """
    if not isinstance(spec.model, Stable):
        raise DomainError("construct_stable needs a Stable model")
    params = spec.model.params
    x0 = np.asarray(spec.start, dtype=float)
    rng = as_seed(spec.seed).child(3, replica).generator()
    xs = _pocr_draws(x0, params, rng, 1)[0]
    res = _legs(x0, xs, params, spec.T, spec.delta_offset, spec.smc, rng, _kernel_tables(params), record=True)
    down = res["down"]
    if not down[0]:
        raise RuntimeError("pre-minimum particle system died out")
    t1, p1 = _lineage(res["down_hist"], down[5], down[7])
    meta = {"xstar": xs.tolist(), "gtime": float(down[1]), "logz_down": float(down[8]),
            "ess_min_down": float(down[6])}
    if res["up"] is None:
        keep = t1 <= spec.T
        return SsmpPath(t1[keep], p1[keep], params.alpha, None, meta)
    up = res["up"]
    if not up[0]:
        raise RuntimeError("post-minimum particle system died out")
    t2, p2 = _lineage(res["up_hist"], up[5], up[7])
    g = t1[-1]
    pre = SsmpPath(np.append(t1, np.nextafter(g, math.inf)), np.vstack([p1, np.full(p1.shape[1], np.nan)]),
                   params.alpha, t1.size, meta)
    post = SsmpPath(t2, p2, params.alpha, None, {"logz_up": float(up[8]), "ess_min_up": float(up[6])})
    tol = res["rs"] * (spec.delta_offset + spec.smc.eta) * (1 + 1e-9)
    return concat_paths(pre, post, tol_glue=tol)


def _stable_block(start, count, rng, x0, alpha, d, T, delta, smc):
    params = StableParams(alpha, d)
    tables = _kernel_tables(params)
    xs_all = _pocr_draws(x0, params, rng, count)
    rmin = np.full(count, np.nan)
    rT = np.full(count, np.nan)
    g = np.full(count, np.nan)
    logz = np.full(count, -np.inf)
    ess = np.zeros(count)
    for i in range(count):
        res = _legs(x0, xs_all[i], params, T, delta, smc, rng, tables)
        down, up = res["down"], res["up"]
        if not down[0]:
            continue
        g[i] = down[1]
        if up is None:
            rmin[i] = min(res["rs"], down[3])
            rT[i] = down[2]
            logz[i] = down[8]
            ess[i] = down[6]
        elif up[0]:
            rmin[i] = min(res["rs"], down[3], up[3])
            rT[i] = up[2]
            logz[i] = down[8] + up[8]
            ess[i] = min(down[6], up[6])
    return rmin, rT, g, xs_all, logz, ess


def stable_constructed_ensemble(spec: DecompositionSpec, threads: int = 1, block: int = 50,
                                delta: Optional[float] = None) -> dict:
    """Functionals of spec.N constructed stable paths, one weighted draw per replica.

    ``logz`` holds the log of the particle estimate of the normalising
    constant of each replica; exp(logz) has mean one, and its spread is
    reported as a diagnostic of the particle approximation.
    """
    if not isinstance(spec.model, Stable):
        raise DomainError("needs a Stable model")
    p = spec.model.params
    delta = spec.delta_offset if delta is None else delta
    x0 = np.asarray(spec.start, dtype=float)
    res = run_blocks(_stable_block, spec.N, block, as_seed(spec.seed).child(1), threads,
                     (x0, float(p.alpha), int(p.d), spec.T, delta, spec.smc))
    rmin, rT, g, xs, logz, ess = concat_blocks(res)
    ok = np.isfinite(rT) & np.isfinite(rmin)
    out = {"rmin": rmin[ok], "r_T": rT[ok], "gtime": g[ok], "xstar": xs[ok], "logz": logz[ok],
           "ess_min": ess[ok], "failed": int((~ok).sum())}
    if p.d == 2:
        out["angle"] = np.arctan2(out["xstar"][:, 1], out["xstar"][:, 0])
    return out


def stable_direct_ensemble(params: StableParams, x0, N: int, T: float, seed: SeedLike,
                           threads: int = 1) -> dict:
    """Functionals of N directly simulated stable paths (closest reach via the margin rule)."""
    r = direct_pocr_ensemble(params, x0, N, T, seed, threads=threads)
    ok = r["ok"]
    out = {"rmin": r["rmin"][ok], "r_T": r["rT"][ok], "gtime": r["gtime"][ok], "xstar": r["xmin"][ok],
           "horizon_fails": int((~ok).sum())}
    if params.d == 2:
        out["angle"] = np.arctan2(out["xstar"][:, 1], out["xstar"][:, 0])
    return out


def stable_ensembles(spec: DecompositionSpec, n_direct: Optional[int] = None, threads: int = 1) -> tuple:
    """(direct, constructed) ensembles on independent streams of spec.seed."""
    p = spec.model.params
    n_direct = 4 * spec.N if n_direct is None else n_direct
    direct = stable_direct_ensemble(p, spec.start, n_direct, spec.T, as_seed(spec.seed).child(2), threads)
    return direct, stable_constructed_ensemble(spec, threads)


# --------------------------------------------------------------------- verification

ANGLE_BINS = 12


def _angle_chi2(a: np.ndarray, b: np.ndarray) -> tuple:
    """Two-sample chi-square on ANGLE_BINS equal angular bins; statistic is TV distance."""
    edges = np.linspace(-math.pi, math.pi, ANGLE_BINS + 1)
    ca = np.histogram(a, edges)[0].astype(float)
    cb = np.histogram(b, edges)[0].astype(float)
    from scipy.stats import chi2_contingency
    keep = (ca + cb) > 0
    _, p, _, _ = chi2_contingency(np.vstack([ca[keep], cb[keep]]))
    return 0.5 * float(np.abs(ca / ca.sum() - cb / cb.sum()).sum()), float(p)


def functional_statistic(direct: dict, constructed: dict, key: str) -> tuple:
    a = np.asarray(direct[key], dtype=float)
    b = np.asarray(constructed[key], dtype=float)
    if key == "angle":
        return _angle_chi2(a, b)
    return ks_two_sample(a, b)


def verify_decomposition(direct: dict, constructed: dict, functionals: Sequence[str],
                         threshold: Union[float, Dict[str, float]] = 0.03, name: str = "williams",
                         seed: int = 0) -> TestReport:
    """Two-sample comparison of the constructed and direct ensembles.

    Every functional gets a KS statistic (angles: total variation on
    ANGLE_BINS bins with a chi-square p-value); the report passes iff each
    statistic is at most its threshold. The headline statistic is the
    largest one.
    """
    if not functionals:
        raise DomainError("no functionals")
    details = {}
    worst = 0.0
    ok = True
    n = min(len(direct[functionals[0]]), len(constructed[functionals[0]]))
    for key in functionals:
        if len(direct[key]) == 0 or len(constructed[key]) == 0:
            raise DomainError(f"empty ensemble for {key}")
        stat, p = functional_statistic(direct, constructed, key)
        thr = threshold[key] if isinstance(threshold, dict) else threshold
        details[key] = {"statistic": stat, "p_value": p, "threshold": thr, "pass": stat <= thr,
                        "n_direct": len(direct[key]), "n_constructed": len(constructed[key])}
        ok &= stat <= thr
        worst = max(worst, stat)
    thr_max = max(threshold.values()) if isinstance(threshold, dict) else threshold
    return TestReport(name, worst, "direct simulation", thr_max, None, n, seed, bool(ok), "threshold",
                      details)


def delta_stability(spec: DecompositionSpec, direct: dict, constructed: dict, functionals: Sequence[str],
                    threads: int = 1, B: int = 200, name: str = "delta_stability") -> TestReport:
    """Rerun the construction with delta/2 on the same streams and compare statistics.

    Passes iff every statistic moves by less than its bootstrap standard
    error at the original delta.
    """
    half = stable_constructed_ensemble(spec, threads, delta=spec.delta_offset / 2)
    details = {}
    ok = True
    worst = 0.0
    for i, key in enumerate(functionals):
        s1 = functional_statistic(direct, constructed, key)[0]
        s2 = functional_statistic(direct, half, key)[0]
        fn = (lambda a, b: _angle_chi2(a, b)[0]) if key == "angle" else (lambda a, b: ks_two_sample(a, b)[0])
        se = bootstrap_se((np.asarray(direct[key]), np.asarray(constructed[key])), fn, B,
                          as_seed(spec.seed).child(4, i))
        moved = abs(s2 - s1)
        details[key] = {"stat_delta": s1, "stat_half_delta": s2, "shift": moved, "se": se, "pass": moved < se}
        ok &= moved < se
        worst = max(worst, moved / se if se > 0 else math.inf)
    return TestReport(name, worst, "shift / bootstrap SE", 1.0, None, spec.N, spec.seed, bool(ok),
                      "threshold", details)


def conditional_independence(constructed: dict, n_bins: int = 4, name: str = "pre_post_independence",
                             seed: int = 0) -> TestReport:
    """Correlation of time-to-half-depth and post-minimum gain within depth bins.

    Fisher z-scores of the per-bin correlations are combined; passes iff
    the combined |z| <= 3.
    """
    depth = constructed["depth"]
    a = constructed["t_half"]
    b = constructed["gain"]
    edges = np.quantile(depth, np.linspace(0, 1, n_bins + 1))
    zs = []
    cors = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (depth >= lo) & (depth <= hi) & np.isfinite(a) & np.isfinite(b)
        if sel.sum() < 10:
            continue
        r = float(np.corrcoef(a[sel], b[sel])[0, 1])
        cors.append(r)
        zs.append(math.atanh(r) * math.sqrt(sel.sum() - 3))
    z = float(np.sum(zs) / math.sqrt(len(zs)))
    return TestReport(name, abs(z), 0.0, 3.0, None, len(depth), seed, abs(z) <= 3.0, "threshold",
                      {"bin_correlations": cors})
