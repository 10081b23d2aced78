"""Simulation of concrete MAPs and their fluctuation functionals.

Two models are supported: Brownian motion with drift (trivial modulator) and
Markov-modulated Brownian motion with a finite state space. The global
minimum of an upward-drifting path is located on a finite horizon and
accepted only when the path has since climbed by more than a margin.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy import integrate

from .core import Angle, DomainError, MapPath, PocrSample
from .sampling import (SeedLike, as_seed, bridge_argmin_fraction, bridge_minimum, chain_occupation,
                       concat_blocks, run_blocks, validate_rate_matrix)
from .stats import TestReport, ks_two_sample

log = logging.getLogger(__name__)

BRIDGE_WINDOW = 6.0
MAX_RETRIES = 4


@dataclass(frozen=True)
class MapModel:
    """BM_DRIFT(mu, sigma) or MMBM(Q, drifts, sigmas)."""

    kind: str
    mu: float = 0.0
    sigma: float = 1.0
    Q: Optional[np.ndarray] = None
    drifts: Optional[np.ndarray] = None
    sigmas: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "bm_drift":
            if self.sigma < 0:
                raise DomainError("sigma must be >= 0")
        elif self.kind == "mmbm":
            Q = validate_rate_matrix(self.Q)
            n = Q.shape[0]
            dr = np.asarray(self.drifts, dtype=float).reshape(-1)
            sg = np.asarray(self.sigmas, dtype=float).reshape(-1)
            if dr.size != n or sg.size != n:
                raise DomainError("drifts and sigmas need one entry per state")
            if np.any(sg <= 0):
                raise DomainError("sigmas must be positive")
            if not _irreducible(Q):
                raise DomainError("Q must be irreducible")
            object.__setattr__(self, "Q", Q)
            object.__setattr__(self, "drifts", dr)
            object.__setattr__(self, "sigmas", sg)
        else:
            raise DomainError(f"unknown model kind {self.kind!r}")

    @classmethod
    def bm_drift(cls, mu: float, sigma: float = 1.0) -> "MapModel":
        return cls("bm_drift", mu=float(mu), sigma=float(sigma))

    @classmethod
    def mmbm(cls, Q, drifts, sigmas) -> "MapModel":
        return cls("mmbm", Q=Q, drifts=drifts, sigmas=sigmas)

    @property
    def n_states(self) -> int:
        return 1 if self.kind == "bm_drift" else self.Q.shape[0]

    def stationary(self) -> np.ndarray:
        if self.kind == "bm_drift":
            return np.ones(1)
        n = self.n_states
        A = np.vstack([self.Q.T, np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        return np.linalg.lstsq(A, b, rcond=None)[0]

    def mean_drift(self) -> float:
        if self.kind == "bm_drift":
            return self.mu
        return float(self.stationary() @ self.drifts)


def _irreducible(Q: np.ndarray) -> bool:
    n = Q.shape[0]
    adj = (Q > 0).astype(int) + np.eye(n, dtype=int)
    reach = np.linalg.matrix_power(adj, n) > 0
    return bool(reach.all())


@dataclass
class Excursion:
    """Excursion of U = xi - running min between consecutive grid zeros."""

    start_time: float
    end_time: float
    heights: np.ndarray
    modulator: np.ndarray
    complete: bool

    @property
    def length(self) -> float:
        return self.end_time - self.start_time


@dataclass
class LadderHistogram:
    """Histogram of (depth, modulator state) at the point of closest reach."""

    depth_edges: np.ndarray
    angle_bins: np.ndarray
    counts: np.ndarray
    normalization: int
    horizon_fails: int = 0

    @property
    def density(self) -> np.ndarray:
        widths = np.diff(self.depth_edges)[:, None]
        return self.counts / (self.normalization * widths)

    @property
    def angle_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=0) / self.normalization


# --------------------------------------------------------------------- simulation

def _mmbm_increments(model: MapModel, n: int, dt: float, state: int, rng):
    states = np.empty(n + 1, dtype=int)
    states[0] = state
    inc = np.empty(n)
    z = rng.standard_normal(n)
    for k in range(n):
        s, occ = chain_occupation(model.Q, states[k], dt, rng)
        states[k + 1] = s
        inc[k] = occ @ model.drifts + math.sqrt(occ @ model.sigmas ** 2) * z[k]
    return inc, states


def _simulate_arrays(model: MapModel, n: int, dt: float, rng, state: int = 0):
    if model.kind == "bm_drift":
        inc = model.mu * dt + model.sigma * math.sqrt(dt) * rng.standard_normal(n)
        return inc, np.zeros(n + 1, dtype=int)
    return _mmbm_increments(model, n, dt, state, rng)


def simulate_map(model: MapModel, T: float, dt: float, seed: SeedLike, state: int = 0) -> MapPath:
    """Grid path on [0, T]; MMBM uses exact chain jumps and per-regime occupation."""
    if not (T > 0 and dt > 0):
        raise DomainError("T and dt must be positive")
    n = int(round(T / dt))
    rng = as_seed(seed).generator()
    inc, states = _simulate_arrays(model, n, dt, rng, state)
    xi = np.concatenate([[0.0], np.cumsum(inc)])
    times = np.arange(n + 1) * dt
    theta = np.eye(model.n_states)[states]
    return MapPath(times, xi, theta)


def _cell_variance(path: MapPath, model: Optional[MapModel]) -> Optional[np.ndarray]:
    if model is None:
        return None
    dt = np.diff(path.times)
    if model.kind == "bm_drift":
        return model.sigma ** 2 * dt
    st = np.argmax(path.theta, axis=1)
    return model.sigmas[st[:-1]] ** 2 * dt


# --------------------------------------------------------------------- minima

def running_minimum(path: MapPath):
    """Running minimum, last time it is achieved, and the state there."""
    n = path.n_live
    xi = path.xi[:n]
    mins = np.minimum.accumulate(xi)
    k = n - 1 - int(np.argmin(xi[::-1]))
    return mins, float(path.times[k]), path.state(k)


def _refine_min(xi: np.ndarray, var: np.ndarray, rng) -> tuple:
    """Bridge-exact minimum over the grid cells near the grid minimum.

    Cells whose endpoints lie within BRIDGE_WINDOW bridge standard deviations
    of the grid minimum receive an exact bridge minimum draw.
    Returns (min value, index of the cell's left knot or grid argmin,
    fraction of the cell at which the minimum sits).
    """
    k = xi.size - 1 - int(np.argmin(xi[::-1]))
    m = xi[k]
    if var is None or var.size == 0:
        return m, k, 0.0
    lo = np.minimum(xi[:-1], xi[1:])
    cand = np.nonzero(lo < m + BRIDGE_WINDOW * np.sqrt(var))[0]
    bm = bridge_minimum(xi[cand], xi[cand + 1], var[cand], rng.random(cand.size))
    j = int(np.argmin(bm))
    if bm[j] < m:
        c = int(cand[j])
        frac = bridge_argmin_fraction(xi[c], xi[c + 1], bm[j], var[c], rng.random())
        return float(bm[j]), c, frac
    return float(m), k, 0.0


def pocr_from_path(path: MapPath, margin: float, model: Optional[MapModel] = None,
                   rng: Optional[np.random.Generator] = None):
    """Point of closest reach of a MAP path, or None on horizon-fail.

    The running minimum on the window is accepted as global when the path
    ends more than ``margin`` above it. With ``model`` and ``rng`` the
    minimum inside grid cells is drawn from the exact Brownian bridge law.
    """
    n = path.n_live
    xi = path.xi[:n]
    var = _cell_variance(path, model) if rng is not None else None
    m, k, frac = _refine_min(xi, None if var is None else var[: n - 1], rng)
    if xi[-1] - m <= margin:
        return None
    g = path.times[k] + (frac * (path.times[k + 1] - path.times[k]) if frac > 0 else 0.0)
    return PocrSample(depth=max(0.0, -m), angle=Angle(path.theta[k]), gtime=float(g))


def extract_excursions(path: MapPath, eps_grid: float = 0.0) -> List[Excursion]:
    """Maximal grid intervals on which U = xi - running min exceeds eps_grid."""
    n = path.n_live
    xi = path.xi[:n]
    u = xi - np.minimum.accumulate(xi)
    pos = u > eps_grid
    out = []
    k = 0
    while k < n:
        if not pos[k]:
            k += 1
            continue
        g = k - 1
        e = k
        while e < n and pos[e]:
            e += 1
        complete = e < n
        end = e if complete else n - 1
        sl = slice(g, end + 1)
        out.append(Excursion(float(path.times[g]), float(path.times[end]), u[sl].copy(),
                             path.theta[sl].copy(), complete))
        k = e
    return out


# --------------------------------------------------------------------- ensembles

def _bm_extremes_block(start, count, rng, mu, sigma, T, dt, margin, t_fixed):
    """Depth, time of min, value at t_fixed and ok flag for a block of BM paths."""
    n = int(round(T / dt))
    depth = np.empty(count)
    gtime = np.empty(count)
    x_fixed = np.full(count, np.nan)
    ok = np.zeros(count, bool)
    var = sigma ** 2 * dt
    kf = None if t_fixed is None else int(round(t_fixed / dt))
    for i in range(count):
        xi = np.concatenate([[0.0], np.cumsum(mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(n))])
        m, k, frac = _refine_min(xi, np.full(n, var) if var > 0 else None, rng)
        tries = 0
        # extend the path until it has climbed past the margin
        while xi[-1] - m <= margin and tries < MAX_RETRIES:
            ext = xi[-1] + np.cumsum(mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(n * 2 ** tries))
            xi = np.concatenate([xi, ext])
            m, k, frac = _refine_min(xi, np.full(xi.size - 1, var) if var > 0 else None, rng)
            tries += 1
        ok[i] = xi[-1] - m > margin
        depth[i] = max(0.0, -m)
        gtime[i] = (k + frac) * dt
        if kf is not None:
            x_fixed[i] = xi[kf]
    return depth, gtime, x_fixed, ok


def bm_pocr_ensemble(mu: float, sigma: float, N: int, T: float, dt: float, margin: float,
                     seed: SeedLike, t_fixed: Optional[float] = None, threads: int = 1,
                     block: int = 250) -> dict:
    """Depth, time of minimum and value at ``t_fixed`` for N BM paths.

    Horizon-fails extend the path (doubling) up to four times; survivors of
    all retries are flagged in ``ok``.
    """
    res = run_blocks(_bm_extremes_block, N, block, seed, threads,
                     (mu, sigma, T, dt, margin, t_fixed))
    depth, gtime, x_fixed, ok = concat_blocks(res)
    return {"depth": depth, "gtime": gtime, "x_fixed": x_fixed, "ok": ok,
            "horizon_fails": int((~ok).sum())}


def estimate_ladder_marginal(model: MapModel, N: int, T: float, dt: float, margin: float,
                             seed: SeedLike, depth_edges=None, threads: int = 1,
                             state: Optional[int] = None) -> LadderHistogram:
    """Histogram of (depth, modulator state at the minimum) over N paths.

    ``state=None`` draws each starting state from the stationary law.
    """
    seed = as_seed(seed)
    if model.mean_drift() <= 0:
        raise DomainError("model must drift upwards")
    pi = model.stationary()
    samples = []
    fails = 0
    for i in range(N):
        rng = seed.child(i).generator()
        s0 = int(rng.choice(pi.size, p=pi)) if state is None else state
        path = simulate_map(model, T, dt, seed.child(i, 1), state=s0)
        s = pocr_from_path(path, margin, model, rng)
        horizon = T
        tries = 0
        while s is None and tries < MAX_RETRIES:
            ext = simulate_map(model, horizon, dt, seed.child(i, 2 + tries),
                               state=int(np.argmax(path.theta[-1])))
            path = MapPath(np.concatenate([path.times, path.times[-1] + ext.times[1:]]),
                           np.concatenate([path.xi, path.xi[-1] + ext.xi[1:]]),
                           np.vstack([path.theta, ext.theta[1:]]))
            horizon *= 2
            tries += 1
            s = pocr_from_path(path, margin, model, rng)
        if s is None:
            fails += 1
        else:
            samples.append(s)
    depths = np.array([s.depth for s in samples])
    states = np.array([int(np.argmax(s.angle.vec)) for s in samples], dtype=int)
    if depth_edges is None:
        depth_edges = np.quantile(depths, np.linspace(0, 1, 21)) if depths.size else np.linspace(0, 1, 21)
        depth_edges[0] = 0.0
        depth_edges[-1] = np.inf
    depth_edges = np.asarray(depth_edges, dtype=float)
    nS = model.n_states
    counts = np.zeros((depth_edges.size - 1, nS))
    b = np.clip(np.searchsorted(depth_edges, depths, side="right") - 1, 0, depth_edges.size - 2)
    np.add.at(counts, (b, states), 1)
    return LadderHistogram(depth_edges, np.arange(nS + 1), counts, len(samples), fails)


# --------------------------------------------------------------------- identities

def _occupation_block(start, count, rng, mu, sigma, level, T, dt, g):
    """Per path: (int_0^tau g(S-xi) dt, tau) with tau the passage time above level."""
    acc = np.zeros(count)
    tau = np.full(count, np.nan)
    n = int(round(T / dt))
    for i in range(count):
        x0 = 0.0
        s0 = 0.0
        a = 0.0
        t = 0.0
        for _ in range(MAX_RETRIES + 1):
            xi = x0 + np.cumsum(mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(n))
            xi = np.concatenate([[x0], xi])
            run_max = np.maximum.accumulate(np.maximum(xi, s0))
            hit = np.nonzero(xi[1:] > level)[0]
            stop = hit[0] + 1 if hit.size else n
            a += float(np.sum(g(run_max[:stop] - xi[:stop])) * dt)
            t += stop * dt
            if hit.size:
                tau[i] = t
                break
            x0, s0 = xi[-1], run_max[-1]
        acc[i] = a
    return acc, tau


def check_levy_occupation_identity(mu: float, g: Callable, N: int, T: float, dt: float,
                                   seed: SeedLike, sigma: float = 1.0, level: float = 10.0,
                                   depth_samples: Optional[np.ndarray] = None, threads: int = 1,
                                   name: str = "occupation") -> dict:
    """Monte Carlo check of the occupation identity for BM with drift mu > 0.

    Local time at the maximum is the running maximum S. Each path is run up
    to its first passage above ``level`` (a whole number of ladder cycles),
    which gives the unbiased estimators

        n+(int_0^zeta g) ~ sum int_0^tau g(S - xi) dt / (N * level),
        normalised form    = sum int g / sum tau.

    With this local time the killing rate is q = mu*sigma**-2 and the
    ladder potential is V(dy) = (2/sigma**2) exp(-2 mu y / sigma**2) dy, so
    q * V is the depth law Exp(2 mu / sigma**2). The normalised form is
    compared with E[g(depth)] both analytically and with depth samples.
    """
    if mu <= 0:
        raise DomainError("mu must be positive")
    seed = as_seed(seed)
    res = run_blocks(_occupation_block, N, 500, seed, threads, (mu, sigma, level, T, dt, g))
    acc, tau = concat_blocks(res)
    good = np.isfinite(tau)
    acc, tau = acc[good], tau[good]
    rate = 2 * mu / sigma ** 2
    V = integrate.quad(lambda y: (2 / sigma ** 2) * math.exp(-rate * y) * g(np.array(y)), 0, np.inf)[0]
    q = mu / sigma ** 2
    lhs_unnorm = float(acc.sum() / (acc.size * level))
    lhs_norm = float(acc.sum() / tau.sum()) if tau.sum() > 0 else float("nan")
    # per-path delta method standard error of the ratio
    resid = acc - lhs_norm * tau
    se_norm = float(np.sqrt(np.mean(resid ** 2) / acc.size) / np.mean(tau))
    rhs_norm = q * V
    if depth_samples is None:
        depth_samples = seed.child(10 ** 6).generator().standard_exponential(N) / rate
    rhs_mc = float(np.mean(g(np.asarray(depth_samples))))
    rel = abs(lhs_norm - rhs_norm) / abs(rhs_norm) if rhs_norm != 0 else abs(lhs_norm)
    rel_un = abs(lhs_unnorm - V) / abs(V) if V != 0 else abs(lhs_unnorm)
    rel_mc = abs(lhs_norm - rhs_mc) / abs(rhs_mc) if rhs_mc != 0 else abs(lhs_norm)
    reports = [
        TestReport(f"{name}:normalised_vs_analytic", rel, rhs_norm, 0.05, None, int(acc.size),
                   seed.master_seed, rel <= 0.05, details={"lhs": lhs_norm, "se": se_norm}),
        TestReport(f"{name}:normalised_vs_depth_mc", rel_mc, rhs_mc, 0.05, None, int(acc.size),
                   seed.master_seed, rel_mc <= 0.05, details={"lhs": lhs_norm}),
        TestReport(f"{name}:per_local_time_vs_potential", rel_un, V, 0.05, None, int(acc.size),
                   seed.master_seed, rel_un <= 0.05, details={"lhs": lhs_unnorm,
                                                              "mean_excursion_time_per_local_time": float(tau.sum() / (tau.size * level))}),
    ]
    return {"lhs_normalised": lhs_norm, "lhs_per_local_time": lhs_unnorm, "rhs_normalised": rhs_norm,
            "rhs_potential": V, "rhs_depth_mc": rhs_mc, "se": se_norm, "n": int(acc.size),
            "reports": reports}


def _reversal_block(start, count, rng, mu, sigma, t, dt):
    n = int(round(t / dt))
    out = np.empty((4, count))
    for i in range(count):
        inc = mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(n)
        xi = np.concatenate([[0.0], np.cumsum(inc)])
        # last time the minimum is achieved
        k = n - int(np.argmin(xi[::-1]))
        out[0, i] = xi[-1] - xi[k]
        out[1, i] = t - k * dt
        inc_d = -mu * dt + sigma * math.sqrt(dt) * rng.standard_normal(n)
        xd = np.concatenate([[0.0], np.cumsum(inc_d)])
        kd = n - int(np.argmin(xd[::-1]))
        out[2, i] = -xd[kd]
        out[3, i] = kd * dt
    return tuple(out)


def check_time_reversal(model: MapModel, t: float, N: int, dt: float, seed: SeedLike,
                        threshold: float = 0.02, threads: int = 1) -> list:
    """Two-sample KS checks of the reversal identity for BM with drift.

    The dual of BM(mu) is BM(-mu). Compared pairs: (xi_t - min xi under P)
    against (-min under the dual), and (t - g_t under P) against (g_t
    under the dual), with g_t the last time of the minimum on [0, t].
    """
    if model.kind != "bm_drift":
        raise DomainError("time reversal check is implemented for BM_DRIFT")
    if not t > 0:
        raise DomainError("t must be positive")
    seed = as_seed(seed)
    if model.sigma == 0:
        n = int(round(t / dt))
        xi = model.mu * dt * np.arange(n + 1)
        xd = -xi
        k = n - int(np.argmin(xi[::-1]))
        kd = n - int(np.argmin(xd[::-1]))
        a = (np.full(N, xi[-1] - xi[k]), np.full(N, t - k * dt))
        b = (np.full(N, -xd[kd]), np.full(N, kd * dt))
    else:
        res = run_blocks(_reversal_block, N, 1000, seed, threads, (model.mu, model.sigma, t, dt))
        u, tg, dmin, dg = concat_blocks(res)
        a, b = (u, tg), (dmin, dg)
    reports = []
    for label, x, y in (("range_vs_dual_min", a[0], b[0]), ("time_vs_dual_argmin", a[1], b[1])):
        stat, p = ks_two_sample(x, y)
        reports.append(TestReport(f"time_reversal[mu={model.mu}]:{label}", stat, "two-sample", threshold,
                                  p, N, seed.master_seed, stat < threshold))
    return reports
