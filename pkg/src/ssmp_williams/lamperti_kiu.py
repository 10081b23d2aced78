"""Lamperti-Kiu transform between MAP grid paths and ssMp grid paths.

Both directions use the left-endpoint rule, so a path that is constant on
each grid cell is transformed exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, MapPath, SsmpPath
from .sampling import SeedLike, as_seed


@dataclass(frozen=True)
class TimeChange:
    """Clock values int_0^{t_k} exp(alpha*xi_u) du at the MAP grid knots."""

    alpha: float
    clock: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.clock[0] != 0.0 or np.any(np.diff(self.clock) < 0):
            raise DomainError("clock must start at 0 and be nondecreasing")

    @property
    def lifetime(self) -> float:
        """The ssMp lifetime, i.e. the final clock value."""
        return float(self.clock[-1])


def _last_knot(p) -> int:
    return p.killed if p.killed is not None else len(p) - 1


def build_clock(map_path: MapPath, alpha: float) -> TimeChange:
    """Left-endpoint clock: clock[k] = sum_{j<k} exp(alpha*xi_j)*(t_{j+1}-t_j)."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    L = _last_knot(map_path)
    t = map_path.times[: L + 1]
    xi = map_path.xi[:L]
    clock = np.concatenate([[0.0], np.cumsum(np.exp(alpha * xi) * np.diff(t))])
    return TimeChange(float(alpha), clock, t.copy())


def phi(tc: TimeChange, t) -> np.ndarray:
    """Generalised inverse of the clock; ``inf`` past the lifetime.

    Linear interpolation inside a cell, exact when xi is constant there.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be >= 0")
    c = tc.clock
    k = np.clip(np.searchsorted(c, t, side="right") - 1, 0, c.size - 2)
    width = c[k + 1] - c[k]
    frac = np.divide(t - c[k], width, out=np.zeros_like(t), where=width > 0)
    s = tc.knots[k] + frac * (tc.knots[k + 1] - tc.knots[k])
    s = np.where(t >= c[-1], np.inf, s)
    return s if s.ndim else float(s)


def ssmp_from_map(map_path: MapPath, alpha: float, out_times=None) -> SsmpPath:
    """X_t = exp(xi_{phi(t)}) * Theta_{phi(t)} at ``out_times``.

    The default output grid is the clock at the MAP knots. Output times at or
    past the lifetime start the kill segment; ``meta['horizon']`` is True when
    that lifetime is only the end of the simulated MAP window.
    """
    tc = build_clock(map_path, alpha)
    L = _last_knot(map_path)
    if out_times is None:
        out_times = tc.clock[: L + 1] if map_path.killed is not None else tc.clock
    out_times = np.asarray(out_times, dtype=float)
    c = tc.clock
    alive = out_times < c[-1]
    # cell k with c[k] <= t < c[k+1]; value held from the left knot
    k = np.clip(np.searchsorted(c, out_times, side="right") - 1, 0, max(L - 1, 0))
    if map_path.killed is None:
        # the last sample has no cell to the right; it is reached exactly at c[-1]
        k = np.where(out_times >= c[-1], L, k)
        alive = out_times <= c[-1]
    pts = np.exp(map_path.xi[k])[:, None] * map_path.theta[k]
    killed = None
    if not np.all(alive):
        killed = int(np.argmin(alive))
        pts[killed:] = np.nan
    meta = {"lifetime": tc.lifetime, "horizon": map_path.killed is None}
    return SsmpPath(out_times, pts, float(alpha), killed, meta)


def zeta_clock(ssmp_path: SsmpPath) -> np.ndarray:
    """Left-endpoint values of int_0^{t_k} |X_s|^{-alpha} ds at the knots."""
    L = _last_knot(ssmp_path)
    r = ssmp_path.radii[:L]
    if np.any(r == 0):
        raise DomainError("zero point before the kill index")
    return np.concatenate([[0.0], np.cumsum(r ** (-ssmp_path.alpha) * np.diff(ssmp_path.times[: L + 1]))])


def map_from_ssmp(ssmp_path: SsmpPath) -> MapPath:
    """Inverse transform: xi = log|X|, Theta = X/|X| on the zeta-clock grid."""
    L = _last_knot(ssmp_path)
    zc = zeta_clock(ssmp_path)
    n = L + 1 if ssmp_path.killed is not None else len(ssmp_path)
    pts = ssmp_path.points[:n]
    times = zc[:n] if ssmp_path.killed is not None else zc
    r = np.linalg.norm(pts, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        xi = np.log(r)
        theta = pts / r[:, None]
    killed = ssmp_path.killed
    if killed is not None:
        xi[killed:] = np.nan
        theta[killed:] = np.nan
    return MapPath(times, xi, theta, killed)


def round_trip_error(map_path: MapPath, alpha: float) -> float:
    """Sup-norm gap after MAP -> ssMp -> MAP on the knot grid."""
    back = map_from_ssmp(ssmp_from_map(map_path, alpha))
    n = map_path.n_live
    errs = [
        np.max(np.abs(back.times[: len(map_path)] - map_path.times)),
        np.max(np.abs(back.xi[:n] - map_path.xi[:n])),
        np.max(np.abs(back.theta[:n] - map_path.theta[:n])),
    ]
    return float(max(errs))


def ssmp_round_trip_error(ssmp_path: SsmpPath) -> float:
    """Sup-norm gap after ssMp -> MAP -> ssMp on the knot grid."""
    back = ssmp_from_map(map_from_ssmp(ssmp_path), ssmp_path.alpha)
    n = ssmp_path.n_live
    errs = [
        np.max(np.abs(back.times[: len(ssmp_path)] - ssmp_path.times)),
        np.max(np.abs(back.points[:n] - ssmp_path.points[:n])),
    ]
    return float(max(errs))


def scale_map_path(map_path: MapPath, c: float) -> MapPath:
    """The MAP (xi + log c, Theta), whose transform is c*X at time scale c**-alpha."""
    return MapPath(map_path.times, map_path.xi + math.log(c), map_path.theta, map_path.killed)


def clock_convergence(mu: float, sigma: float, alpha: float, T: float, dt: float,
                      n_paths: int, seed: SeedLike, levels: int = 3, refine: int = 4) -> dict:
    """Grid convergence of the clock on Brownian paths.

    Each path of BM(mu, sigma) is simulated at resolution dt/2**(levels-1+refine)
    and subsampled to dt, dt/2, ...; the error at a level is the sup over
    the coarse knots of the clock gap to the finest clock, averaged over
    paths. Returns the errors and the successive ratios.
    """
    seed = as_seed(seed)
    fine = 2 ** (levels - 1 + refine)
    n = int(round(T / dt))
    dtf = dt / fine
    errs = np.zeros(levels)
    for i in range(n_paths):
        rng = seed.child(i).generator()
        inc = mu * dtf + sigma * math.sqrt(dtf) * rng.standard_normal(n * fine)
        xi = np.concatenate([[0.0], np.cumsum(inc)])
        ref = np.concatenate([[0.0], np.cumsum(np.exp(alpha * xi[:-1]) * dtf)])
        for lev in range(levels):
            step = fine >> lev
            xs = xi[::step]
            ck = np.concatenate([[0.0], np.cumsum(np.exp(alpha * xs[:-1]) * dtf * step)])
            errs[lev] += np.max(np.abs(ck - ref[::step]))
    errs /= n_paths
    return {"dt": [dt / 2 ** k for k in range(levels)], "errors": errs.tolist(),
            "ratios": (errs[:-1] / errs[1:]).tolist()}
