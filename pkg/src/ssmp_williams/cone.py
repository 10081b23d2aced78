"""Planar Brownian motion conditioned to stay in the cone |arg z| < phi0.

Series for the angular taboo semigroup, the ground state, the cone
change of measure, ladder densities and the Monte Carlo checks that go with
them. Angles are radians; the process is standard planar BM, so in Lamperti
time the log-radius and the angle are independent standard BMs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import DomainError, SsmpPath
from .map_fluct import bm_pocr_ensemble
from .sampling import SeedLike, as_seed, concat_blocks, run_blocks
from .stats import TestReport, threshold_report, total_variation

TAIL = 1e-12
K_MAX = 200_000
# sentinel for a series evaluated where it does not converge
DIVERGENT = float("nan")


@dataclass(frozen=True)
class ConeParams:
    phi0: float
    K: int = 1

    def __post_init__(self):
        if not 0 < self.phi0 < math.pi:
            raise DomainError("phi0 must lie in (0, pi)")
        if int(self.K) < 1:
            raise DomainError("K must be >= 1")

    @property
    def c(self) -> float:
        """pi / (2 phi0): drift of the log-radius and frequency of the ground state."""
        return math.pi / (2 * self.phi0)

    def terms_for_rate(self, rate: float) -> int:
        """Smallest K >= self.K with (1/phi0) exp(-rate*(K+1)) < TAIL."""
        if rate <= 0:
            return K_MAX
        k = math.ceil(math.log(1.0 / (TAIL * self.phi0)) / rate)
        return int(min(K_MAX, max(self.K, k)))


def _check_angle(v, cone: ConeParams, closed: bool = False):
    v = np.asarray(v, dtype=float)
    bad = (np.abs(v) > cone.phi0) if closed else (np.abs(v) >= cone.phi0)
    if np.any(bad):
        raise DomainError("angle outside the cone interval")
    return v


def _sin_k(k, v, cone):
    return np.sin(k * cone.c * (v + cone.phi0))


def ground_state(phi, cone: ConeParams):
    """M(phi) = sin(pi (phi + phi0) / (2 phi0))."""
    phi = _check_angle(phi, cone, closed=True)
    return np.sin(cone.c * (phi + cone.phi0))


def lambda1(cone: ConeParams) -> float:
    """Eigenvalue of -d^2/dphi^2 with Dirichlet conditions: pi^2 / (4 phi0^2)."""
    return math.pi ** 2 / (4 * cone.phi0 ** 2)


def taboo_rate(cone: ConeParams) -> float:
    """Decay rate of the killed angular BM (generator 1/2 d^2): lambda1 / 2."""
    return lambda1(cone) / 2


def taboo_density(phi, theta, s, cone: ConeParams):
    """Transition density of BM on (-phi0, phi0) killed at the endpoints."""
    phi = _check_angle(phi, cone)
    theta = _check_angle(theta, cone)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("s must be positive")
    K = cone.terms_for_rate(taboo_rate(cone) * float(np.min(s)))
    K = max(K, math.ceil(math.sqrt(max(1.0, math.log(1 / (TAIL * cone.phi0)) / (taboo_rate(cone) * float(np.min(s)))))))
    k = np.arange(1, K + 1)
    ph, th, ss = np.broadcast_arrays(phi, theta, s)
    terms = (np.exp(-np.multiply.outer(ss, k ** 2) * taboo_rate(cone))
             * _sin_k(k, ph[..., None], cone) * _sin_k(k, th[..., None], cone))
    out = terms.sum(axis=-1) / cone.phi0
    return float(out) if out.ndim == 0 else out


def taboo_survival(phi, s, cone: ConeParams):
    """P(killed angular BM from phi survives to time s), the theta-integral of taboo_density."""
    phi = _check_angle(phi, cone)
    rate = taboo_rate(cone) * s
    K = max(cone.K, math.ceil(math.sqrt(max(1.0, math.log(1 / TAIL) / rate))))
    k = np.arange(1, K + 1)
    integ = (1 - np.cos(k * math.pi)) / (k * cone.c)
    out = np.sum(np.exp(-rate * k ** 2) * _sin_k(k, np.asarray(phi)[..., None], cone) * integ, axis=-1) / cone.phi0
    return float(out) if np.ndim(out) == 0 else out


def half_stable_density(s, y):
    """Density in s of the first passage time of standard BM to level y."""
    s = np.asarray(s, dtype=float)
    return y / np.sqrt(2 * math.pi * s ** 3) * np.exp(-y * y / (2 * s))


def u_dagger_density(s, y, theta, phi, cone: ConeParams):
    """Joint density of (inverse local time, depth, angle) for the unconditioned pair."""
    if np.any(np.asarray(s) <= 0) or np.any(np.asarray(y) <= 0):
        raise DomainError("s and y must be positive")
    phi = _check_angle(phi, cone)
    theta = _check_angle(theta, cone)
    K = max(cone.K, math.ceil(math.sqrt(max(1.0, math.log(1 / TAIL) / (taboo_rate(cone) * float(np.min(s)))))))
    k = np.arange(1, K + 1)
    s_, y_, th, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(y, float), theta, phi)
    series = np.sum(np.exp(-np.multiply.outer(s_, k ** 2) * taboo_rate(cone))
                    * _sin_k(k, ph[..., None], cone) * _sin_k(k, th[..., None], cone), axis=-1)
    out = y_ / (cone.phi0 * math.sqrt(2 * math.pi)) * np.exp(-y_ ** 2 / (2 * s_)) * s_ ** -1.5 * series
    return float(out) if out.ndim == 0 else out


def _ladder_series(y, theta, phi, cone, weight_theta=False):
    phi = _check_angle(phi, cone)
    theta = _check_angle(theta, cone)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be >= 0")
    y_, th, ph = np.broadcast_arrays(y, theta, phi)
    out = np.full(y_.shape, DIVERGENT)
    pos = y_ > 0
    if np.any(pos):
        K = cone.terms_for_rate(cone.c * float(np.min(y_[pos])))
        k = np.arange(1, K + 1)
        terms = (np.exp(-np.multiply.outer(y_[pos], k + 1) * cone.c)
                 * _sin_k(k, ph[pos][..., None], cone) * _sin_k(k, th[pos][..., None], cone))
        out[pos] = terms.sum(axis=-1) / cone.phi0
    if np.any(~pos):
        out[~pos] = _zero_y_value(th[~pos], ph[~pos], cone)
    if weight_theta:
        out = out * 2 * cone.c * ground_state(th, cone) / ground_state(ph, cone)
    return float(out) if out.ndim == 0 else out


def _zero_y_value(th, ph, cone, n=4096):
    """Cauchy test on partial sums at y=0; returns the limit or DIVERGENT."""
    k = np.arange(1, n + 1)
    terms = _sin_k(k, ph[..., None], cone) * _sin_k(k, th[..., None], cone)
    tail = np.abs(terms[..., n // 2:]).max(axis=-1)
    total = terms.sum(axis=-1) / cone.phi0
    return np.where(tail < TAIL, total, DIVERGENT)


def ladder_density_cone(y, theta, phi, cone: ConeParams):
    """The displayed ladder series (1/phi0) sum_k e^{-pi(k+1)y/2phi0} sin_k(phi) sin_k(theta).

    At y = 0 the series does not converge and DIVERGENT is returned.
    """
    return _ladder_series(y, theta, phi, cone)


def pocr_law_cone(y, theta, phi, cone: ConeParams):
    """Density of (depth, angle) at the closest reach under the cone conditioning.

    This is the ladder series multiplied by the killing rate pi/phi0 and by
    M(theta)/M(phi); it integrates to 1 over (0, inf) x (-phi0, phi0).
    """
    return _ladder_series(y, theta, phi, cone, weight_theta=True)


def survival_ladder(y, cone: Union[ConeParams, float]):
    """exp(-y pi / phi0). A bare half-angle may be given and may equal pi (the slit plane)."""
    phi0 = cone.phi0 if isinstance(cone, ConeParams) else float(cone)
    if not 0 < phi0 <= math.pi:
        raise DomainError("phi0 must lie in (0, pi]")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be >= 0")
    out = np.exp(-y * math.pi / phi0)
    return float(out) if out.ndim == 0 else out


def _arg(points: np.ndarray) -> np.ndarray:
    return np.arctan2(points[..., 1], points[..., 0])


def cone_com_weight(path: SsmpPath, x, cone: ConeParams) -> float:
    """M(arg X_t)/M(arg x) * (|X_t|/|x|)^{pi/2phi0} at the last sample; 0 after any exit."""
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) == 0 or abs(math.atan2(x[1], x[0])) >= cone.phi0:
        raise DomainError("start outside the cone")
    pts = path.points[: path.n_live]
    if path.killed is not None:
        return 0.0
    ang = _arg(pts)
    if np.any(np.abs(ang) >= cone.phi0) or np.any(np.linalg.norm(pts, axis=1) == 0):
        return 0.0
    a0 = math.atan2(x[1], x[0])
    m = ground_state(ang[-1], cone) / ground_state(a0, cone)
    return float(m * (np.linalg.norm(pts[-1]) / np.linalg.norm(x)) ** cone.c)


# --------------------------------------------------------------------- bin masses

def _theta_sin_integral(k, a, b, cone):
    """int_a^b sin(k c (theta + phi0)) dtheta."""
    kc = k * cone.c
    return (np.cos(kc * (a + cone.phi0)) - np.cos(kc * (b + cone.phi0))) / kc


def _theta_M_sin_integral(k, a, b, cone):
    """int_a^b M(theta) sin(k c (theta + phi0)) dtheta."""
    c = cone.c
    ua, ub = a + cone.phi0, b + cone.phi0

    def cos_int(m):
        m = np.asarray(m, dtype=float)
        safe = np.where(m == 0, 1.0, m)
        val = (np.sin(safe * c * ub) - np.sin(safe * c * ua)) / (safe * c)
        return np.where(m == 0, ub - ua, val)

    return 0.5 * (cos_int(k - 1) - cos_int(k + 1))


def ladder_bin_masses(y_edges, theta_edges, phi, cone: ConeParams, corrected: bool = False,
                      K: int = 20000) -> np.ndarray:
    """Exact bin integrals of the ladder series (or the corrected law) term by term.

    The last y edge may be inf. Returns an array (len(y_edges)-1, len(theta_edges)-1).
    """
    y_edges = np.asarray(y_edges, dtype=float)
    theta_edges = np.asarray(theta_edges, dtype=float)
    k = np.arange(1, K + 1, dtype=float)
    rate = (k + 1) * cone.c
    ey = np.exp(-np.outer(y_edges, rate))
    ey[np.isinf(y_edges)] = 0.0
    yint = (ey[:-1] - ey[1:]) / rate
    if corrected:
        tint = np.array([_theta_M_sin_integral(k, a, b, cone) for a, b in zip(theta_edges[:-1], theta_edges[1:])])
        pref = 2 * cone.c / (cone.phi0 * float(ground_state(phi, cone)))
    else:
        tint = np.array([_theta_sin_integral(k, a, b, cone) for a, b in zip(theta_edges[:-1], theta_edges[1:])])
        pref = 1.0 / cone.phi0
    sphi = _sin_k(k, phi, cone)
    return pref * np.einsum("ik,jk,k->ij", yint, tint, sphi)


# --------------------------------------------------------------------- Monte Carlo

def _taboo_block(start, count, rng, phi, phi0, s, dt):
    n = int(round(s / dt))
    th = np.full(count, float(phi))
    alive = np.ones(count, bool)
    sd = math.sqrt(dt)
    for _ in range(n):
        new = th + sd * rng.standard_normal(count)
        up = np.exp(-2 * np.maximum(phi0 - th, 0) * np.maximum(phi0 - new, 0) / dt)
        lo = np.exp(-2 * np.maximum(th + phi0, 0) * np.maximum(new + phi0, 0) / dt)
        u = rng.random(count)
        exited = (np.abs(new) >= phi0) | (u < up + lo)
        alive &= ~exited
        th = new
    return (alive.astype(float),)


def taboo_survival_mc(phi: float, s: float, cone: ConeParams, N: int, seed: SeedLike, dt: float = 1e-3,
                      threads: int = 1) -> TestReport:
    """Fraction of angular BMs still inside at time s vs the integrated taboo series."""
    seed = as_seed(seed)
    alive = concat_blocks(run_blocks(_taboo_block, N, 10000, seed, threads, (phi, cone.phi0, s, dt)))[0]
    mc = float(alive.mean())
    ref = float(taboo_survival(phi, s, cone))
    rel = abs(mc - ref) / ref
    return threshold_report("taboo_survival", rel, ref, 0.01, N, seed.master_seed, mc=mc,
                            se=float(alive.std() / math.sqrt(N)))


def _exit_prob(prev, new, phi0, dt):
    """Bridge probability that a planar BM cell leaves the cone between endpoints.

    Uses the signed distance to each boundary line, which is a 1-d BM.
    """
    nvec = [np.array([-math.sin(phi0), math.cos(phi0)]), np.array([-math.sin(phi0), -math.cos(phi0)])]
    p_stay = np.ones(prev.shape[0])
    for nv in nvec:
        a = -(prev @ nv)
        b = -(new @ nv)
        p = np.where((a <= 0) | (b <= 0), 1.0, np.exp(-2 * np.maximum(a, 0) * np.maximum(b, 0) / dt))
        p_stay *= 1 - p
    return 1 - p_stay


def _cone_mg_block(start, count, rng, x0, phi0, times, dt):
    out = np.zeros((count, len(times)))
    cone = ConeParams(phi0)
    x = np.repeat(np.asarray(x0, dtype=float)[None, :], count, axis=0)
    alive = np.ones(count, bool)
    t = 0.0
    a0 = math.atan2(x0[1], x0[0])
    r0 = float(np.linalg.norm(x0))
    m0 = float(ground_state(a0, cone))
    for c, tc in enumerate(times):
        n = int(round((tc - t) / dt))
        for _ in range(n):
            new = x + math.sqrt(dt) * rng.standard_normal(x.shape)
            if phi0 <= math.pi / 2:
                pe = _exit_prob(x, new, phi0, dt)
            else:
                # complement is convex; endpoint test plus the nearer line's bridge
                pe = np.minimum(1.0, _exit_prob(x, new, phi0, dt))
            exited = (np.abs(_arg(new)) >= phi0) | (rng.random(count) < pe)
            alive &= ~exited
            x = new
        t = tc
        ang = np.clip(_arg(x), -phi0, phi0)
        w = np.sin(cone.c * (ang + phi0)) / m0 * (np.linalg.norm(x, axis=1) / r0) ** cone.c
        out[:, c] = np.where(alive, w, 0.0)
    return (out,)


def check_cone_martingale(x0, cone: ConeParams, times: Sequence[float], N: int, seed: SeedLike,
                          dt: float = 1e-3, threads: int = 1) -> list:
    """Mean of the cone weight is 1 within 3 SE at each checkpoint time."""
    seed = as_seed(seed)
    w = concat_blocks(run_blocks(_cone_mg_block, N, 2000, seed, threads,
                                 (np.asarray(x0, dtype=float), cone.phi0, tuple(times), dt)))[0]
    reports = []
    for c, t in enumerate(times):
        m = float(w[:, c].mean())
        se = float(w[:, c].std(ddof=1) / math.sqrt(N))
        z = abs(m - 1) / se
        reports.append(TestReport(f"martingale_cone[t={t:g}]", z, 1.0, 3.0, None, N, seed.master_seed,
                                  z <= 3.0, details={"mean": m, "se": se}))
    return reports


def _killed_angle(phi, phi0, g, dt, rng):
    """Angular BM from phi run to per-path times g; returns (angle, survived) with bridge exit detection."""
    count = g.size
    th = np.full(count, float(phi))
    alive = np.ones(count, bool)
    t = np.zeros(count)
    while True:
        act = alive & (t < g)
        if not act.any():
            break
        h = np.minimum(dt, g - t)
        new = th + np.sqrt(h) * rng.standard_normal(count)
        up = np.exp(-2 * np.maximum(phi0 - th, 0) * np.maximum(phi0 - new, 0) / np.maximum(h, 1e-300))
        lo = np.exp(-2 * np.maximum(th + phi0, 0) * np.maximum(new + phi0, 0) / np.maximum(h, 1e-300))
        exited = (np.abs(new) >= phi0) | (rng.random(count) < up + lo)
        alive &= ~(act & exited)
        th = np.where(act, new, th)
        t = np.where(act, t + h, t)
    return th, alive


def _theta_at_block(start, count, rng, phi, phi0, g, dt):
    """Plain angular BM at g weighted by exp(lambda1 g / 2) M(theta_g)/M(phi) on survival."""
    cone = ConeParams(phi0)
    g = g[start:start + count]
    th, alive = _killed_angle(phi, phi0, g, dt, rng)
    ang = np.clip(th, -phi0, phi0)
    w = np.where(alive, np.exp(taboo_rate(cone) * g) * np.sin(cone.c * (ang + phi0))
                 / float(ground_state(phi, cone)), 0.0)
    return th, w


def conditioned_angle_cdf(theta, phi, s, cone: ConeParams):
    """CDF at theta of the conditioned angle at time s from phi.

    The conditioned angular process has transition density
    exp(lambda1 s / 2) M(theta)/M(phi) times taboo_density; the
    theta-integrals of M sin_k are done in closed form. theta may be an
    array; s is a scalar.
    """
    _check_angle(phi, cone)
    rate = taboo_rate(cone)
    K = max(cone.K, math.ceil(math.sqrt(max(1.0, math.log(1 / TAIL) / (rate * s)))))
    k = np.arange(1, K + 1)
    th = np.clip(np.asarray(theta, dtype=float), -cone.phi0, cone.phi0)
    ints = _theta_M_sin_integral(k, -cone.phi0, th[..., None], cone)
    coef = np.exp(-rate * (k * k - 1) * s) * _sin_k(k, phi, cone)
    out = ints @ coef / (cone.phi0 * float(ground_state(phi, cone)))
    return float(out) if np.ndim(out) == 0 else out


def _theta_exact_block(start, count, rng, phi, phi0, g, dt, s0, ngrid):
    """Exact draws of the conditioned angle at per-path times g.

    Times >= s0 invert the series CDF on a grid; shorter times draw the
    killed angular BM and accept with probability M(theta) (M <= 1), which
    targets the same law without weights.
    """
    cone = ConeParams(phi0)
    g = g[start:start + count]
    th = np.empty(count)
    big = np.flatnonzero(g >= s0)
    if big.size:
        grid = np.linspace(-phi0, phi0, ngrid)
        rate = taboo_rate(cone)
        K = max(cone.K, math.ceil(math.sqrt(math.log(1 / TAIL) / (rate * s0))))
        k = np.arange(1, K + 1)
        ints = _theta_M_sin_integral(k, -phi0, grid[:, None], cone)
        coef = np.exp(-rate * (k * k - 1) * g[big, None]) * _sin_k(k, phi, cone)
        F = np.maximum.accumulate(coef @ ints.T, axis=1)
        u = rng.random(big.size) * F[:, -1]
        th[big] = [np.interp(ui, Fi, grid) for ui, Fi in zip(u, F)]
    todo = np.flatnonzero(g < s0)
    while todo.size:
        cand, alive = _killed_angle(phi, phi0, g[todo], dt, rng)
        acc = alive & (rng.random(todo.size) < ground_state(np.clip(cand, -phi0, phi0), cone))
        th[todo[acc]] = cand[acc]
        todo = todo[~acc]
    return (th,)


def cone_pocr_ensemble(phi: float, cone: ConeParams, N: int, seed: SeedLike, T: float = 50.0,
                       dt: float = 1e-3, margin: float = 8.0, threads: int = 1, method: str = "exact") -> dict:
    """Closest reach (depth, angle) under the cone conditioning.

    Under the conditioning the log-radius is BM with drift pi/(2 phi0) and
    the angle is an independent conditioned angular process. The depth and
    its time g are taken from simulated drifting BM paths (bridge-exact
    minimum). The angle at g is drawn exactly (``method="exact"``, unit
    weights) or from plain angular BM weighted by the ground-state
    martingale exp(lambda1 g / 2) M(theta_g)/M(phi) (``method="weighted"``,
    whose weights lose effective sample size for large g).
    """
    seed = as_seed(seed)
    _check_angle(phi, cone)
    bm = bm_pocr_ensemble(cone.c, 1.0, N, T, dt, margin, seed.child(1), threads=threads)
    g = bm["gtime"]
    if method == "exact":
        res = run_blocks(_theta_exact_block, N, 2000, seed.child(2), threads,
                         (phi, cone.phi0, g, dt, cone.phi0 ** 2 / 10, 2049))
        theta = concat_blocks(res)[0]
        w = np.ones(N)
    elif method == "weighted":
        res = run_blocks(_theta_at_block, N, 2000, seed.child(2), threads, (phi, cone.phi0, g, dt))
        theta, w = concat_blocks(res)
    else:
        raise DomainError(f"unknown method {method!r}")
    return {"depth": bm["depth"], "gtime": g, "theta": theta, "weight": w, "ok": bm["ok"]}


def ladder_tv_check(phi: float, cone: ConeParams, N: int, seed: SeedLike, n_y: int = 20, n_theta: int = 12,
                    y_max: Optional[float] = None, threshold: float = 0.05, threads: int = 1,
                    ensemble: Optional[dict] = None) -> list:
    """Total variation between the weighted empirical (depth, angle) histogram and
    (a) the displayed ladder series and (b) the corrected closest-reach law.

    The top depth bin absorbs the overflow.
    """
    seed = as_seed(seed)
    ens = cone_pocr_ensemble(phi, cone, N, seed, threads=threads) if ensemble is None else ensemble
    if y_max is None:
        y_max = 3.0 * cone.phi0 / math.pi * 2.0
    y_edges = np.linspace(0.0, y_max, n_y + 1)
    y_edges[-1] = np.inf
    t_edges = np.linspace(-cone.phi0, cone.phi0, n_theta + 1)
    ok = ens["ok"]
    H = np.histogram2d(np.minimum(ens["depth"][ok], y_edges[-2] + 1.0), ens["theta"][ok],
                       bins=[np.append(y_edges[:-1], y_edges[-2] + 2.0), t_edges], weights=ens["weight"][ok])[0]
    p_hat = H / H.sum()
    lit = ladder_bin_masses(y_edges, t_edges, phi, cone)
    cor = ladder_bin_masses(y_edges, t_edges, phi, cone, corrected=True)
    w = ens["weight"][ok]
    ess = float(w.sum() ** 2 / np.sum(w * w))
    tv_lit = total_variation(p_hat, lit)
    tv_cor = total_variation(p_hat, cor)
    return [
        threshold_report("cone_ladder_tv:displayed_series", tv_lit, "displayed series", threshold, int(ok.sum()),
                         seed.master_seed, series_mass=float(lit.sum()),
                         tv_after_renormalising=total_variation(p_hat, lit / lit.sum()), ess=ess),
        threshold_report("cone_ladder_tv:corrected_law", tv_cor, "corrected law", threshold, int(ok.sum()),
                         seed.master_seed, law_mass=float(cor.sum()), ess=ess),
    ]
