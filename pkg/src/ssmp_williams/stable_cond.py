"""Isotropic alpha-stable process in R^d: closest-reach law, h-functions, conditioning.

Conventions: the process has characteristic exponent |theta|**alpha for
alpha < 2; alpha = 2 means standard Brownian motion. Barriers are spheres of
radius exp(y) and all h-functions are evaluated at x*exp(-y).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize, special

from . import _kernels as K
from .core import Angle, DomainError, SsmpPath
from .sampling import SeedLike, _stable_increment, as_seed, concat_blocks, run_blocks
from .stats import TestReport, kish_ess, threshold_report

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    d: int

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0,2]")
        if int(self.d) < 1:
            raise DomainError("d must be >= 1")
        if not self.alpha < self.d:
            raise DomainError("need alpha < d (transience)")
        object.__setattr__(self, "d", int(self.d))


@dataclass(frozen=True)
class Point:
    """Single target direction on the unit sphere."""

    theta: Angle


@dataclass(frozen=True)
class Patch:
    """Arc (d=2, radians a<b) or spherical cap (d=3, centre and half-angle)."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    center: Optional[Angle] = None
    half_angle: float = 0.0

    @classmethod
    def arc(cls, a: float, b: float) -> "Patch":
        if not b > a or b - a > 2 * math.pi + 1e-12:
            raise DomainError("arc needs a < b <= a + 2 pi")
        return cls("arc", a=float(a), b=float(b))

    @classmethod
    def cap(cls, center: Angle, half_angle: float) -> "Patch":
        if center.dim != 3 or not 0 < half_angle <= math.pi:
            raise DomainError("cap needs a 3-d centre and half-angle in (0, pi]")
        return cls("cap", center=center, half_angle=float(half_angle))


@dataclass(frozen=True)
class Up:
    """Conditioning never to enter the ball."""


@dataclass(frozen=True)
class Down:
    """Conditioning to reach the sphere continuously at ``target``."""

    target: Union[Point, Patch]


Kind = Union[Up, Down]


@dataclass
class DoobWeightedPath:
    path: SsmpPath
    weight: float
    alive: bool


@dataclass
class WeightedEnsemble:
    paths: List[SsmpPath]
    weights: np.ndarray
    ess_min: float
    warnings: List[str] = field(default_factory=list)

    @property
    def normalized_weights(self) -> np.ndarray:
        s = self.weights.sum()
        return self.weights / s if s > 0 else self.weights


# --------------------------------------------------------------------- closest reach

def pocr_constant(params: StableParams) -> float:
    a, d = params.alpha, params.d
    return (math.pi ** (-d / 2) * math.gamma(d / 2) ** 2
            / (math.gamma((d - a) / 2) * math.gamma(a / 2)))


def pocr_density(x, y, params: StableParams) -> float:
    """Density at y of the point of closest reach to the origin from x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = np.linalg.norm(x, axis=-1)
    ry = np.linalg.norm(y, axis=-1)
    if np.any(ry <= 0) or np.any(ry >= rx):
        raise DomainError("need 0 < |y| < |x|")
    a, d = params.alpha, params.d
    val = (pocr_constant(params) * (rx ** 2 - ry ** 2) ** (a / 2)
           / (np.linalg.norm(x - y, axis=-1) ** d * ry ** a))
    return float(val) if np.ndim(val) == 0 else val


def pocr_radius_density(u: float, params: StableParams) -> float:
    """Density of |X*|/|x| by quadrature of pocr_density over directions (d=2 or 3)."""
    if not 0 < u < 1:
        return 0.0
    x = np.zeros(params.d)
    x[0] = 1.0
    if params.d == 2:
        f = lambda t: pocr_density(x, [u * math.cos(t), u * math.sin(t)], params)
        # symmetric in t with a peak of width ~(1-u) at t=0
        pts = [k * (1 - u) for k in (1, 10, 100) if k * (1 - u) < math.pi] or None
        val = integrate.quad(f, 0.0, math.pi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-10)[0]
        return 2 * u * val
    if params.d == 3:
        f = lambda c: pocr_density(x, [u * c, u * math.sqrt(max(0.0, 1 - c * c)), 0.0], params)
        val = integrate.quad(f, -1.0, 1.0, points=[1.0 - 1e-6] if u > 0.9 else None, limit=400)[0]
        return 2 * math.pi * u * u * val
    raise DomainError("radius quadrature implemented for d=2,3")


def pocr_radius_cdf(u, params: StableParams):
    """Closed form: (|X*|/|x|)**2 is Beta((d-alpha)/2, alpha/2)."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return special.betainc((params.d - params.alpha) / 2, params.alpha / 2, u ** 2)


def _direction_given_radius(e: np.ndarray, u: np.ndarray, rng, d: int) -> np.ndarray:
    """Directions with density proportional to |e - u*theta|**-d on the sphere."""
    n = u.size
    if d == 2:
        v = rng.uniform(-math.pi, math.pi, n)
        z = np.exp(1j * v)
        phi = np.angle((z + u) / (1 + u * z))
        base = math.atan2(e[1], e[0])
        return np.column_stack([np.cos(base + phi), np.sin(base + phi)])
    if d == 3:
        s = 1.0 / (1.0 + u) + rng.random(n) * (1.0 / (1.0 - u) - 1.0 / (1.0 + u))
        c = (1.0 + u * u - s ** -2) / (2.0 * u)
    else:
        c = np.empty(n)
        v = rng.random(n)
        for i in range(n):
            dens = lambda t, ui=u[i]: (1 - 2 * ui * t + ui * ui) ** (-d / 2) * (1 - t * t) ** ((d - 3) / 2)
            tot = integrate.quad(dens, -1, 1, limit=200)[0]
            c[i] = optimize.brentq(lambda q: integrate.quad(dens, -1, q, limit=200)[0] / tot - v[i], -1, 1)
    c = np.clip(c, -1.0, 1.0)
    g = rng.standard_normal((n, d))
    g -= (g @ e)[:, None] * e
    g /= np.linalg.norm(g, axis=1)[:, None]
    return c[:, None] * e + np.sqrt(1 - c * c)[:, None] * g


def sample_pocr(x, params: StableParams, seed: SeedLike, n: Optional[int] = None) -> np.ndarray:
    """Exact draws from the closest-reach law.

    |X*|/|x| is drawn from its Beta law and the direction from the
    conditional kernel |x - y|**-d on the sphere of that radius.
    """
    x = np.asarray(x, dtype=float)
    rx = float(np.linalg.norm(x))
    if rx == 0:
        raise DomainError("start must be nonzero")
    out = _pocr_draws(x, params, as_seed(seed).generator(), 1 if n is None else int(n))
    return out[0] if n is None else out


def _pocr_draws(x: np.ndarray, params: StableParams, rng, m: int) -> np.ndarray:
    rx = float(np.linalg.norm(x))
    u = np.sqrt(rng.beta((params.d - params.alpha) / 2, params.alpha / 2, m))
    th = _direction_given_radius(x / rx, u, rng, params.d)
    return rx * u[:, None] * th


# --------------------------------------------------------------------- h-functions

def h_up_scaled(r, params: StableParams):
    """H-up at radius r >= 1 (barrier radius 1)."""
    a, d = params.alpha, params.d
    r = np.asarray(r, dtype=float)
    if np.any(r < 1):
        raise DomainError("H-up needs |x| >= 1")
    if d == 2 and a == 1:
        return 2.0 * np.arctan(np.sqrt(r * r - 1.0))
    if d == 3 and a == 2:
        return 2.0 * (1.0 - 1.0 / r)

    def one(rr):
        top = (rr * rr - 1.0) ** (a / 2)
        if top == 0:
            return 0.0
        f = lambda v: (2 / a) * (v ** (2 / a) + 1.0) ** (-d / 2)
        if math.isinf(top):
            return h_up_limit(params)
        return integrate.quad(f, 0.0, top, epsabs=1e-12, limit=200)[0]

    out = np.vectorize(one)(r)
    return float(out) if out.ndim == 0 else out


def h_up(x, params: StableParams, y: float = 0.0):
    """H-up(x e^{-y}) = int_0^{|x e^{-y}|^2-1} (u+1)^{-d/2} u^{alpha/2-1} du."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1) * math.exp(-y)
    return h_up_scaled(r, params)


def h_up_limit(params: StableParams) -> float:
    return float(special.beta(params.alpha / 2, (params.d - params.alpha) / 2))


@lru_cache(maxsize=16)
def _hup_table(alpha: float, d: int):
    """log H-up tabulated against log(r-1) for the compiled kernels."""
    p = StableParams(alpha, d)
    s = np.linspace(-25.0, 25.0, 4001)
    r = 1.0 + np.exp(s)
    logh = np.log(h_up_scaled(r, p))
    return s, logh


def kernel_hup_mode(params: StableParams):
    if params.d == 2 and params.alpha == 1:
        return K.HUP_D2_A1, np.zeros(2), np.zeros(2)
    if params.d == 3 and params.alpha == 2:
        return K.HUP_D3_A2, np.zeros(2), np.zeros(2)
    s, logh = _hup_table(float(params.alpha), int(params.d))
    return K.HUP_TABLE, s, logh


def _density_series(rho: float, alpha: float, d: int, terms: int = 200) -> float:
    """Large-|z| series of the unit-time density (convergent for alpha < 1)."""
    k = np.arange(1, terms + 1)
    logmag = (special.gammaln(1 + k * alpha / 2) + special.gammaln((k * alpha + d) / 2)
              - special.gammaln(k + 1) + k * alpha * math.log(2.0) - (k * alpha + d) * math.log(rho))
    sgn = np.where(k % 2 == 1, 1.0, -1.0) * np.sin(math.pi * k * alpha / 2)
    return float(np.sum(sgn * np.exp(logmag))) / math.pi ** (d / 2 + 1)


@lru_cache(maxsize=16)
def _density_table(alpha: float, d: int):
    """log of the unit-time radial increment density against log|z|.

    Hankel-transform quadrature of exp(-|k|**alpha), switching to the
    convergent large-|z| series for alpha < 1 and |z| > 2; beyond the table
    the kernels extrapolate with the Levy tail slope -(d+alpha).
    """
    s = np.linspace(-6.0, 4.0, 401)
    nu = d / 2 - 1

    def f(rho):
        if alpha < 1 and rho > 2.0:
            return _density_series(rho, alpha, d)
        g = lambda k: math.exp(-k ** alpha) * special.jv(nu, k * rho) * k ** (d / 2)
        val = integrate.quad(g, 0, 40.0 ** (1.0 / alpha), limit=4000)[0]
        return (2 * math.pi) ** (-d / 2) * rho ** (1 - d / 2) * val

    logf = np.log([f(math.exp(v)) for v in s])
    return s, logf


def kernel_density_mode(params: StableParams):
    """(mode, s, logf) selecting the increment density inside the kernels."""
    if params.alpha == 1:
        return K.DENS_CAUCHY, np.zeros(2), np.zeros(2)
    if params.alpha == 2:
        return K.DENS_GAUSS, np.zeros(2), np.zeros(2)
    s, logf = _density_table(float(params.alpha), int(params.d))
    return K.DENS_TABLE, s, logf


def _sphere_kernel(x: np.ndarray, th: np.ndarray, d: int) -> np.ndarray:
    return np.linalg.norm(x[..., None, :] - th, axis=-1) ** (-d)


def h_down(x, target: Union[Point, Patch], params: StableParams, y: float = 0.0):
    """H-down(x e^{-y}; target): (|z|^2-1)^{alpha/2} times the kernel |theta - z|^{-d}.

    A Patch integrates the kernel against the normalised surface measure.
    """
    z = np.asarray(x, dtype=float) * math.exp(-y)
    r = np.linalg.norm(z, axis=-1)
    if np.any(r <= 1):
        raise DomainError("H-down needs |x| > e^y")
    a, d = params.alpha, params.d
    pref = (r * r - 1.0) ** (a / 2)
    if isinstance(target, Point):
        if target.theta.dim != d:
            raise DomainError("target dimension mismatch")
        return pref * np.linalg.norm(z - target.theta.vec, axis=-1) ** (-d)
    if target.kind == "arc":
        if d != 2:
            raise DomainError("arcs need d=2")

        def one(zz):
            f = lambda t: ((zz[0] - math.cos(t)) ** 2 + (zz[1] - math.sin(t)) ** 2) ** (-1.0)
            return integrate.quad(f, target.a, target.b, epsabs=1e-12, epsrel=1e-10, limit=400)[0] / (2 * math.pi)

        vals = np.array([one(zz) for zz in np.atleast_2d(z)])
        out = pref * (vals if np.ndim(r) else vals[0])
        return out
    if target.kind == "cap":
        if d != 3:
            raise DomainError("caps need d=3")
        c = target.center.vec
        # orthonormal frame with c as pole
        e1 = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = e1 - (e1 @ c) * c
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)

        def one(zz):
            f = lambda ph, th: (math.sin(th) * np.linalg.norm(
                zz - (math.cos(th) * c + math.sin(th) * (math.cos(ph) * e1 + math.sin(ph) * e2))) ** -3)
            return integrate.dblquad(f, 0, target.half_angle, 0, 2 * math.pi, epsabs=1e-10)[0] / (4 * math.pi)

        vals = np.array([one(zz) for zz in np.atleast_2d(z)])
        return pref * (vals if np.ndim(r) else vals[0])
    raise DomainError("unknown target")


def h_down_full_sphere(x, params: StableParams, y: float = 0.0):
    """Closed form of H-down for the whole sphere: (r^2-1)^{alpha/2-1} r^{2-d}."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1) * math.exp(-y)
    return (r * r - 1.0) ** (params.alpha / 2 - 1) * r ** (2 - params.d)


def _h(kind: Kind, pts, params, y):
    if isinstance(kind, Up):
        r = np.linalg.norm(pts, axis=-1) * math.exp(-y)
        out = np.zeros_like(r)
        ok = r >= 1
        out[ok] = h_up_scaled(r[ok], params)
        return out
    r = np.linalg.norm(pts, axis=-1) * math.exp(-y)
    out = np.zeros_like(r)
    ok = r > 1
    if np.any(ok):
        out[ok] = h_down(pts[ok], kind.target, params, y)
    return out


def doob_weight(path: SsmpPath, kind: Kind, y: float, params: StableParams) -> DoobWeightedPath:
    """Radon-Nikodym weight H(X_t e^-y)/H(x e^-y) at the final live sample.

    The weight is 0 once any grid point lies inside the ball of radius e^y.
    """
    pts = path.points[: path.n_live]
    bar = math.exp(y)
    if np.linalg.norm(pts[0]) <= bar:
        raise DomainError("start must lie outside the barrier")
    r = np.linalg.norm(pts, axis=1)
    if np.any(r <= bar) or path.killed is not None:
        return DoobWeightedPath(path, 0.0, False)
    h = _h(kind, pts[[0, -1]], params, y)
    return DoobWeightedPath(path, float(h[1] / h[0]), True)


# --------------------------------------------------------------------- simulation

def simulate_stable(params: StableParams, x0, T: float, dt: float, seed: SeedLike) -> SsmpPath:
    """Fixed-grid sum of exact isotropic increments."""
    x0 = np.asarray(x0, dtype=float)
    if np.linalg.norm(x0) == 0:
        raise DomainError("start must be nonzero")
    if x0.size != params.d:
        raise DomainError("start dimension mismatch")
    n = int(round(T / dt))
    rng = as_seed(seed).generator()
    inc = _stable_increment(params.alpha, params.d, dt, rng, n)
    pts = np.vstack([x0, x0 + np.cumsum(inc, axis=0)])
    times = np.arange(n + 1) * dt
    killed = None
    zero = np.nonzero(np.linalg.norm(pts, axis=1) == 0)[0]
    if zero.size:
        killed = int(zero[0])
        pts[killed:] = np.nan
    return SsmpPath(times, pts, params.alpha, killed)


def _direct_block(start, count, rng, x0, alpha, T, log_margin, hc, hf, kappa):
    minr, xmin, g, rT, ok = K.direct_stable_block(np.asarray(x0, dtype=float), count, alpha, hc, hf,
                                                  kappa, T, log_margin, 1e-6, 10 ** 7, rng)
    return minr, xmin, g, rT, ok


def direct_pocr_ensemble(params: StableParams, x0, N: int, T: float, seed: SeedLike,
                         log_margin: float = math.log(1000.0), hc: float = 1e-2, hf: float = 1e-4,
                         kappa: float = 0.05, threads: int = 1, block: int = 500) -> dict:
    """Direct simulation of N paths recording the closest-reach point and |X_T|.

    Steps are hc*r**alpha away from the running minimum and shrink towards
    hf*r**alpha when the radius is within a fraction kappa of it; the first
    steps ramp up geometrically from 1e-6. A path stops once it is past T
    and log(r / min r) exceeds ``log_margin``.
    """
    res = run_blocks(_direct_block, N, block, seed, threads,
                     (np.asarray(x0, dtype=float), float(params.alpha), T, log_margin, hc, hf, kappa))
    minr, xmin, g, rT, ok = concat_blocks(res)
    return {"rmin": minr, "xmin": xmin, "gtime": g, "rT": rT, "ok": ok}


def simulate_conditioned(x, kind: Kind, y: float, params: StableParams, T: float, dt: float,
                         N: int, seed: SeedLike, t_resample: Optional[float] = 0.1) -> WeightedEnsemble:
    """Weighted ensemble under the Doob transform on a fixed grid.

    Weights are H(X_t e^-y)/H(x e^-y) with killing on entering the ball.
    Multinomial resampling every ``t_resample`` uses a dedicated stream;
    for alpha = 2 a tangent-plane bridge probability also kills paths that
    cross the sphere between grid points.
    """
    x = np.asarray(x, dtype=float)
    bar = math.exp(y)
    if np.linalg.norm(x) <= bar:
        raise DomainError("start must lie outside the barrier")
    seed = as_seed(seed)
    rng = seed.child(0).generator()
    rrs = seed.child(1).generator()
    n = int(round(T / dt))
    every = None if not t_resample else max(1, int(round(t_resample / dt)))
    d = params.d
    pos = np.empty((n + 1, N, d))
    anc = np.tile(np.arange(N), (n + 1, 1))
    pos[0] = x
    alive = np.ones(N, bool)
    h0 = float(_h(kind, x[None, :], params, y)[0])
    base = np.full(N, h0)
    hcur = np.full(N, h0)
    ess_min = float(N)
    warnings = []
    cur = np.repeat(x[None, :], N, axis=0)
    for k in range(n):
        prev = cur
        cur = prev + _stable_increment(params.alpha, d, dt, rng, N)
        r = np.linalg.norm(cur, axis=1)
        dead = r <= bar
        if params.alpha == 2:
            rp = np.linalg.norm(prev, axis=1)
            p = np.exp(-2.0 * np.maximum(rp - bar, 0) * np.maximum(r - bar, 0) / dt)
            dead |= rng.random(N) < p
        alive &= ~dead
        pos[k + 1] = cur
        hcur = np.where(alive, _h(kind, cur, params, y) if alive.any() else 0.0, 0.0)
        if every and (k + 1) % every == 0 and k + 1 < n:
            w = hcur / base
            if w.sum() <= 0:
                warnings.append(f"all weights vanished at t={(k + 1) * dt:.4g}")
                break
            ess_min = min(ess_min, kish_ess(w))
            idx = rrs.choice(N, N, p=w / w.sum())
            anc[k + 1] = idx
            cur = cur[idx]
            alive = alive[idx]
            hcur = hcur[idx]
            base = hcur.copy()
    w = hcur / base
    ess_min = min(ess_min, kish_ess(w)) if w.sum() > 0 else 0.0
    if ess_min < 0.05 * N:
        warnings.append(f"effective sample size fell to {ess_min:.1f} < 0.05 N")
        log.warning(warnings[-1])
    # trace genealogy back from the final slots
    times = np.arange(n + 1) * dt
    lineage = np.empty((n + 1, N), dtype=int)
    j = np.arange(N)
    for k in range(n, -1, -1):
        j = anc[k][j] if k > 0 else j
        lineage[k] = j
    paths = []
    for i in range(N):
        pts = pos[np.arange(n + 1), lineage[:, i]]
        paths.append(SsmpPath(times, pts, params.alpha))
    return WeightedEnsemble(paths, w, ess_min, warnings)


# --------------------------------------------------------------------- checks

def _checkpoint_block(start, count, rng, x0, alpha, rs, h, hmax, checkpoints):
    return (K.killed_stable_checkpoints(x0, count, alpha, rs, h, hmax, 1e-6, checkpoints, rng),)


def killed_radii_at(params: StableParams, x0, y: float, checkpoints, N: int, seed: SeedLike,
                    h: float = 1e-2, hmax: float = 1e-2, threads: int = 1) -> np.ndarray:
    """Radii at the checkpoints of paths killed on entering the ball e^y (0 once killed).

    Steps are h*(r - e^y)**alpha capped at hmax, so the grid refines near
    the sphere where an undetected entry would be likely.
    """
    x0 = np.asarray(x0, dtype=float)
    cps = np.asarray(checkpoints, dtype=float)
    res = run_blocks(_checkpoint_block, N, 1000, seed, threads,
                     (x0, float(params.alpha), math.exp(y), h, hmax, cps))
    return concat_blocks(res)[0]


def check_martingale_up(params: StableParams, x0, y: float, checkpoints, N: int, seed: SeedLike,
                        h: float = 1e-2, hmax: float = 1e-2, threads: int = 1) -> list:
    """E[H-up(X_t e^-y)/H-up(x e^-y); t < T] = 1 at each checkpoint, within 3 SE."""
    seed = as_seed(seed)
    radii = killed_radii_at(params, x0, y, checkpoints, N, seed, h, hmax, threads)
    h0 = float(h_up(x0, params, y))
    reports = []
    for c, t in enumerate(checkpoints):
        r = radii[:, c] * math.exp(-y)
        w = np.where(r > 1, h_up_scaled(np.maximum(r, 1.0), params), 0.0) / h0
        m = float(w.mean())
        se = float(w.std(ddof=1) / math.sqrt(N))
        z = abs(m - 1.0) / se if se > 0 else 0.0
        reports.append(TestReport(f"martingale_up[t={t:g}]", z, 1.0, 3.0, None, N, seed.master_seed, z <= 3.0,
                                  details={"mean": m, "se": se}))
    return reports


def _entry_block(start, count, rng, x0, alpha, rin, rout, h, far):
    land, st = K.first_entry_block(x0, count, alpha, 1.0, rin, rout, h, 1e-6, far, 10 ** 7, rng)
    return land, st


def _hdown_disk_rule(theta: np.ndarray, alpha: float, delta: float, ns: int = 8, npsi: int = 16):
    """Nodes and weights for integrals of H-down(.; theta) times a smooth f over {|y-theta|<delta, |y|>1}, d=2.

    Polar coordinates around theta with rho = s**(2/alpha) turn H-down dy
    into (2/alpha)(2 cos(psi) + rho)**(alpha/2) ds dpsi, which is bounded.
    """
    gs, ws = np.polynomial.legendre.leggauss(ns)
    gp, wp = np.polynomial.legendre.leggauss(npsi)
    smax = delta ** (alpha / 2)
    s = 0.5 * smax * (gs + 1)
    rho = s ** (2 / alpha)
    pmax = np.arccos(-rho / 2)
    psi = pmax[:, None] * gp[None, :]
    w = (0.5 * smax * ws)[:, None] * (pmax[:, None] * wp[None, :])
    w = w * (2 / alpha) * np.maximum(2 * np.cos(psi) + rho[:, None], 0.0) ** (alpha / 2)
    ang = math.atan2(theta[1], theta[0]) + psi
    y = theta[None, None, :] + rho[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return y.reshape(-1, 2), w.ravel()


def _entry_rb_block(start, count, rng, x0, alpha, rout, h, far, th, delta, qy, qw, mode, tab_s, tab_logf, rcut):
    return K.first_entry_rb_block(x0, count, alpha, rout, h, 1e-6, far, 10 ** 7, rng, th, delta, qy, qw,
                                  mode, tab_s, tab_logf, rcut)


def check_harmonicity_hdown(params: StableParams, target: Union[Point, Patch], shell: Sequence[float], x0,
                            N: int, seed: SeedLike, h: float = 1e-2, far_factor: float = 1e4,
                            tol: float = 0.05, threads: int = 1, disk: Optional[float] = None,
                            name: str = "harmonicity_hdown") -> TestReport:
    """Stopped-expectation check of the invariance of H-down.

    Paths start at x0 and stop on first entering the shell (shell[0],
    shell[1]], contributing H-down at the landing point; entering the unit
    ball (the barrier) or escaping past far_factor*|x0| contributes 0.
    Unless shell[0] == 1 the law can jump across the shell and reach the
    target without landing in it, so the identity only holds for shells
    that touch the barrier.

    For a point target in the plane the landing values have infinite
    variance (H-down blows up at the target). With shell[0] == 1 and d == 2
    the disk of radius ``disk`` (default min(0.25, (rout-1)/2)) around the
    target is then integrated out step by step, which leaves a bounded
    estimator with the same mean. Pass disk=0 for the plain estimator.
    """
    rin, rout = map(float, shell)
    x0 = np.asarray(x0, dtype=float)
    r0 = float(np.linalg.norm(x0))
    if not 1.0 <= rin < rout <= r0:
        raise DomainError("need barrier <= shell inner < shell outer <= |x0|")
    seed = as_seed(seed)
    ref = float(h_down(x0, target, params))
    if rout >= r0:
        return threshold_report(name, 0.0, ref, tol, N, seed.master_seed, mc=ref)
    far = far_factor * r0
    if disk is None:
        disk = min(0.25, (rout - 1.0) / 2)
    use_rb = disk > 0 and rin == 1.0 and params.d == 2 and isinstance(target, Point)
    vals = np.zeros(N)
    if use_rb:
        th = target.theta.vec
        qy, qw = _hdown_disk_rule(th, float(params.alpha), disk)
        mode, ts, tl = kernel_density_mode(params)
        res = run_blocks(_entry_rb_block, N, 1000, seed, threads,
                         (x0, float(params.alpha), rout, h, far, th, disk, qy, qw, mode, ts, tl, 40.0 * rout))
        land, st, jsum = concat_blocks(res)
        vals += jsum
    else:
        res = run_blocks(_entry_block, N, 1000, seed, threads, (x0, float(params.alpha), rin, rout, h, far))
        land, st = concat_blocks(res)
    good = st == 1
    if good.any():
        vals[good] += h_down(land[good], target, params)
    mc = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(N))
    rel = abs(mc - ref) / ref
    return threshold_report(name, rel, ref, tol, N, seed.master_seed, mc=mc, se=se,
                            disk=float(disk) if use_rb else 0.0,
                            frac_landed=float((st >= 1).mean()), frac_barrier=float((st == 0).mean()))


def bessel3_survival(r: float, t: float) -> float:
    """P_x(t < T_1) for 3-d Brownian motion started at radius r > 1."""
    return 1.0 - special.erfc((r - 1.0) / math.sqrt(2.0 * t)) / r
