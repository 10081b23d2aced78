"""Seeded random streams and increment samplers.

Every Monte Carlo routine takes a :class:`SeedSpec`; sub-streams are derived
from it with :meth:`SeedSpec.child`, so a given path or block of paths always
sees the same numbers regardless of how work is split across processes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import DomainError

_U64 = 2 ** 64


@dataclass(frozen=True)
class SeedSpec:
    """(master_seed, stream_id) naming one reproducible random stream."""

    master_seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for v in (self.master_seed, self.stream_id, *self.path):
            if not 0 <= int(v) < _U64:
                raise DomainError("seed components must be 64-bit unsigned integers")

    def child(self, *keys: int) -> "SeedSpec":
        """Sub-stream that is independent of the parent and of its siblings."""
        return SeedSpec(self.master_seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id), *self.path))
        return np.random.Generator(np.random.PCG64(ss))


SeedLike = Union[SeedSpec, int]


def as_seed(seed: SeedLike) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed), 0)


def make_rng(seed: SeedLike, *keys: int) -> np.random.Generator:
    return as_seed(seed).child(*keys).generator() if keys else as_seed(seed).generator()


def gaussian_increment(dt: float, drift: float, sigma: float, rng: np.random.Generator, size=None):
    """drift*dt + sigma*sqrt(dt)*Z."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    z = rng.standard_normal(size)
    return drift * dt + sigma * math.sqrt(dt) * z


def exponential_sample(rate: float, rng: np.random.Generator, size=None):
    if not rate > 0:
        raise DomainError("rate must be positive")
    return rng.standard_exponential(size) / rate


def positive_stable(a: float, rng: np.random.Generator, size=None):
    """Positive a-stable draws with Laplace transform exp(-lam**a), 0<a<1.

    Chambers-Mallows-Stuck representation in Kanter's form.
    """
    if not 0 < a < 1:
        raise DomainError("positive stable index must lie in (0,1)")
    u = rng.uniform(0.0, np.pi, size)
    e = rng.standard_exponential(size)
    return (np.sin(a * u) / np.sin(u) ** (1.0 / a)
            * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a))


def _stable_increment(alpha: float, d: int, dt, rng: np.random.Generator, size=None):
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    z = rng.standard_normal(shape + (d,))
    dt = np.asarray(dt, dtype=float)
    if alpha >= 2.0:
        scale = np.sqrt(dt)
    else:
        s = positive_stable(alpha / 2.0, rng, shape if shape else None)
        scale = dt ** (1.0 / alpha) * np.sqrt(2.0 * s)
    return np.asarray(scale)[..., None] * z


def isotropic_stable_increment(alpha: float, d: int, dt, rng: np.random.Generator, size=None):
    """Increment over dt of the isotropic alpha-stable process with exponent |theta|**alpha.

    Built as sqrt(2*S)*G with S positive (alpha/2)-stable and G a standard
    Gaussian vector. ``dt`` may be an array broadcasting against ``size``.
    """
    if not 0 < alpha < 2:
        raise DomainError("alpha must lie in (0,2)")
    if int(d) < 1:
        raise DomainError("d must be >= 1")
    if np.any(np.asarray(dt) <= 0):
        raise DomainError("dt must be positive")
    return _stable_increment(alpha, int(d), dt, rng, size)


def validate_rate_matrix(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
        raise DomainError("Q must be a square matrix")
    off = Q - np.diag(np.diag(Q))
    if np.any(off < 0):
        raise DomainError("off-diagonal rates must be nonnegative")
    if np.any(np.abs(Q.sum(axis=1)) > 1e-10 * max(1.0, np.abs(Q).max())):
        raise DomainError("rows of Q must sum to zero")
    return Q


def _jump(Q: np.ndarray, state: int, rng: np.random.Generator) -> int:
    rates = Q[state].copy()
    rates[state] = 0.0
    cum = np.cumsum(rates)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def chain_occupation(Q, state: int, dt: float, rng: np.random.Generator):
    """Run the chain for time dt from ``state``.

    Returns (final_state, occupation) where occupation[i] is the time spent
    in state i. Holding times are exact exponentials.
    """
    Q = np.asarray(Q, dtype=float)
    occ = np.zeros(Q.shape[0])
    t = 0.0
    s = int(state)
    while True:
        q = -Q[s, s]
        hold = math.inf if q <= 0 else rng.standard_exponential() / q
        if t + hold >= dt:
            occ[s] += dt - t
            return s, occ
        occ[s] += hold
        t += hold
        s = _jump(Q, s, rng)


def markov_chain_step(Q, state: int, dt: float, rng: np.random.Generator) -> int:
    """State after time dt of the continuous-time chain with generator Q."""
    Q = validate_rate_matrix(Q)
    if not 0 <= state < Q.shape[0]:
        raise DomainError("state out of range")
    if dt < 0:
        raise DomainError("dt must be >= 0")
    return chain_occupation(Q, state, dt, rng)[0]


def bridge_minimum(a, b, var, u):
    """Exact minimum of a Brownian bridge from a to b with total variance var.

    ``u`` are uniforms on (0,1); vectorised.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 0.5 * (a + b - np.sqrt((b - a) ** 2 - 2.0 * var * np.log(u)))


def _split_fraction(A, B, var, u, q: float, n: int = 2001):
    """Draw s in (0,1) with density prop. to s^{-3/2} (1-s)^{-q} exp(-A^2/(2 var s) - B^2/(2 var (1-s))).

    Inverse CDF on a logit grid (the Jacobian s(1-s) is folded in).
    """
    A = np.atleast_1d(np.asarray(A, dtype=float))[:, None]
    B = np.atleast_1d(np.asarray(B, dtype=float))[:, None]
    v = np.atleast_1d(np.asarray(var, dtype=float))[:, None]
    z = np.linspace(-40.0, 40.0, n)
    sg = 1.0 / (1.0 + np.exp(-z))
    s1 = 1.0 / (1.0 + np.exp(z))
    logh = -0.5 * np.log(sg) + (1.0 - q) * np.log(s1) - A * A / (2 * v * sg) - B * B / (2 * v * s1)
    h = np.exp(logh - logh.max(axis=1, keepdims=True))
    F = np.concatenate([np.zeros((h.shape[0], 1)), np.cumsum(0.5 * (h[:, 1:] + h[:, :-1]), axis=1)], axis=1)
    uu = np.atleast_1d(u) * F[:, -1]
    zs = np.array([np.interp(x, Fi, z) for x, Fi in zip(uu, F)])
    return 1.0 / (1.0 + np.exp(-zs))


def bridge_argmin_fraction(a, b, m, var, u):
    """Time of the minimum m of a Brownian bridge from a to b (total variance var), as a fraction of the cell.

    Given the minimum, the time splits into two first-passage pieces:
    density prop. to s^{-3/2} (1-s)^{-3/2} exp(-(a-m)^2/(2 var s) - (b-m)^2/(2 var (1-s))).
    Vectorised over cells with uniforms ``u``.
    """
    out = _split_fraction(np.asarray(a, dtype=float) - m, np.asarray(b, dtype=float) - m, var, u, 1.5)
    return out if np.ndim(a) else float(out[0])


def bridge_hit_fraction(a, b, level, var, u):
    """First time a Brownian bridge from a to b (total variance var) hits ``level``, as a fraction of the cell.

    Conditioned on the hit: first-passage density to the level times the
    free transition density from the level to b, i.e. density prop. to
    s^{-3/2} (1-s)^{-1/2} exp(-(a-l)^2/(2 var s) - (b-l)^2/(2 var (1-s))).
    """
    out = _split_fraction(np.asarray(a, dtype=float) - level, np.asarray(b, dtype=float) - level, var, u, 0.5)
    return out if np.ndim(a) else float(out[0])


def bridge_cross_prob(a, b, level, var):
    """P(Brownian bridge from a to b with variance var dips to ``level``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.exp(-2.0 * (a - level) * (b - level) / var)
    return np.where((a <= level) | (b <= level), 1.0, p)


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))


def _call(args):
    fn, seed, block, start, count, extra = args
    return fn(start, count, seed.child(block).generator(), *extra)


def run_blocks(fn: Callable, n: int, block: int, seed: SeedLike, threads: Optional[int] = None,
               extra: Sequence = ()) -> list:
    """Evaluate ``fn(start, count, rng, *extra)`` over fixed-size blocks of n items.

    Block b always uses ``seed.child(b)``, so results do not depend on the
    worker count. Returns the per-block results in block order.
    """
    seed = as_seed(seed)
    jobs = [(fn, seed, b, s, min(block, n - s), tuple(extra)) for b, s in enumerate(range(0, n, block))]
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as ex:
        return list(ex.map(_call, jobs))


def concat_blocks(results: list) -> tuple:
    """Concatenate per-block tuples of arrays field by field."""
    return tuple(np.concatenate([r[i] for r in results]) for i in range(len(results[0])))
