"""Shared value types, polar coordinates, path concatenation and CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

UNIT_TOL = 1e-9


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class GlueError(ValueError):
    """Raised when two path pieces do not meet within tolerance."""

    def __init__(self, gap: float, tol: float):
        super().__init__(f"endpoint gap {gap:.3e} exceeds tol_glue {tol:.3e}")
        self.gap = gap
        self.tol = tol


@dataclass(frozen=True)
class Angle:
    """A modulator state stored as a unit vector.

    For d=2 the radian value in (-pi, pi] is available via ``radians``.
    """

    vec: np.ndarray

    def __post_init__(self):
        v = np.array(self.vec, dtype=float).reshape(-1)
        if v.size < 1:
            raise DomainError("empty angle vector")
        nrm = float(np.linalg.norm(v))
        if not np.isfinite(nrm) or abs(nrm - 1.0) > UNIT_TOL:
            raise DomainError(f"angle vector has norm {nrm}, expected 1")
        v = v / nrm
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    @classmethod
    def from_radians(cls, value: float) -> "Angle":
        return cls(np.array([math.cos(value), math.sin(value)]))

    @property
    def dim(self) -> int:
        return self.vec.size

    @property
    def radians(self) -> float:
        if self.dim != 2:
            raise DomainError("radian form only exists for d=2")
        a = math.atan2(self.vec[1], self.vec[0])
        return math.pi if a == -math.pi else a

    def __eq__(self, other):
        return isinstance(other, Angle) and np.array_equal(self.vec, other.vec)

    def __hash__(self):
        return hash(self.vec.tobytes())


@dataclass(frozen=True)
class MapState:
    xi: float
    theta: Angle

    def __post_init__(self):
        if not math.isfinite(self.xi):
            raise DomainError("xi must be finite")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_times(times: np.ndarray):
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a nonempty 1-d array")
    if times[0] != 0.0:
        raise DomainError("times[0] must be 0")
    if np.any(np.diff(times) <= 0):
        raise DomainError("times must be strictly increasing")


@dataclass(frozen=True)
class MapPath:
    """Grid path of the pair (xi, Theta).

    ``theta`` has shape (n, d) with unit rows. A finite modulator with n
    states uses the standard basis vectors of R^n. When ``killed`` is set,
    rows from that index on are the cemetery and hold NaN.
    """

    times: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    killed: Optional[int] = None

    def __post_init__(self):
        times = _freeze(self.times)
        xi = _freeze(self.xi)
        theta = np.array(self.theta, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        theta.setflags(write=False)
        _check_times(times)
        if xi.shape != times.shape or theta.shape[0] != times.size:
            raise DomainError("times, xi and theta lengths differ")
        if self.killed is not None and not 0 < self.killed < times.size:
            raise DomainError("kill index out of range")
        live = slice(0, self.killed)
        if not np.all(np.isfinite(xi[live])):
            raise DomainError("xi must be finite before the kill index")
        nrm = np.linalg.norm(theta[live], axis=1)
        if np.any(np.abs(nrm - 1.0) > UNIT_TOL):
            raise DomainError("theta rows must be unit vectors")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return self.times.size

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @property
    def n_live(self) -> int:
        return len(self) if self.killed is None else self.killed

    @property
    def lifetime(self) -> float:
        """Kill time if killed, otherwise the last grid time."""
        return float(self.times[self.killed if self.killed is not None else -1])

    def state(self, k: int) -> MapState:
        return MapState(float(self.xi[k]), Angle(self.theta[k]))

    @property
    def states(self) -> list:
        return [self.state(k) for k in range(self.n_live)]


@dataclass(frozen=True)
class SsmpPath:
    """Grid path in R^d \\ {0}; rows from ``killed`` on are NaN."""

    times: np.ndarray
    points: np.ndarray
    alpha: float
    killed: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = _freeze(self.times)
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts.setflags(write=False)
        _check_times(times)
        if pts.shape[0] != times.size:
            raise DomainError("times and points lengths differ")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.killed is not None and not 0 < self.killed < times.size:
            raise DomainError("kill index out of range")
        live = pts[: self.killed]
        if np.any(np.linalg.norm(live, axis=1) == 0) or not np.all(np.isfinite(live)):
            raise DomainError("points must be finite and nonzero before the kill index")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.times.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_live(self) -> int:
        return len(self) if self.killed is None else self.killed

    @property
    def lifetime(self) -> float:
        return float(self.times[self.killed if self.killed is not None else -1])

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)


@dataclass(frozen=True)
class PocrSample:
    """Point of closest reach in MAP coordinates."""

    depth: float
    angle: Angle
    gtime: Optional[float] = None

    def __post_init__(self):
        if not self.depth >= 0:
            raise DomainError("depth must be >= 0")
        if self.gtime is not None and not self.gtime >= 0:
            raise DomainError("gtime must be >= 0")

    def point(self) -> np.ndarray:
        return math.exp(-self.depth) * self.angle.vec


def to_polar(x) -> tuple:
    """Return (log|x|, x/|x|)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    r = float(np.linalg.norm(x))
    if r == 0.0 or not math.isfinite(r):
        raise DomainError("to_polar needs a finite nonzero vector")
    return math.log(r), Angle(x / r)


def from_polar(logr: float, theta: Union[Angle, Sequence[float]]) -> np.ndarray:
    vec = theta.vec if isinstance(theta, Angle) else np.asarray(theta, dtype=float)
    if abs(float(np.linalg.norm(vec)) - 1.0) > UNIT_TOL:
        raise DomainError("theta is not a unit vector")
    return math.exp(logr) * vec


def concat_paths(pre: SsmpPath, post: SsmpPath, tol_glue: float = 1e-9) -> SsmpPath:
    """Glue ``post`` onto the end of the killed path ``pre``.

    The live part of ``pre`` is followed by ``post`` with its clock shifted
    by the lifetime of ``pre``. The endpoint gap is stored in
    ``meta['glue_gap']``.
    """
    if pre.killed is None:
        raise DomainError("pre must be killed (finite lifetime)")
    if post.times[0] != 0.0:
        raise DomainError("post must start at time 0")
    if pre.dim != post.dim:
        raise DomainError("dimension mismatch")
    k = pre.killed
    gap = float(np.linalg.norm(pre.points[k - 1] - post.points[0]))
    if gap > tol_glue:
        raise GlueError(gap, tol_glue)
    shift = pre.times[k]
    times = np.concatenate([pre.times[:k], post.times + shift])
    points = np.vstack([pre.points[:k], post.points])
    killed = None if post.killed is None else post.killed + k
    meta = {**pre.meta, **post.meta, "glue_gap": gap, "glue_time": float(shift)}
    return SsmpPath(times, points, pre.alpha, killed, meta)


def _write_rows(path, header, rows, killed):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
        if killed is not None:
            fh.write(f"#killed={killed}\n")


def write_ssmp_csv(path: Union[str, Path], p: SsmpPath):
    header = ["t"] + [f"x_{j + 1}" for j in range(p.dim)]
    _write_rows(path, header, np.column_stack([p.times, p.points]), p.killed)


def write_map_csv(path: Union[str, Path], p: MapPath):
    header = ["t", "xi"] + [f"theta_{j + 1}" for j in range(p.dim)]
    _write_rows(path, header, np.column_stack([p.times, p.xi, p.theta]), p.killed)


def _read_rows(path):
    killed = None
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        if ln.startswith("#killed="):
            killed = int(ln.split("=", 1)[1])
        elif ln:
            rows.append([float(v) for v in ln.split(",")])
    return header, np.array(rows, dtype=float), killed


def read_path_csv(path: Union[str, Path], alpha: float = 1.0):
    """Read either CSV layout back into a MapPath or an SsmpPath."""
    header, data, killed = _read_rows(path)
    if len(header) > 1 and header[1] == "xi":
        return MapPath(data[:, 0], data[:, 1], data[:, 2:], killed)
    return SsmpPath(data[:, 0], data[:, 1:], alpha, killed)
