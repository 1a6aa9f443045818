"""Discretized ordered Banach space R x L_p([-1, 0]) and the Hilbert projective metric.

A state is a head scalar plus samples of the tail function at the nodes
``s_j = -1 + j/m``.  Integrals over [-1, 0] use the trapezoid rule, so all
cone operations are coordinatewise on the length ``m + 2`` coordinate
vector ``[head, tail_0, ..., tail_m]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

EPS_ZERO = 1e-12


@dataclass(frozen=True)
class GridSpec:
    m: int = 64
    p: float = 2.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not (1.0 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "p", float(self.p))
        nodes = -1.0 + np.arange(self.m + 1) / self.m
        w = np.full(self.m + 1, 1.0 / self.m)
        w[0] = w[-1] = 0.5 / self.m
        nodes.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def dim(self) -> int:
        return self.m + 2

    @property
    def pairing_weights(self) -> np.ndarray:
        """Diagonal of the pairing matrix on coordinate vectors (1 for the head)."""
        return np.concatenate(([1.0], self.weights))


def _frozen_array(values, length=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("tail must be one-dimensional")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"tail has {arr.shape[0]} samples, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tail entries must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Element ``(u1, u2)`` of X: ``head`` is ``u1``, ``tail`` samples ``u2`` at the grid nodes."""

    head: float
    tail: np.ndarray

    def __post_init__(self):
        head = float(self.head)
        if not math.isfinite(head):
            raise ValueError("head must be finite")
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", _frozen_array(self.tail))

    @classmethod
    def from_coords(cls, c) -> "StateVector":
        c = np.asarray(c, dtype=float)
        return cls(c[0], c[1:])

    @classmethod
    def constant(cls, head: float, value: float, grid: GridSpec) -> "StateVector":
        return cls(head, np.full(grid.m + 1, float(value)))

    @classmethod
    def zero(cls, grid: GridSpec) -> "StateVector":
        return cls.constant(0.0, 0.0, grid)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate(([self.head], self.tail))

    @property
    def m(self) -> int:
        return self.tail.shape[0] - 1

    def __add__(self, other):
        return StateVector(self.head + other.head, self.tail + other.tail)

    def __sub__(self, other):
        return StateVector(self.head - other.head, self.tail - other.tail)

    def __mul__(self, scalar):
        return StateVector(self.head * scalar, self.tail * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return StateVector(self.head / scalar, self.tail / scalar)

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"StateVector(head={self.head!r}, tail=<{self.tail.shape[0]} samples>)"


def unit_e(grid: GridSpec) -> StateVector:
    """The focusing vector ``e = (1/2, 1/2)``; it has unit norm for every p."""
    return StateVector.constant(0.5, 0.5, grid)


def _lp_norm(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    return float(np.sum(weights * np.abs(values) ** p) ** (1.0 / p))


def norm_x(u: StateVector, grid: GridSpec) -> float:
    """``|u1| + ||u2||_p`` with trapezoid quadrature for the tail."""
    if u.tail.shape[0] != grid.m + 1:
        raise ValueError("state does not match the grid")
    return abs(u.head) + _lp_norm(u.tail, grid.weights, grid.p)


def norm_coords(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Column-wise X-norm of coordinate arrays of shape ``(m + 2, ...)``."""
    c = np.asarray(c, dtype=float)
    w = grid.weights.reshape((-1,) + (1,) * (c.ndim - 1))
    tail = np.sum(w * np.abs(c[1:]) ** grid.p, axis=0) ** (1.0 / grid.p)
    return np.abs(c[0]) + tail


def _clamp(c: np.ndarray, eps: float = EPS_ZERO) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    return np.where(np.abs(c) <= eps * scale, 0.0, c)


def in_cone_coords(c: np.ndarray, eps: float = EPS_ZERO) -> bool:
    c = np.asarray(c, dtype=float)
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    return bool(np.all(c >= -eps * scale))


def in_cone(u: StateVector, eps: float = EPS_ZERO) -> bool:
    return in_cone_coords(u.coords, eps)


class ProjectiveGauge(NamedTuple):
    m_ratio: float
    M_ratio: float
    osc: float
    dist: float


def gauge_coords(cu: np.ndarray, cv: np.ndarray, eps: float = EPS_ZERO) -> ProjectiveGauge:
    """``m(u/v)``, ``M(u/v)``, oscillation and projective distance of two nonnegative coordinate vectors."""
    cu = _clamp(np.asarray(cu, dtype=float), eps)
    cv = _clamp(np.asarray(cv, dtype=float), eps)
    if not (in_cone_coords(cu, eps) and in_cone_coords(cv, eps)):
        raise ValueError("gauge needs vectors in the cone")
    support = cv > 0
    if not np.any(support):
        raise ValueError("gauge(u, v) is undefined for v = 0")
    ratios = cu[support] / cv[support]
    lo = float(np.min(ratios))
    if np.any(cu[~support] > 0):
        hi = math.inf
    else:
        hi = float(np.max(ratios))
    osc = hi - lo
    if lo > 0 and math.isfinite(hi):
        dist = max(math.log(hi / lo), 0.0)
    else:
        dist = math.inf
    return ProjectiveGauge(lo, hi, osc, dist)


def gauge(u: StateVector, v: StateVector, eps: float = EPS_ZERO) -> ProjectiveGauge:
    return gauge_coords(u.coords, v.coords, eps)


def projdist_coords(cu: np.ndarray, cv: np.ndarray, eps: float = EPS_ZERO) -> float:
    return gauge_coords(cu, cv, eps).dist


def projdist(u: StateVector, v: StateVector, eps: float = EPS_ZERO) -> float:
    return gauge(u, v, eps).dist


def comparable_coords(cu: np.ndarray, cv: np.ndarray, eps: float = EPS_ZERO) -> bool:
    cu = _clamp(np.asarray(cu, dtype=float), eps)
    cv = _clamp(np.asarray(cv, dtype=float), eps)
    if not np.any(cu > 0) or not np.any(cv > 0):
        raise ValueError("comparability is only defined for nonzero cone vectors")
    return bool(np.array_equal(cu > 0, cv > 0))


def comparable(u: StateVector, v: StateVector, eps: float = EPS_ZERO) -> bool:
    return comparable_coords(u.coords, v.coords, eps)


def projdist_norm_bound(u: StateVector, v: StateVector, grid: GridSpec,
                        unit_tol: float = 1e-12) -> tuple[float, float]:
    """Return ``(||u - v||, 3 (exp d(u, v) - 1))`` for comparable unit vectors."""
    if abs(norm_x(u, grid) - 1.0) > unit_tol or abs(norm_x(v, grid) - 1.0) > unit_tol:
        raise ValueError("projdist_norm_bound expects unit vectors")
    if not comparable(u, v):
        raise ValueError("projdist_norm_bound expects comparable vectors")
    d = projdist(u, v)
    return norm_x(u - v, grid), 3.0 * math.expm1(d)
