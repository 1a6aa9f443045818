"""Ergodic drivers: the base flow theta_t together with the coefficients a, b.

Two drivers are provided.  ``TorusDriver`` is an irrational rotation of the
circle with trigonometric coefficients; its invariant measure is Lebesgue
measure, so ensemble averages are known exactly.  ``TelegraphDriver`` is a
two-sided random telegraph signal sampled on a fixed tick: at every tick a
renewal happens with probability ``1 - exp(-hold_rate * tick)`` and the new
state is drawn from the stationary weights.  Tick randomness comes from a
counter-based generator keyed by the seed, so the state at any stream
position is reproducible without simulating the path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

GOLDEN_GAMMA = math.sqrt(2.0) - 1.0

# Gauss-Legendre 2-point nodes on [0, 1]
_GAUSS = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])

_COUNTER_OFFSET = 2 ** 100
_U53 = 2.0 ** -53


@dataclass(frozen=True)
class TorusPoint:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % 1.0)


@dataclass(frozen=True)
class TelegraphPoint:
    position: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", int(self.position))
        object.__setattr__(self, "seed", int(self.seed))


BasePoint = Union[TorusPoint, TelegraphPoint]


class SubstepData(NamedTuple):
    """Coefficient data of ``n`` consecutive substeps of length ``h``.

    ``alpha[k]`` and ``abs_alpha[k]`` are 2-point Gauss approximations of the
    integrals of ``a`` and ``|a|`` over substep ``k``; ``b_mid[k]`` is ``b``
    at the substep midpoint and ``b_gauss[k]`` holds ``b`` at the two Gauss
    nodes.
    """

    alpha: np.ndarray
    abs_alpha: np.ndarray
    b_mid: np.ndarray
    b_gauss: np.ndarray


@dataclass(frozen=True)
class InvariantQuadrature:
    nodes: list
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.nodes) != w.shape[0]:
            raise ValueError("nodes and weights differ in length")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-14:
            raise ValueError("quadrature weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


class Driver:
    """Common substep machinery; subclasses provide ``a_along`` and ``b_along``."""

    def a_along(self, omega, times) -> np.ndarray:
        raise NotImplementedError

    def b_along(self, omega, times) -> np.ndarray:
        raise NotImplementedError

    def coeff_a(self, omega) -> float:
        return float(self.a_along(omega, np.zeros(1))[0])

    def coeff_b(self, omega) -> float:
        return float(self.b_along(omega, np.zeros(1))[0])

    def check_grid(self, h: float) -> None:
        """Raise if the driver cannot be sampled on substeps of length ``h``."""

    def substeps(self, omega, h: float, n: int, start: int = 0) -> SubstepData:
        k = np.arange(start, start + n, dtype=float)
        gauss_t = ((k[:, None] + _GAUSS[None, :]) * h).ravel()
        mid_t = (k + 0.5) * h
        a_g = self.a_along(omega, gauss_t).reshape(n, 2)
        b_g = self.b_along(omega, gauss_t).reshape(n, 2)
        b_mid = self.b_along(omega, mid_t)
        return SubstepData(
            alpha=0.5 * h * a_g.sum(axis=1),
            abs_alpha=0.5 * h * np.abs(a_g).sum(axis=1),
            b_mid=b_mid,
            b_gauss=b_g,
        )

    def time_average_a(self, omega, T: float, h: float) -> float:
        n = int(round(T / h))
        return float(self.substeps(omega, h, n).alpha.sum() / (n * h))


@dataclass(frozen=True)
class TorusDriver(Driver):
    """Rotation ``angle -> angle + gamma t (mod 1)`` with ``a = a0 + a1 cos 2 pi angle`` and likewise ``b``."""

    a0: float = 0.0
    a1: float = 0.0
    b0: float = 1.0
    b1: float = 0.0
    gamma: float = GOLDEN_GAMMA

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1", "gamma"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.b0 < abs(self.b1):
            raise ValueError(
                f"coefficient b must be nonnegative everywhere: b0={self.b0} < |b1|={abs(self.b1)}")

    def point(self, angle: float = 0.0) -> TorusPoint:
        return TorusPoint(angle)

    def advance(self, omega: TorusPoint, t: float) -> TorusPoint:
        return TorusPoint(omega.angle + self.gamma * t)

    def _angles(self, omega, times):
        return (omega.angle + self.gamma * np.asarray(times, dtype=float)) % 1.0

    def a_along(self, omega, times):
        return self.a0 + self.a1 * np.cos(2.0 * np.pi * self._angles(omega, times))

    def b_along(self, omega, times):
        b = self.b0 + self.b1 * np.cos(2.0 * np.pi * self._angles(omega, times))
        return np.maximum(b, 0.0)

    def mean_a(self) -> float:
        return self.a0

    def invariant_quadrature(self, n: int) -> InvariantQuadrature:
        if n < 1:
            raise ValueError("n must be >= 1")
        return InvariantQuadrature([TorusPoint(k / n) for k in range(n)], np.full(n, 1.0 / n))

    def describe(self) -> str:
        return f"torus(gamma={self.gamma!r})"


@dataclass(frozen=True)
class TelegraphDriver(Driver):
    """Random telegraph coefficients ``a = a_table[state]``, ``b = b_table[state]`` on ticks of length ``tick``."""

    a_table: tuple
    b_table: tuple
    weights: tuple = ()
    hold_rate: float = 1.0
    tick: float = 1.0 / 64
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = tuple(float(x) for x in self.a_table)
        b = tuple(float(x) for x in self.b_table)
        if len(a) == 0 or len(a) != len(b):
            raise ValueError("a_table and b_table must be nonempty and of equal length")
        if any(x < 0 for x in b):
            raise ValueError(f"coefficient b must be nonnegative everywhere: b_table={b}")
        w = tuple(float(x) for x in self.weights) or tuple([1.0 / len(a)] * len(a))
        if len(w) != len(a) or any(x < 0 for x in w) or sum(w) <= 0:
            raise ValueError("weights must be nonnegative, one per state")
        total = sum(w)
        w = tuple(x / total for x in w)
        if not (self.hold_rate > 0):
            raise ValueError("hold_rate must be positive")
        if not (self.tick > 0):
            raise ValueError("tick must be positive")
        object.__setattr__(self, "a_table", a)
        object.__setattr__(self, "b_table", b)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "hold_rate", float(self.hold_rate))
        object.__setattr__(self, "tick", float(self.tick))
        cum = np.cumsum(w)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @property
    def renewal_prob(self) -> float:
        return -math.expm1(-self.hold_rate * self.tick)

    def point(self, position: int = 0, seed: int = 0) -> TelegraphPoint:
        return TelegraphPoint(position, seed)

    def _ticks(self, t: float) -> int:
        n = round(t / self.tick)
        if abs(t / self.tick - n) > 1e-9 * max(1.0, abs(n)):
            raise ValueError(f"time {t} is not a multiple of the telegraph tick {self.tick}")
        return int(n)

    def check_grid(self, h: float) -> None:
        if abs(h - self.tick) > 1e-15:
            raise ValueError(f"telegraph tick {self.tick} must equal the grid step {h}")

    def advance(self, omega: TelegraphPoint, t: float) -> TelegraphPoint:
        return TelegraphPoint(omega.position + self._ticks(t), omega.seed)

    def _uniforms(self, seed: int, start: int, count: int) -> np.ndarray:
        gen = np.random.Philox(key=seed % 2 ** 64, counter=start + _COUNTER_OFFSET)
        raw = gen.random_raw(4 * count).reshape(count, 4)[:, :2]
        return (raw >> np.uint64(11)).astype(float) * _U53

    def states(self, seed: int, start: int, count: int) -> np.ndarray:
        """State indices at stream positions ``start .. start + count - 1``."""
        p = self.renewal_prob
        back = max(64, int(8.0 / p))
        while True:
            u = self._uniforms(seed, start - back, back + count)
            renew = u[:, 0] < p
            if np.any(renew[: back + 1]):
                break
            back *= 2
        draws = np.searchsorted(self._cum, u[:, 1], side="right")
        draws = np.minimum(draws, len(self._cum) - 1)
        idx = np.where(renew, np.arange(renew.shape[0]), -1)
        last = np.maximum.accumulate(idx)
        return draws[last[back:]]

    def state_index(self, omega: TelegraphPoint) -> int:
        return int(self.states(omega.seed, omega.position, 1)[0])

    def _tick_values(self, omega, times, table):
        ticks = np.floor(np.asarray(times, dtype=float) / self.tick + 1e-9).astype(np.int64)
        if ticks.size == 0:
            return np.zeros(0)
        lo, hi = int(ticks.min()), int(ticks.max())
        st = self.states(omega.seed, omega.position + lo, hi - lo + 1)
        return np.asarray(table)[st[ticks - lo]]

    def a_along(self, omega, times):
        return self._tick_values(omega, times, self.a_table)

    def b_along(self, omega, times):
        return self._tick_values(omega, times, self.b_table)

    def mean_a(self) -> float:
        return float(np.dot(self.weights, self.a_table))

    def invariant_quadrature(self, n: int, seed: int = 0, stride: int | None = None) -> InvariantQuadrature:
        """Equal-weight sample of the stationary path measure at well separated stream positions."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if stride is None:
            stride = int(math.ceil(40.0 / self.renewal_prob))
        nodes = [TelegraphPoint(k * stride, seed) for k in range(n)]
        return InvariantQuadrature(nodes, np.full(n, 1.0 / n))

    def describe(self) -> str:
        return f"telegraph(hold_rate={self.hold_rate!r})"
