"""Method-of-steps solver for z'(t) = a(theta_t w) z(t) + b(theta_t w) z(t - 1).

The unit delay is split into ``m`` substeps of length ``h = 1/m``.  Over a
substep the history ``z(t - 1)`` is the linear interpolant between two grid
values, ``a`` is frozen at its 2-point Gauss mean and ``b`` at its midpoint
value, and the resulting linear ODE is solved exactly:

    z[k+1] = E_k z[k] + h b_k (psi(alpha_k) x[k] + chi(alpha_k) x[k+1])

with ``alpha_k`` the Gauss integral of ``a``, ``E_k = exp(alpha_k)`` and
``psi, chi`` the exponential weights of the two interpolation nodes.  Both
weights are positive, so the scheme maps the cone into itself whenever
``b >= 0``, and it is exact for constant coefficients with piecewise linear
history.

The history seen by the solver is ``tail[0..m-1]`` followed by ``head`` at
time 0; the sample ``tail[m]`` enters only through quadrature (norms and
pairings).  With this convention advancing by ``n`` substeps is a pure index
shift of one long array, which makes the cocycle identity exact for every
grid-aligned split of time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .base_flow import Driver
from .state_space import EPS_ZERO, GridSpec, StateVector, in_cone_coords, norm_x

KERNEL_REL_TOL = 1e-12

_SERIES_TERMS = 26


def _series_coeffs():
    fact = [math.factorial(k) for k in range(_SERIES_TERMS)]
    psi = [1.0 / (fact[k] * (k + 2)) for k in range(_SERIES_TERMS)]
    chi = [1.0 / (fact[k] * (k + 1) * (k + 2)) for k in range(_SERIES_TERMS)]
    # np.polyval wants the leading coefficient first
    return np.array(psi[::-1]), np.array(chi[::-1])


_PSI_SERIES, _CHI_SERIES = _series_coeffs()


def exp_weights(alpha) -> tuple[np.ndarray, np.ndarray]:
    """Weights of the left and right history node for a substep with log-growth ``alpha``.

    ``psi(a) = int_0^1 r e^{a r} dr`` and ``chi(a) = int_0^1 (1 - r) e^{a r} dr``.
    """
    alpha = np.asarray(alpha, dtype=float)
    small = np.abs(alpha) <= 1.0
    psi = np.polyval(_PSI_SERIES, alpha)
    chi = np.polyval(_CHI_SERIES, alpha)
    if not np.all(small):
        a = np.where(small, 1.0, alpha)
        em1 = np.expm1(a)
        psi = np.where(small, psi, (a * np.exp(a) - em1) / (a * a))
        chi = np.where(small, chi, (em1 - a) / (a * a))
    return psi, chi


class Steps(NamedTuple):
    """Per-substep coefficients of the recurrence plus the raw coefficient data."""

    growth: np.ndarray
    left: np.ndarray
    right: np.ndarray
    alpha: np.ndarray
    abs_alpha: np.ndarray
    b_gauss: np.ndarray


@dataclass(frozen=True, eq=False)
class UnitPropagator:
    matrix: np.ndarray
    source: object

    def apply(self, u: StateVector) -> StateVector:
        return StateVector.from_coords(self.matrix @ u.coords)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    heads: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "z"])
            for t, z in zip(self.times, self.heads):
                writer.writerow([format(float(t), ".17g"), format(float(z), ".17g")])


class Focusing(NamedTuple):
    """Constants of the two-step focusing sandwich ``beta e <= U(2) u <= kappa beta e``.

    ``kernel`` is True when ``z(1) = 0`` (then ``U(2) u = 0`` and ``beta`` is 0).
    """

    beta: float
    kappa: float
    kernel: bool
    image: np.ndarray


class DelayCocycle:
    """The skew-product semiflow ``U_w(t)`` of the delay equation on a fixed grid."""

    def __init__(self, driver: Driver, grid: GridSpec):
        driver.check_grid(grid.h)
        self.driver = driver
        self.grid = grid

    @property
    def m(self) -> int:
        return self.grid.m

    def advance(self, omega, t: float):
        return self.driver.advance(omega, t)

    def n_substeps(self, t: float) -> int:
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        n = round(t * self.m)
        if abs(t * self.m - n) > 1e-9 * max(1.0, n):
            raise ValueError(f"time {t} is not aligned to the grid step 1/{self.m}")
        return int(n)

    def steps(self, omega, n: int, start: int = 0) -> Steps:
        h = self.grid.h
        data = self.driver.substeps(omega, h, n, start)
        psi, chi = exp_weights(data.alpha)
        hb = h * data.b_mid
        return Steps(np.exp(data.alpha), hb * psi, hb * chi, data.alpha, data.abs_alpha, data.b_gauss)

    def history(self, omega, coords: np.ndarray, n: int, steps: Steps | None = None) -> np.ndarray:
        """Run ``n`` substeps; return the history array ``X`` (rows indexed by time ``(i - m) h``)."""
        m = self.m
        coords = np.asarray(coords, dtype=float)
        if coords.shape[0] != m + 2:
            raise ValueError(f"expected {m + 2} coordinates, got {coords.shape[0]}")
        if steps is None:
            steps = self.steps(omega, n)
        X = np.empty((m + n + 1,) + coords.shape[1:])
        X[:m] = coords[1:m + 1]
        X[m] = coords[0]
        E, L, R = steps.growth, steps.left, steps.right
        if X.ndim == 1:
            xs = X.tolist()
            E, L, R = E.tolist(), L.tolist(), R.tolist()
            for k in range(n):
                xs[m + k + 1] = E[k] * xs[m + k] + L[k] * xs[k] + R[k] * xs[k + 1]
            X[:] = xs
        else:
            for k in range(n):
                X[m + k + 1] = E[k] * X[m + k] + L[k] * X[k] + R[k] * X[k + 1]
        return X

    def propagate(self, omega, coords: np.ndarray, n: int, steps: Steps | None = None) -> np.ndarray:
        """Coordinates of ``U_w(n h)`` applied to ``coords`` (vector or column batch)."""
        coords = np.asarray(coords, dtype=float)
        if n == 0:
            return coords.copy()
        X = self.history(omega, coords, n, steps)
        m = self.m
        return np.concatenate((X[m + n][None], X[n:n + m + 1]), axis=0)

    def integrate_unit(self, omega, u: StateVector) -> StateVector:
        return StateVector.from_coords(self.propagate(omega, u.coords, self.m))

    def cocycle_apply(self, omega, t: float, u: StateVector) -> StateVector:
        return StateVector.from_coords(self.propagate(omega, u.coords, self.n_substeps(t)))

    def matrix(self, omega, t: float = 1.0) -> np.ndarray:
        n = self.n_substeps(t)
        return self.propagate(omega, np.eye(self.m + 2), n)

    def unit_matrix(self, omega) -> np.ndarray:
        return self.propagate(omega, np.eye(self.m + 2), self.m)

    def assemble_unit_matrix(self, omega) -> UnitPropagator:
        return UnitPropagator(self.unit_matrix(omega), omega)

    def trajectory(self, omega, u: StateVector, t: float) -> TrajectoryRecord:
        n = self.n_substeps(t)
        X = self.history(omega, u.coords, n)
        return TrajectoryRecord(np.arange(n + 1) * self.grid.h, X[self.m:].copy())

    # focusing constants of the two-step map

    def kappa(self, omega, steps: Steps | None = None) -> float:
        m = self.m
        if steps is None:
            steps = self.steps(omega, 2 * m)
        alpha1, alpha2 = steps.alpha[:m], steps.alpha[m:2 * m]
        # g[j] bounds z(jh) / z(1) on the first unit for cone data
        tail_sums = np.concatenate((np.cumsum(alpha1[::-1])[::-1], [0.0]))
        g = np.exp(-tail_sums)
        p2 = np.exp(np.concatenate(([0.0], np.cumsum(alpha2))))
        forcing = steps.left[m:2 * m] * g[:-1] + steps.right[m:2 * m] * g[1:]
        bracket = 1.0 + float(np.sum(forcing / p2[1:]))
        c1 = math.exp(float(np.sum(steps.abs_alpha[m:2 * m])))
        return c1 * bracket

    def focusing_constants(self, omega, u: StateVector) -> Focusing:
        c = u.coords
        if not in_cone_coords(c):
            raise ValueError("focusing constants need a vector in the cone")
        m = self.m
        steps = self.steps(omega, 2 * m)
        X = self.history(omega, np.maximum(c, 0.0), 2 * m, steps)
        image = np.concatenate(([X[3 * m]], X[2 * m:3 * m + 1]))
        kap = self.kappa(omega, steps)
        z1 = float(X[2 * m])
        if z1 <= KERNEL_REL_TOL * norm_x(u, self.grid):
            return Focusing(0.0, kap, True, image)
        p2 = np.exp(np.concatenate(([0.0], np.cumsum(steps.alpha[m:2 * m]))))
        beta = 2.0 * float(np.min(p2)) * z1
        return Focusing(beta, kap, False, image)

    def growth_bound(self, omega) -> float:
        """``3 c(w) (1 + d(w))``, a bound for ``||U_w(t)||`` on ``0 <= t <= 1``."""
        steps = self.steps(omega, self.m)
        c = math.exp(float(np.sum(steps.abs_alpha)))
        q = self.grid.q
        d = float(np.sum(0.5 * self.grid.h * np.sum(steps.b_gauss ** q, axis=1))) ** (1.0 / q)
        return 3.0 * c * (1.0 + d)


def sandwich_violation(image: np.ndarray, beta: float, kappa: float) -> float:
    """Largest relative violation of ``beta e <= image <= kappa beta e`` with ``e = 1/2``."""
    lo = 0.5 * beta
    hi = 0.5 * kappa * beta
    scale = max(hi, EPS_ZERO)
    return float(max(np.max(lo - image), np.max(image - hi), 0.0) / scale)


__all__ = [
    "DelayCocycle", "Focusing", "Steps", "TrajectoryRecord", "UnitPropagator",
    "exp_weights", "sandwich_violation",
]
