"""Dual semiflow on X* = R x L_q and the pairing <u, u*>.

The adjoint is taken with respect to the quadrature pairing
``<u, v> = u1 v1 + sum_j w_j u2_j v2_j``: with ``W`` the diagonal weight
matrix, the dual of a propagator matrix ``A`` is ``W^-1 A^T W``.  The dual
norm of the sum norm ``|u1| + ||u2||_p`` is ``max(|v1|, ||v2||_q)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .delay_cocycle import DelayCocycle
from .state_space import EPS_ZERO, GridSpec, StateVector, _frozen_array, in_cone_coords, unit_e


@dataclass(frozen=True, eq=False)
class DualVector:
    head: float
    tail: np.ndarray

    def __post_init__(self):
        head = float(self.head)
        if not math.isfinite(head):
            raise ValueError("head must be finite")
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", _frozen_array(self.tail))

    @classmethod
    def from_coords(cls, c) -> "DualVector":
        c = np.asarray(c, dtype=float)
        return cls(c[0], c[1:])

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate(([self.head], self.tail))

    def __repr__(self):
        return f"DualVector(head={self.head!r}, tail=<{self.tail.shape[0]} samples>)"


def e_star(grid: GridSpec) -> DualVector:
    """``e* = (1, 1)``: ``<e, e*> = 1`` and ``||e*|| = 1`` in the dual norm."""
    return DualVector(1.0, np.ones(grid.m + 1))


def dual_norm(v: DualVector, grid: GridSpec) -> float:
    return float(dual_norm_coords(v.coords, grid))


def dual_norm_coords(c: np.ndarray, grid: GridSpec):
    c = np.asarray(c, dtype=float)
    q = grid.q
    w = grid.weights.reshape((-1,) + (1,) * (c.ndim - 1))
    tail = np.sum(w * np.abs(c[1:]) ** q, axis=0) ** (1.0 / q)
    return np.maximum(np.abs(c[0]), tail)


def in_dual_cone(v: DualVector, eps: float = EPS_ZERO) -> bool:
    return in_cone_coords(v.coords, eps)


def pairing_coords(cu: np.ndarray, cv: np.ndarray, grid: GridSpec):
    cu = np.asarray(cu, dtype=float)
    cv = np.asarray(cv, dtype=float)
    if cu.shape[0] != grid.m + 2 or cv.shape[0] != grid.m + 2:
        raise ValueError("pairing arguments do not match the grid")
    if cu.ndim > cv.ndim:
        cv = cv.reshape(cv.shape + (1,) * (cu.ndim - cv.ndim))
    elif cv.ndim > cu.ndim:
        cu = cu.reshape(cu.shape + (1,) * (cv.ndim - cu.ndim))
    return cu[0] * cv[0] + np.tensordot(grid.weights, cu[1:] * cv[1:], axes=(0, 0))


def pairing(u: StateVector, v: DualVector, grid: GridSpec) -> float:
    return float(pairing_coords(u.coords, v.coords, grid))


def adjoint(matrix: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Matrix of the pairing adjoint ``W^-1 A^T W``."""
    w = grid.pairing_weights
    return matrix.T * w[None, :] / w[:, None]


class DualFocusing(NamedTuple):
    beta: float
    kappa: float


class DualCocycle:
    """``U*_w(t)``, the pairing adjoint of ``U_{theta_{-t} w}(t)``; it covers the flow ``theta_{-t}``."""

    def __init__(self, cocycle: DelayCocycle):
        self.cocycle = cocycle
        self.grid = cocycle.grid

    def matrix(self, omega, t: float) -> np.ndarray:
        cy = self.cocycle
        n = cy.n_substeps(t)
        if n == 0:
            return np.eye(self.grid.dim)
        # unit-sized blocks composed by the dual cocycle law
        mat = np.eye(self.grid.dim)
        here = omega
        left = n
        while left > 0:
            k = min(left, cy.m)
            start = cy.advance(here, -k / cy.m)
            mat = adjoint(cy.propagate(start, np.eye(self.grid.dim), k), self.grid) @ mat
            here = start
            left -= k
        return mat

    def unit_matrix(self, omega) -> np.ndarray:
        """``W^-1 A^T W`` with ``A`` the unit propagator at ``theta_{-1} w``."""
        cy = self.cocycle
        return adjoint(cy.unit_matrix(cy.advance(omega, -1.0)), self.grid)

    def dual_apply(self, omega, t: float, v: DualVector) -> DualVector:
        return DualVector.from_coords(self.matrix(omega, t) @ v.coords)

    def focusing_constants(self, omega, v: DualVector, horizon: float = 2.0) -> DualFocusing:
        """``beta* = <e, v> / kappa(theta_{-T} w)`` and ``kappa* = kappa(theta_{-T} w)^2`` for the T-step sandwich."""
        c = v.coords
        if not in_cone_coords(c) or not np.any(c > 0):
            raise ValueError("dual focusing constants need a nonzero vector of the dual cone")
        cy = self.cocycle
        kap = cy.kappa(cy.advance(omega, -horizon))
        beta = pairing(unit_e(self.grid), v, self.grid) / kap
        return DualFocusing(beta, kap * kap)
