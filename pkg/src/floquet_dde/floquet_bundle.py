"""Principal Floquet bundle: pullback vectors, Lyapunov exponents and the separating projections.

Both invariant directions are obtained by pullback power iteration over
blocks of two time units:

* ``w(omega)`` is the limit of ``U_{theta_{-s} w}(s) e`` normalized, built by
  multiplying new blocks on the right of an accumulated product;
* ``w*(omega)`` is the limit of ``U*_{theta_s w}(s) e*`` normalized, which
  is the pairing adjoint of the forward product started at ``omega``.

Along an orbit the dual vectors are produced by a backward sweep from
``w*(theta_N omega)``; the forward sweep then carries ``w``, a deflated
vector in the complementary family ``F`` and the projection probes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .delay_cocycle import DelayCocycle
from .dual_cocycle import DualVector, adjoint, dual_norm_coords, e_star, pairing_coords
from .state_space import EPS_ZERO, StateVector, comparable_coords, norm_coords, projdist_coords, unit_e

PAIR_FLOOR = 1e-14
CONTRACTION_FLOOR = 1e-9


class BundleError(RuntimeError):
    """Raised when the bundle cannot be computed (non-convergence, degenerate pairing, collapse)."""


class PullbackError(BundleError):
    def __init__(self, message: str, last_distance: float):
        super().__init__(f"{message} (last distance {last_distance:.3e})")
        self.last_distance = last_distance


@dataclass
class ContractionDiag:
    """Pullback history: ``distances[i]`` is ``d(iterate_s, iterate_{s+2})`` at ``s = depths[i]``.

    ``q_bounds[i]`` is the certified Birkhoff ratio ``tanh(ln kappa / 2)`` of the
    block added at that depth and ``envelope`` its running product.
    """

    depths: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    q_bounds: list = field(default_factory=list)

    @property
    def envelope(self) -> np.ndarray:
        return np.cumprod(self.q_bounds) if self.q_bounds else np.zeros(0)

    @property
    def iterations(self) -> int:
        return len(self.q_bounds)

    def empirical_rate(self) -> float:
        """Mean log-ratio of successive distances per block (above the precision floor)."""
        d = np.asarray(self.distances, dtype=float)
        if d.size == 0:
            return -math.inf
        if d[0] <= 0:
            return -math.inf
        keep = d > CONTRACTION_FLOOR
        if np.sum(keep) < 2:
            # one block took the distance from d[0] to below the floor
            last = d[1] if d.size > 1 else 0.0
            return math.log(last / d[0]) if last > 0 else -math.inf
        d = d[keep]
        return float(math.log(d[-1] / d[0]) / (d.size - 1))

    def bound_rate(self) -> float:
        """Time average of ``ln tanh(ln kappa / 2)`` over the blocks used."""
        q = np.asarray(self.q_bounds, dtype=float)
        if q.size == 0:
            return 0.0
        with np.errstate(divide="ignore"):
            return float(np.mean(np.log(q)))


def birkhoff_ratio(kappa: float) -> float:
    """Certified contraction ratio ``tanh(ln(kappa) / 2)`` of a map whose image has diameter ``<= 2 ln kappa``."""
    return math.tanh(0.5 * math.log(kappa))


class ContractionRate(NamedTuple):
    empirical: float
    bound: float


@dataclass
class BundleReport:
    w: StateVector
    w_star: DualVector
    lambda1: float
    lambda1_dual: float
    lambda2: float
    sigma: float
    pair_ww: float
    pullback_iters: int
    contraction_rate: float
    temperedness_slope: float
    grid_m: int
    p: float
    horizon: int
    flow: str
    seed: int

    JSON_KEYS = (
        "lambda1", "lambda1_dual", "lambda2", "sigma", "pair_ww", "pullback_iters",
        "contraction_rate", "temperedness_slope", "grid_m", "p", "horizon", "flow", "seed",
    )

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.JSON_KEYS}

    def invariant_failures(self, norm_tol: float = 1e-10) -> list[str]:
        """Names of violated report invariants (empty when the bundle is sound)."""
        from .dual_cocycle import dual_norm
        from .state_space import GridSpec, norm_x

        grid = GridSpec(self.grid_m, self.p)
        bad = []
        if abs(norm_x(self.w, grid) - 1.0) > norm_tol:
            bad.append("unit norm of w")
        if abs(dual_norm(self.w_star, grid) - 1.0) > norm_tol:
            bad.append("unit norm of w*")
        if not (0.0 < self.pair_ww <= 1.0 + norm_tol):
            bad.append("0 < <w, w*> <= 1")
        if not (self.sigma > 0):
            bad.append("sigma > 0")
        if math.isfinite(self.lambda2) and abs(self.sigma - (self.lambda1 - self.lambda2)) > 1e-12 * max(1.0, abs(self.sigma)):
            bad.append("sigma = lambda1 - lambda2")
        return bad


@dataclass
class OrbitResult:
    """Everything measured along one forward orbit ``omega, theta_1 omega, ..., theta_N omega``."""

    lambda1: float
    lambda1_dual: float
    lambda2: float
    sigma: float
    growth_logs: np.ndarray
    dual_logs: np.ndarray
    pairs: np.ndarray
    uu_residual: np.ndarray
    drift: np.ndarray
    temperedness_slope: float
    proj_norms: np.ndarray
    w: StateVector
    w_star: DualVector
    pullback: ContractionDiag


def _project(c, w, ws, grid):
    """``P u = u - (<u, w*> / <w, w*>) w`` on coordinate arrays (columns allowed)."""
    pair = float(pairing_coords(w, ws, grid))
    if pair < PAIR_FLOOR:
        raise BundleError(f"degenerate bundle: <w, w*> = {pair:.3e}")
    coef = pairing_coords(c, ws, grid) / pair
    if np.ndim(c) == 1:
        return c - coef * w
    return c - w[:, None] * coef[None, :]


class FloquetBundle:
    """Principal bundle computations for a fixed delay cocycle."""

    def __init__(self, cocycle: DelayCocycle, tol: float = 1e-10, max_pullback: int = 400):
        if not tol > 0:
            raise ValueError("tol must be positive")
        self.cocycle = cocycle
        self.grid = cocycle.grid
        self.tol = float(tol)
        self.max_pullback = int(max_pullback)
        self._cache = {}

    # pullback iterations

    def _block(self, omega) -> tuple[np.ndarray, float]:
        cy = self.cocycle
        steps = cy.steps(omega, 2 * cy.m)
        mat = cy.propagate(omega, np.eye(self.grid.dim), 2 * cy.m, steps)
        return mat, cy.kappa(omega, steps)

    def pullback_principal(self, omega, tol: float | None = None,
                           max_pullback: int | None = None) -> tuple[StateVector, ContractionDiag]:
        tol = self.tol if tol is None else tol
        max_pullback = self.max_pullback if max_pullback is None else max_pullback
        key = ("w", omega, tol, max_pullback)
        if key in self._cache:
            return self._cache[key]
        grid = self.grid
        e = unit_e(grid).coords
        prod = np.eye(grid.dim)
        diag = ContractionDiag()
        prev = None
        s = 0
        d = math.inf
        while s < max_pullback:
            block, kap = self._block(self.cocycle.advance(omega, -(s + 2)))
            prod = prod @ block
            prod /= np.max(np.abs(prod))
            diag.q_bounds.append(birkhoff_ratio(kap))
            s += 2
            psi = prod @ e
            psi = psi / norm_coords(psi, grid)
            if prev is not None:
                d = projdist_coords(prev, psi)
                diag.depths.append(s - 2)
                diag.distances.append(d)
                if d < tol:
                    break
            prev = psi
        else:
            raise PullbackError(f"pullback of w did not converge within s = {max_pullback}", d)
        if not comparable_coords(psi, e):
            raise BundleError("pullback vector left the component of e")
        result = (StateVector.from_coords(psi), diag)
        self._cache[key] = result
        return result

    def pullback_dual(self, omega, tol: float | None = None,
                      max_pullback: int | None = None) -> tuple[DualVector, ContractionDiag]:
        tol = self.tol if tol is None else tol
        max_pullback = self.max_pullback if max_pullback is None else max_pullback
        key = ("w*", omega, tol, max_pullback)
        if key in self._cache:
            return self._cache[key]
        grid = self.grid
        es = e_star(grid).coords
        prod = np.eye(grid.dim)
        diag = ContractionDiag()
        prev = None
        s = 0
        d = math.inf
        while s < max_pullback:
            block, kap = self._block(self.cocycle.advance(omega, s))
            prod = block @ prod
            prod /= np.max(np.abs(prod))
            diag.q_bounds.append(birkhoff_ratio(kap))
            s += 2
            psi = adjoint(prod, grid) @ es
            psi = psi / dual_norm_coords(psi, grid)
            if prev is not None:
                d = projdist_coords(prev, psi)
                diag.depths.append(s - 2)
                diag.distances.append(d)
                if d < tol:
                    break
            prev = psi
        else:
            raise PullbackError(f"pullback of w* did not converge within s = {max_pullback}", d)
        result = (DualVector.from_coords(psi), diag)
        self._cache[key] = result
        return result

    # projections

    def project(self, omega, u: StateVector) -> StateVector:
        w, _ = self.pullback_principal(omega)
        ws, _ = self.pullback_dual(omega)
        return StateVector.from_coords(_project(u.coords, w.coords, ws.coords, self.grid))

    # orbit quantities

    def orbit(self, omega, horizon: int, seed: int = 0, probes: int = 32) -> OrbitResult:
        """Forward/backward sweep over ``horizon`` unit steps; see the module docstring."""
        n = int(horizon)
        if n < 1:
            raise ValueError("horizon must be at least 1")
        cy = self.cocycle
        grid = self.grid
        dim = grid.dim
        points = [cy.advance(omega, float(k)) for k in range(n + 1)]

        w0, diag = self.pullback_principal(omega)
        wsN, _ = self.pullback_dual(points[n])

        # backward sweep of the dual
        wstar = np.empty((n + 1, dim))
        wstar[n] = wsN.coords
        dual_logs = np.empty(n)
        for k in range(n - 1, -1, -1):
            y = adjoint(cy.unit_matrix(points[k]), grid) @ wstar[k + 1]
            g = float(dual_norm_coords(y, grid))
            if not g > 0:
                raise BundleError(f"dual vector collapsed at step {k}")
            dual_logs[k] = math.log(g)
            wstar[k] = y / g

        rng = np.random.default_rng(seed)
        w = w0.coords
        v = _project(rng.standard_normal(dim), w, wstar[0], grid)
        v = v / norm_coords(v, grid)
        probe_set = rng.standard_normal((dim, probes))
        probe_set /= norm_coords(probe_set, grid)[None, :]

        logs = np.empty(n)
        pairs = np.empty(n + 1)
        pairs[0] = pairing_coords(w, wstar[0], grid)
        uu = np.empty(n)
        drift = []
        logs2 = []
        alive = True
        proj_norms = []
        first_probe = max(1, (n + 1) // 2)

        for k in range(n):
            mat = cy.unit_matrix(points[k])
            uw = mat @ w
            g = float(norm_coords(uw, grid))
            if not g > 0:
                raise BundleError(f"principal vector collapsed at step {k}")
            logs[k] = math.log(g)
            w = uw / g
            pairs[k + 1] = pairing_coords(w, wstar[k + 1], grid)
            lhs = g * pairs[k + 1]
            rhs = math.exp(dual_logs[k]) * pairs[k]
            uu[k] = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
            if alive:
                uv = mat @ v
                nv = float(norm_coords(uv, grid))
                if nv <= EPS_ZERO:
                    alive = False
                else:
                    pv = _project(uv, w, wstar[k + 1], grid)
                    drift.append(float(norm_coords(uv - pv, grid)) / nv)
                    g2 = float(norm_coords(pv, grid))
                    if g2 <= EPS_ZERO:
                        alive = False
                    else:
                        logs2.append(math.log(g2))
                        v = pv / g2
            if k + 1 >= first_probe:
                pp = _project(probe_set, w, wstar[k + 1], grid)
                proj_norms.append(float(np.max(norm_coords(pp, grid))))

        lam1 = float(np.mean(logs))
        lam1_dual = float(np.mean(dual_logs))
        if alive:
            lam2 = float(np.sum(logs2) / n)
            sigma = lam1 - lam2
        else:
            lam2, sigma = -math.inf, math.inf
        ts = np.arange(first_probe, n + 1, dtype=float)
        proj_norms = np.asarray(proj_norms)
        slope = float(np.max(np.abs(np.log(proj_norms)) / ts)) if proj_norms.size else 0.0
        return OrbitResult(
            lambda1=lam1, lambda1_dual=lam1_dual, lambda2=lam2, sigma=sigma,
            growth_logs=logs, dual_logs=dual_logs, pairs=pairs, uu_residual=uu,
            drift=np.asarray(drift), temperedness_slope=slope, proj_norms=proj_norms,
            w=w0, w_star=DualVector.from_coords(wstar[0]), pullback=diag,
        )

    def lyapunov_top(self, omega, horizon: int) -> float:
        """``(1/N) sum_k ln ||U_{theta_k w}(1) w(theta_k w)||`` along the forward orbit."""
        w, _ = self.pullback_principal(omega)
        c = w.coords
        total = 0.0
        here = omega
        for _ in range(int(horizon)):
            c = self.cocycle.propagate(here, c, self.cocycle.m)
            g = float(norm_coords(c, self.grid))
            if not g > 0:
                raise BundleError("principal vector collapsed")
            total += math.log(g)
            c = c / g
            here = self.cocycle.advance(here, 1.0)
        return total / int(horizon)

    def lyapunov_top_dual(self, omega, horizon: int, seed: int = 0) -> float:
        return self.orbit(omega, horizon, seed).lambda1_dual

    def second_exponent(self, omega, horizon: int, seed: int = 0) -> tuple[float, float]:
        orb = self.orbit(omega, horizon, seed)
        if math.isfinite(orb.lambda2) and not orb.sigma > 0:
            raise BundleError(
                f"separation failure: sigma = {orb.sigma:.3e} (grid too coarse or horizon too short)")
        return orb.lambda2, orb.sigma

    def temperedness_check(self, omega, horizon: int, seed: int = 0) -> float:
        return self.orbit(omega, horizon, seed).temperedness_slope

    def ensemble_top(self, nodes, weights) -> float:
        """Quadrature of ``ln ||U_{w'}(1) w(w')||`` over base points ``nodes``."""
        vals = []
        for node in nodes:
            w, _ = self.pullback_principal(node)
            img = self.cocycle.propagate(node, w.coords, self.cocycle.m)
            vals.append(math.log(float(norm_coords(img, self.grid))))
        return float(np.dot(np.asarray(weights, dtype=float), vals))

    def contraction_rate(self, omega, horizon: int, seed: int = 0, pairs: int = 8) -> ContractionRate:
        """Worst per-block log contraction of ``d`` over seeded positive pairs against the certified bound.

        Each pair is pushed through consecutive two-unit blocks starting at
        ``omega`` until its distance drops below the precision floor or the
        horizon is used up.  Returned values are per block of two units; the
        pair with the largest margin ``empirical - bound`` is reported.
        """
        cy = self.cocycle
        grid = self.grid
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.1, 1.0, (grid.dim, pairs))
        v = rng.uniform(0.1, 1.0, (grid.dim, pairs))
        d0 = np.array([projdist_coords(u[:, i], v[:, i]) for i in range(pairs)])
        log_q = []
        last_d = d0.copy()
        used = np.zeros(pairs, dtype=int)
        done = np.zeros(pairs, dtype=bool)
        here = omega
        for _ in range(max(1, int(horizon) // 2)):
            block, kap = self._block(here)
            q = birkhoff_ratio(kap)
            log_q.append(math.log(q) if q > 0 else -math.inf)
            u = block @ u
            v = block @ v
            u /= norm_coords(u, grid)[None, :]
            v /= norm_coords(v, grid)[None, :]
            for i in np.flatnonzero(~done):
                d = projdist_coords(u[:, i], v[:, i])
                if d <= CONTRACTION_FLOOR:
                    done[i] = True
                    if used[i] == 0:
                        # a single block jumped below the floor
                        last_d[i] = d
                        used[i] = 1
                    continue
                last_d[i] = d
                used[i] += 1
            if np.all(done):
                break
            here = cy.advance(here, 2.0)
        log_q = np.asarray(log_q)
        best = None
        for i in range(pairs):
            k = max(int(used[i]), 1)
            emp = math.log(last_d[i] / d0[i]) / k if last_d[i] > 0 else -math.inf
            bnd = float(np.mean(log_q[:k]))
            margin = emp - bnd if math.isfinite(bnd) else (0.0 if emp == -math.inf else math.inf)
            if best is None or margin > best[2]:
                best = (emp, bnd, margin)
        return ContractionRate(best[0], best[1])

    # report

    def report(self, omega, horizon: int, seed: int = 0, flow: str = "") -> tuple[BundleReport, OrbitResult]:
        orb = self.orbit(omega, horizon, seed)
        rate = self.contraction_rate(omega, horizon, seed)
        rep = BundleReport(
            w=orb.w, w_star=orb.w_star,
            lambda1=orb.lambda1, lambda1_dual=orb.lambda1_dual,
            lambda2=orb.lambda2, sigma=orb.sigma,
            pair_ww=float(orb.pairs[0]),
            pullback_iters=orb.pullback.iterations,
            contraction_rate=rate.empirical,
            temperedness_slope=orb.temperedness_slope,
            grid_m=self.grid.m, p=self.grid.p, horizon=int(horizon),
            flow=flow or self.cocycle.driver.describe(), seed=int(seed),
        )
        return rep, orb


__all__ = [
    "BundleError", "BundleReport", "ContractionDiag", "ContractionRate", "FloquetBundle",
    "OrbitResult", "PullbackError", "birkhoff_ratio",
]
