"""Independent checks: closed-form and brute-force oracles plus the identity battery.

The oracles here deliberately avoid the estimators they validate: the
characteristic root is plain bisection on a scalar equation, and the second
exponent is computed by QR reorthogonalization of two probe vectors rather
than by deflation against the dual bundle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .delay_cocycle import DelayCocycle, sandwich_violation
from .dual_cocycle import DualCocycle, DualVector, e_star, pairing, pairing_coords
from .floquet_bundle import BundleError, FloquetBundle, birkhoff_ratio
from .state_space import (
    EPS_ZERO, StateVector, norm_coords, norm_x, projdist_coords,
    projdist_norm_bound,
)


def characteristic_root(a0: float, b0: float) -> float:
    """Real root of ``lam = a0 + b0 exp(-lam)`` by bisection (the root is unique for ``b0 >= 0``)."""
    a0 = float(a0)
    b0 = float(b0)
    if b0 < 0:
        raise ValueError("b0 must be nonnegative")
    if b0 == 0:
        return a0

    def f(lam):
        return lam - a0 - b0 * math.exp(-lam)

    lo = a0 - 1.0
    hi = a0 + b0 + 1.0
    # f(lo) < 0 always; the upper end can fail when a0 is very negative
    while f(hi) <= 0:
        hi = hi + 2.0 * (hi - lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def benettin_exponents(cocycle: DelayCocycle, omega, horizon: int,
                       transient: int = 20, seed: int = 0) -> tuple[float, float]:
    """Top two Lyapunov exponents by QR reorthogonalization of two probes.

    Works in coordinates scaled by the square root of the pairing weights, so
    the Euclidean norm there is the discrete ``R x L_2`` norm.  The first
    ``transient`` steps only align the frame and are not averaged.
    """
    n = int(horizon)
    grid = cocycle.grid
    scale = np.sqrt(grid.pairing_weights)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((grid.dim, 2)))
    here = omega
    sums = np.zeros(2)
    second_dead = False
    for k in range(transient + n):
        a = cocycle.unit_matrix(here)
        y = scale[:, None] * (a @ (q / scale[:, None]))
        q, r = np.linalg.qr(y)
        diag = np.abs(np.diag(r))
        if k >= transient:
            if diag[0] <= 0:
                raise ValueError("first Benettin direction collapsed")
            sums[0] += math.log(diag[0])
            if diag[1] <= EPS_ZERO * diag[0] or second_dead:
                second_dead = True
            else:
                sums[1] += math.log(diag[1])
        elif diag[1] <= EPS_ZERO * diag[0]:
            # keep the frame two-dimensional while it aligns
            second_dead = True
        here = cocycle.advance(here, 1.0)
    first = sums[0] / n
    second = -math.inf if second_dead else sums[1] / n
    return float(first), float(second)


def benettin_second(cocycle: DelayCocycle, omega, horizon: int, **kwargs) -> float:
    if int(horizon) < 10:
        raise ValueError("horizon must be at least 10")
    return benettin_exponents(cocycle, omega, horizon, **kwargs)[1]


@dataclass
class OracleResult:
    name: str
    value: float
    tolerance: float
    witness: Any = None
    passed: bool = field(init=False)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        self.passed = bool(self.value <= self.tolerance)

    def to_dict(self) -> dict:
        out = {"name": self.name, "residual": self.value, "tolerance": self.tolerance, "pass": self.passed}
        if self.witness is not None and not self.passed:
            out["witness"] = self.witness
        return out


class FaultyCocycle(DelayCocycle):
    """A propagator with one entry of every unit matrix negated; used to show the battery can fail."""

    def unit_matrix(self, omega) -> np.ndarray:
        mat = super().unit_matrix(omega)
        i, j = np.unravel_index(np.argmax(mat), mat.shape)
        mat[i, j] = -mat[i, j]
        return mat


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


class _Worst:
    """Tracks the largest residual seen and the inputs that produced it."""

    def __init__(self):
        self.value = 0.0
        self.witness = None

    def see(self, value: float, witness: Callable[[], Any]):
        if not math.isfinite(value) or value > self.value:
            self.value = value if math.isfinite(value) else math.inf
            self.witness = witness()


def _angle(omega):
    return {"angle": omega.angle} if hasattr(omega, "angle") else {"position": omega.position, "seed": omega.seed}


def run_identity_battery(cocycle: DelayCocycle, omega, seed: int = 0, samples: int = 20,
                         tol: float = 1e-10, max_pullback: int = 400) -> list[OracleResult]:
    """Evaluate every structural identity on seeded inputs; failures are collected, not raised."""
    grid = cocycle.grid
    m = grid.m
    dim = grid.dim
    rng = np.random.default_rng(seed)
    dual = DualCocycle(cocycle)
    results: list[OracleResult] = []

    def base(k):
        return cocycle.advance(omega, float(k))

    def cone_vec():
        return rng.uniform(0.0, 1.0, dim)

    def run(name, tolerance, body):
        worst = _Worst()
        try:
            body(worst)
        except (BundleError, ValueError, FloatingPointError) as exc:
            worst.value = math.inf
            worst.witness = {"error": str(exc)}
        results.append(OracleResult(name, worst.value, tolerance, worst.witness))

    def cocycle_law(worst):
        for _ in range(samples):
            k0 = int(rng.integers(0, 5 * m))
            ns = int(rng.integers(0, 3 * m))
            nt = int(rng.integers(1, 3 * m))
            om = cocycle.advance(omega, k0 / m)
            u = rng.standard_normal(dim)
            whole = cocycle.propagate(om, u, ns + nt)
            split = cocycle.propagate(cocycle.advance(om, ns / m), cocycle.propagate(om, u, ns), nt)
            worst.see(_rel(whole, split), lambda: {"omega": _angle(om), "s": ns / m, "t": nt / m})

    def matvec(worst):
        for k in range(min(samples, 8)):
            om = base(k)
            mat = cocycle.unit_matrix(om)
            u = rng.standard_normal(dim)
            worst.see(_rel(mat @ u, cocycle.propagate(om, u, m)), lambda: {"omega": _angle(om)})

    def positivity(worst):
        for k in range(min(samples, 8)):
            mat = cocycle.unit_matrix(base(k))
            neg = max(0.0, -float(np.min(mat))) / float(np.max(np.abs(mat)))
            worst.see(neg, lambda: {"omega": _angle(base(k)), "entry": [int(x) for x in np.unravel_index(np.argmin(mat), mat.shape)]})

    def dichotomy(worst):
        # cone vectors are either killed by two unit steps or mapped strictly inside
        for k in range(samples):
            om = base(k % 8)
            u = cone_vec()
            if k % 4 == 0:
                u[0] = 0.0
            img = cocycle.unit_matrix(cocycle.advance(om, 1.0)) @ (cocycle.unit_matrix(om) @ u)
            size = float(np.max(np.abs(img)))
            if size <= EPS_ZERO * float(np.max(u)):
                continue
            bad = 1.0 if float(np.min(img)) <= 0 else 0.0
            worst.see(bad, lambda: {"omega": _angle(om), "u": u.tolist()})

    def focusing(worst):
        for k in range(samples):
            om = base(k % 8)
            u = cone_vec()
            f = cocycle.focusing_constants(om, StateVector.from_coords(u))
            if f.kernel:
                worst.see(float(np.max(np.abs(f.image))) / max(norm_x(StateVector.from_coords(u), grid), 1e-300),
                          lambda: {"omega": _angle(om), "u": u.tolist()})
                continue
            worst.see(sandwich_violation(f.image, f.beta, f.kappa), lambda: {"omega": _angle(om), "u": u.tolist()})

    def duality(worst):
        for _ in range(samples):
            n = int(rng.integers(0, 4 * m))
            om = base(int(rng.integers(0, 8)))
            u = rng.standard_normal(dim)
            v = rng.standard_normal(dim)
            lhs = pairing_coords(cocycle.propagate(cocycle.advance(om, -n / m), u, n), v, grid)
            rhs = pairing_coords(u, dual.matrix(om, n / m) @ v, grid)
            scale = float(norm_coords(u, grid)) * float(np.max(np.abs(v)))
            worst.see(abs(float(lhs) - float(rhs)) / scale, lambda: {"omega": _angle(om), "t": n / m})

    def dual_law(worst):
        for _ in range(min(samples, 10)):
            om = base(int(rng.integers(0, 8)))
            nt = int(rng.integers(0, 2 * m))
            ns = int(rng.integers(1, 2 * m))
            v = rng.standard_normal(dim)
            whole = dual.matrix(om, (nt + ns) / m) @ v
            split = dual.matrix(cocycle.advance(om, -nt / m), ns / m) @ (dual.matrix(om, nt / m) @ v)
            worst.see(_rel(whole, split), lambda: {"omega": _angle(om), "t": nt / m, "s": ns / m})

    def dual_sandwich(worst):
        es = e_star(grid).coords
        for k in range(min(samples, 10)):
            om = base(k % 8)
            v = cone_vec()
            fb = dual.focusing_constants(om, DualVector.from_coords(v))
            mat = dual.matrix(om, 2.0)
            img = mat @ v
            ref = mat @ es
            lo = fb.beta * ref - img
            hi = img - fb.kappa * fb.beta * ref
            scale = max(float(np.max(fb.kappa * fb.beta * ref)), 1e-300)
            worst.see(max(float(np.max(lo)), float(np.max(hi)), 0.0) / scale,
                      lambda: {"omega": _angle(om), "v": v.tolist()})

    def contraction(worst):
        for k in range(samples):
            om = base(k % 8)
            u = rng.uniform(0.1, 1.0, dim)
            v = rng.uniform(0.1, 1.0, dim)
            mat = cocycle.matrix(om, 2.0)
            q = birkhoff_ratio(cocycle.kappa(om))
            before = projdist_coords(u, v)
            after = projdist_coords(mat @ u, mat @ v)
            worst.see(max(0.0, after - q * before), lambda: {"omega": _angle(om), "u": u.tolist(), "v": v.tolist()})

    def norm_bound(worst):
        for _ in range(samples):
            u = rng.uniform(0.1, 1.0, dim)
            v = u * rng.uniform(0.8, 1.25, dim)
            su = StateVector.from_coords(u / norm_coords(u, grid))
            sv = StateVector.from_coords(v / norm_coords(v, grid))
            dist, bound = projdist_norm_bound(su, sv, grid, unit_tol=1e-10)
            worst.see(max(0.0, dist - bound), lambda: {"u": u.tolist(), "v": v.tolist()})

    def metric_axioms(worst):
        for _ in range(samples):
            u, v, z = (rng.uniform(0.1, 1.0, dim) for _ in range(3))
            duv = projdist_coords(u, v)
            worst.see(abs(duv - projdist_coords(v, u)), lambda: {"u": u.tolist(), "v": v.tolist()})
            worst.see(max(0.0, projdist_coords(u, z) - duv - projdist_coords(v, z) - 1e-14),
                      lambda: {"u": u.tolist(), "v": v.tolist(), "z": z.tolist()})
            worst.see(abs(projdist_coords(3.7 * u, 0.2 * v) - duv), lambda: {"u": u.tolist(), "v": v.tolist()})

    def growth_bound(worst):
        for k in range(min(samples, 8)):
            om = base(k)
            bound = cocycle.growth_bound(om)
            u = rng.standard_normal(dim)
            nu = float(norm_coords(u, grid))
            for n in (1, m // 2, m):
                ratio = float(norm_coords(cocycle.propagate(om, u, n), grid)) / nu
                worst.see(max(0.0, ratio / bound - 1.0), lambda: {"omega": _angle(om), "t": n / m})

    bundle = FloquetBundle(cocycle, tol=tol, max_pullback=max_pullback)

    def pairing_range(worst):
        for k in range(3):
            om = base(k)
            w, _ = bundle.pullback_principal(om)
            ws, _ = bundle.pullback_dual(om)
            pr = pairing(w, ws, grid)
            worst.see(0.0 if 0.0 < pr <= 1.0 + 1e-12 else 1.0, lambda: {"omega": _angle(om), "pair": pr})

    def invariance(worst):
        w, _ = bundle.pullback_principal(omega)
        for t in (1, 2, 3):
            img = cocycle.propagate(omega, w.coords, t * m)
            w_t, _ = bundle.pullback_principal(base(t))
            worst.see(projdist_coords(img, w_t.coords) / (5.0 * tol), lambda: {"omega": _angle(omega), "t": t})

    def uu_identity(worst):
        orb = bundle.orbit(omega, 6, seed=seed, probes=4)
        worst.see(float(np.max(orb.uu_residual)), lambda: {"omega": _angle(omega), "horizon": 6})

    def projection(worst):
        w, _ = bundle.pullback_principal(omega)
        ws, _ = bundle.pullback_dual(omega)
        for _ in range(samples):
            u = StateVector.from_coords(rng.standard_normal(dim))
            pu = bundle.project(omega, u)
            ppu = bundle.project(omega, pu)
            scale = norm_x(u, grid)
            worst.see(norm_x(ppu - pu, grid) / scale, lambda: {"u": u.coords.tolist()})
            worst.see(abs(pairing(pu, ws, grid)) / scale, lambda: {"u": u.coords.tolist()})
        worst.see(norm_x(bundle.project(omega, w), grid), lambda: {"u": "w(omega)"})

    run("cocycle law", 1e-13, cocycle_law)
    run("unit matrix matches integrator", 1e-13, matvec)
    run("positivity of the unit propagator", 1e-14, positivity)
    run("kernel-or-interior dichotomy", 0.5, dichotomy)
    run("focusing sandwich", 1e-12, focusing)
    run("duality identity", 1e-12, duality)
    run("dual cocycle law", 1e-12, dual_law)
    run("dual focusing sandwich", 1e-12, dual_sandwich)
    run("Birkhoff contraction", 1e-12, contraction)
    run("projective distance norm bound", 1e-12, norm_bound)
    run("projective metric axioms", 1e-12, metric_axioms)
    run("unit-time growth bound", 1e-12, growth_bound)
    run("0 < <w, w*> <= 1", 0.5, pairing_range)
    run("invariance of w (scaled by 5 tol)", 1.0, invariance)
    run("UU* identity", 1e-10, uu_identity)
    run("projection idempotent and annihilates w", 1e-12, projection)
    return results


def battery_passed(results: list[OracleResult]) -> bool:
    return all(r.passed for r in results)


__all__ = [
    "FaultyCocycle", "OracleResult", "battery_passed", "benettin_exponents", "benettin_second",
    "characteristic_root", "run_identity_battery",
]
