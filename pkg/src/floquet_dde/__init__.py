"""Principal Floquet bundles and exponential separation for random delay equations.

The package discretizes ``z'(t) = a(theta_t w) z(t) + b(theta_t w) z(t - 1)``
over an ergodic driver and computes the pullback principal vector, its dual,
the top Lyapunov exponent, the projections onto the complementary family and
the separation rate.
"""
from .base_flow import GOLDEN_GAMMA, TelegraphDriver, TelegraphPoint, TorusDriver, TorusPoint
from .delay_cocycle import DelayCocycle, Focusing, TrajectoryRecord, sandwich_violation
from .dual_cocycle import DualCocycle, DualVector, dual_norm, e_star, pairing
from .floquet_bundle import BundleError, BundleReport, ContractionDiag, FloquetBundle, PullbackError
from .oracles import OracleResult, benettin_second, characteristic_root, run_identity_battery
from .state_space import GridSpec, StateVector, norm_x, projdist, unit_e

__version__ = "0.1.0"

__all__ = [
    "BundleError", "BundleReport", "ContractionDiag", "DelayCocycle", "DualCocycle", "DualVector",
    "FloquetBundle", "Focusing", "GOLDEN_GAMMA", "GridSpec", "OracleResult", "PullbackError",
    "StateVector", "TelegraphDriver", "TelegraphPoint", "TorusDriver", "TorusPoint",
    "TrajectoryRecord", "benettin_second", "characteristic_root", "dual_norm", "e_star",
    "norm_x", "pairing", "projdist", "run_identity_battery", "sandwich_violation", "unit_e",
]
