"""Renormalization-group tools for the attractive inverse-square potential.

The package has three layers plus a CLI:

* ``flow``: closed-form and adaptive numerical evolution of the dimensionless
  counterterm coupling with the floating momentum cutoff, fixed-point
  analysis and regime classification (limit cycle / critical /
  two fixed points).
* ``spectral``: momentum-space discretization of the cutoff Hamiltonian in
  any partial wave, dense symmetric diagonalization, calibration of the
  counterterm to a physical eigenvalue, bound-state towers and cutoff
  independence checks.
* ``elimination``: exact Schur-complement removal of high-momentum shells on
  the discretized problem, the brute-force cross-check of the closed-form
  flow.

Hot kernels are numba-compiled; set ``INVSQRG_DISABLE_NUMBA=1`` to use the
pure-Python/numpy fallbacks.
"""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED
from .elimination import (
    EffectiveHamiltonian,
    EliminationError,
    GammaFit,
    ShellPartition,
    StaircaseResult,
    eliminate_shell,
    extract_gamma,
    staircase_flow,
    staircase_grid,
)
from .flow import (
    FlowIntegrationError,
    FlowParams,
    FlowState,
    PartialWave,
    PoleSignal,
    Regime,
    beta,
    classify,
    classify_with_tolerance,
    critical_alpha,
    f_from_gamma,
    fixed_point_locus,
    flow_analytic,
    flow_numeric,
    gamma_from_f,
    make_flow_params,
)
from .grids import MomentumGrid
from .spectral import (
    CalibrationError,
    CutoffIndependenceReport,
    FlowDivergedAtTarget,
    HamiltonianMatrix,
    KernelSpec,
    SpectralError,
    Spectrum,
    TowerError,
    TowerResult,
    bound_state_tower,
    build_hamiltonian,
    calibrate_f,
    counterterm_kernel,
    cutoff_independence_check,
    infrared_floor,
    potential_kernel,
    solve_spectrum,
)

__all__ = [
    "__version__",
    "NUMBA_ENABLED",
    # flow
    "PartialWave",
    "FlowParams",
    "FlowState",
    "Regime",
    "PoleSignal",
    "FlowIntegrationError",
    "critical_alpha",
    "make_flow_params",
    "beta",
    "classify",
    "classify_with_tolerance",
    "flow_analytic",
    "flow_numeric",
    "gamma_from_f",
    "f_from_gamma",
    "fixed_point_locus",
    # grids
    "MomentumGrid",
    # spectral
    "KernelSpec",
    "HamiltonianMatrix",
    "Spectrum",
    "SpectralError",
    "CalibrationError",
    "TowerError",
    "TowerResult",
    "CutoffIndependenceReport",
    "FlowDivergedAtTarget",
    "potential_kernel",
    "counterterm_kernel",
    "build_hamiltonian",
    "solve_spectrum",
    "calibrate_f",
    "bound_state_tower",
    "cutoff_independence_check",
    "infrared_floor",
    # elimination
    "ShellPartition",
    "EffectiveHamiltonian",
    "GammaFit",
    "EliminationError",
    "StaircaseResult",
    "eliminate_shell",
    "extract_gamma",
    "staircase_flow",
    "staircase_grid",
]
