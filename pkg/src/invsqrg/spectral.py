"""Cutoff Hamiltonians on a quadrature grid and their bound-state spectra.

The partial-wave eigenproblem (units 2m = 1, so eigenvalues are 2mE and the
coupling is alpha = 2mg)

    p^2 psi(p) + int_0^Lambda dq q^2 [V_l(p,q) + gamma (pq)^l] psi(q)
        = E2m psi(p)

is discretized on quadrature nodes; the substitution phi_i = sqrt(w_i) q_i
psi_i makes the matrix symmetric, so a dense symmetric eigensolver applies.
Calibrating the counterterm strength f = gamma Lambda^(2l+1) so that one
chosen eigenvalue takes a prescribed value fixes the entire tower of bound
states in that wave; in the limit-cycle regime the tower is geometric with
quotient exp(-2 pi / sqrt(alpha - L^2)).

Everything here is immutable after construction and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _spectral_kernels
from .flow import PartialWave, PoleSignal, flow_analytic, make_flow_params
from .grids import MomentumGrid

__all__ = [
    "KernelSpec",
    "HamiltonianMatrix",
    "Spectrum",
    "SpectralError",
    "CalibrationError",
    "TowerError",
    "TowerResult",
    "CutoffIndependenceReport",
    "potential_kernel",
    "counterterm_kernel",
    "build_hamiltonian",
    "solve_spectrum",
    "calibrate_f",
    "bound_state_tower",
    "cutoff_independence_check",
    "infrared_floor",
]

# Default infrared guard: states needing structure below the k-th smallest
# node are grid-limited and excluded from validity bands.
IR_GUARD_NODES = 4
# Default split of the infrared refinement panel, as a fraction of the cutoff.
TOWER_SPLIT_FRACTION = 1.0 / 200.0


class SpectralError(RuntimeError):
    """Dense eigensolver failure, with matrix diagnostics attached."""


class CalibrationError(RuntimeError):
    """No counterterm strength in the scanned range meets the target."""


class TowerError(RuntimeError):
    """Too few resolvable bound states to profile a geometric tower."""


def potential_kernel(p, q, alpha, wave: PartialWave):
    """Attractive inverse-square potential in momentum space.

    Equals -alpha/(2l+1) min(p,q)^l / max(p,q)^(l+1); symmetric in (p, q) and
    continuous across p = q.  Accepts scalars or broadcastable arrays.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p <= 0.0) or np.any(q <= 0.0):
        raise ValueError("momenta must be positive")
    l = wave.l
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    out = (-alpha / (2.0 * l + 1.0)) * lo**l / hi ** (l + 1)
    if out.ndim == 0:
        return float(out)
    return out


def counterterm_kernel(p, q, f, cutoff, wave: PartialWave):
    """Separable counterterm gamma (pq)^l with gamma = f / cutoff^(2l+1)."""
    if not (cutoff > 0.0) or not math.isfinite(cutoff):
        raise ValueError(f"cutoff must be positive and finite, got {cutoff}")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    l = wave.l
    gamma = f / cutoff ** (2 * l + 1)
    out = gamma * (p * q) ** l
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Interaction content of a cutoff Hamiltonian.

    ``cutoff`` may be left None, in which case the grid's cutoff is used to
    convert f into the dimensionful separable strength.
    """

    alpha: float
    wave: PartialWave
    f: float
    cutoff: float | None = None

    def __post_init__(self):
        if not (self.alpha >= 0.0) or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be >= 0 and finite, got {self.alpha}")
        if not math.isfinite(self.f):
            raise ValueError(f"f must be finite, got {self.f}")
        if self.cutoff is not None and not (self.cutoff > 0.0):
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Symmetrized discretization of a cutoff Hamiltonian on a grid."""

    grid: MomentumGrid
    spec: KernelSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_hamiltonian(grid: MomentumGrid, spec: KernelSpec) -> HamiltonianMatrix:
    """Assemble the symmetric matrix for the given grid and interaction."""
    if spec.cutoff is not None and not math.isclose(
        spec.cutoff, grid.cutoff, rel_tol=1.0e-12, abs_tol=0.0
    ):
        raise ValueError(
            f"kernel cutoff {spec.cutoff} does not match grid cutoff {grid.cutoff}"
        )
    lam = grid.cutoff
    gamma = spec.f / lam ** (2 * spec.wave.l + 1)
    m = _spectral_kernels.assemble(
        grid.nodes, grid.weights, float(spec.alpha), spec.wave.l, float(gamma)
    )
    return HamiltonianMatrix(grid=grid, spec=spec, matrix=m)


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a cutoff Hamiltonian; eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: MomentumGrid

    def __post_init__(self):
        for name in ("eigenvalues", "eigenvectors"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def bound_states(self) -> np.ndarray:
        """Negative eigenvalues, ascending (deepest first)."""
        return self.eigenvalues[self.eigenvalues < 0.0]

    def radial_wavefunctions(self) -> np.ndarray:
        """Unwind the symmetrization: psi_i = phi_i / (sqrt(w_i) q_i)."""
        scale = np.sqrt(self.grid.weights) * self.grid.nodes
        return self.eigenvectors / scale[:, None]


def solve_spectrum(ham: HamiltonianMatrix) -> Spectrum:
    """Full symmetric eigendecomposition with ascending eigenvalues."""
    m = ham.matrix
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
        raise SpectralError(
            f"eigensolver failed on {m.shape[0]}x{m.shape[1]} matrix "
            f"(norm {np.linalg.norm(m):.3e}, max|M-M^T| {asym:.3e}): {exc}"
        ) from exc
    return Spectrum(eigenvalues=vals, eigenvectors=vecs, grid=ham.grid)


def infrared_floor(grid: MomentumGrid, guard_nodes: int = IR_GUARD_NODES) -> float:
    """Smallest |eigenvalue| the grid can resolve, (pi q_k)^2 at the k-th node.

    Bound states with |E2m| below this need wavefunction structure at momenta
    the grid does not sample.
    """
    k = min(max(int(guard_nodes), 1), grid.n) - 1
    return (math.pi * float(grid.nodes[k])) ** 2


def _eigenvalues_for_f(grid: MomentumGrid, alpha, wave, f) -> np.ndarray:
    ham = build_hamiltonian(grid, KernelSpec(alpha=alpha, wave=wave, f=f))
    return np.linalg.eigvalsh(ham.matrix)


def calibrate_f(
    grid: MomentumGrid,
    alpha: float,
    wave: PartialWave,
    target: float,
    *,
    index: int | None = 0,
    f_max: float = 64.0,
    rtol: float = 1.0e-8,
    target_guard: float = 100.0,
) -> float:
    """Counterterm strength f0 placing an eigenvalue at ``target``.

    ``index`` selects which eigenvalue (ascending, 0 = lowest) is driven to
    the target; ``index=None`` picks automatically the eigenvalue whose
    interlacing cell contains the target, which is the right choice when
    pinning one rung of a limit-cycle tower.  Eigenvalues are nondecreasing
    in f (the separable term is a rank-one perturbation with definite sign),
    so the root is found by bracketing plus Brent's bisection/secant.
    """
    if not (target < 0.0):
        raise ValueError(f"target eigenvalue must be negative, got {target}")
    lam2 = grid.cutoff * grid.cutoff
    if abs(target) > lam2 / target_guard:
        raise ValueError(
            f"|target| = {abs(target):.3e} is not well below the cutoff "
            f"(limit {lam2 / target_guard:.3e}); physical eigenvalues must "
            "satisfy |E2m| << Lambda^2"
        )

    scan = [0.0]
    step = 0.25
    while step <= f_max:
        scan.append(step)
        step *= 2.0
    scan_pos = [s for s in scan if s <= f_max]

    cache: dict[float, np.ndarray] = {}

    def evs(f: float) -> np.ndarray:
        if f not in cache:
            cache[f] = _eigenvalues_for_f(grid, alpha, wave, f)
        return cache[f]

    def bracket_and_solve(idx: int, direction: int):
        """Walk f away from 0 in ``direction`` until lambda_idx crosses target."""
        prev = 0.0
        g_prev = float(evs(0.0)[idx]) - target
        if g_prev == 0.0:
            return 0.0
        for s in scan_pos[1:]:
            f_try = direction * s
            g_try = float(evs(f_try)[idx]) - target
            if g_try == 0.0:
                return f_try
            if (g_try > 0.0) != (g_prev > 0.0):
                lo, hi = (prev, f_try) if prev < f_try else (f_try, prev)
                root = brentq(
                    lambda f: float(_eigenvalues_for_f(grid, alpha, wave, f)[idx])
                    - target,
                    lo,
                    hi,
                    xtol=1.0e-14,
                    rtol=8.9e-16,
                    maxiter=200,
                )
                return float(root)
            prev, g_prev = f_try, g_try
        return None

    spectrum0 = evs(0.0)
    n = spectrum0.size
    if index is not None:
        idx = int(index)
        if not (0 <= idx < n):
            raise ValueError(f"eigenvalue index {idx} out of range for n={n}")
        g0 = float(spectrum0[idx]) - target
        root = bracket_and_solve(idx, -1 if g0 > 0.0 else +1)
        candidates = [(idx, root)]
    else:
        m = int(np.count_nonzero(spectrum0 < target))
        candidates = []
        if m < n:
            candidates.append((m, bracket_and_solve(m, -1)))
        if m > 0 and (not candidates or candidates[-1][1] is None):
            candidates.append((m - 1, bracket_and_solve(m - 1, +1)))
        if not candidates:
            candidates = [(0, None)]

    for idx, root in candidates:
        if root is None:
            continue
        achieved = float(_eigenvalues_for_f(grid, alpha, wave, root)[idx])
        if abs(achieved - target) <= rtol * abs(target):
            return root
    scanned = np.concatenate([cache[f] for f in sorted(cache)])
    raise CalibrationError(
        f"no f in [-{f_max}, {f_max}] puts an eigenvalue at {target:.6e}; "
        f"scanned eigenvalues covered [{scanned.min():.6e}, {scanned.max():.6e}]"
    )


@dataclass(frozen=True)
class TowerResult:
    """Bound states in the validity band, deepest first, with ratios."""

    energies: np.ndarray  # negative, sorted by |E2m| descending
    ratios: np.ndarray  # ratios[k] = energies[k+1] / energies[k]
    band_deep: float  # |E2m| above this is cutoff-contaminated
    band_shallow: float  # |E2m| below this is below the infrared floor
    expected_quotient: float
    all_bound: np.ndarray  # every negative eigenvalue, for diagnostics
    f0: float
    lambda0: float

    def __post_init__(self):
        for name in ("energies", "ratios", "all_bound"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def bound_state_tower(
    alpha: float,
    wave: PartialWave,
    f0: float,
    lambda0: float,
    *,
    n: int = 400,
    split: float | None = None,
    grid: MomentumGrid | None = None,
    cutoff_guard: float = 100.0,
    ir_guard_nodes: int = IR_GUARD_NODES,
) -> TowerResult:
    """Geometric tower of bound states in the limit-cycle regime.

    Valid only for alpha > L^2 (b2 > 0).  States within a guard band of the
    cutoff (|E2m| > Lambda^2 / cutoff_guard) and below the infrared floor of
    the grid are excluded; both band edges are reported.  The grid defaults
    to a two-panel rule refined at small momenta, where the shallow rungs of
    the tower live.
    """
    params = make_flow_params(alpha, wave.l)
    if params.b2 <= 0.0:
        raise ValueError(
            f"no tower regime: alpha={alpha} is not above the critical "
            f"coupling {params.wave.l_plus_half ** 2} for l={wave.l}"
        )
    if grid is None:
        grid = MomentumGrid.two_panel(
            lambda0, n, split if split is not None else TOWER_SPLIT_FRACTION * lambda0
        )
    elif not math.isclose(grid.cutoff, lambda0, rel_tol=1.0e-12):
        raise ValueError("grid cutoff must equal lambda0")

    ham = build_hamiltonian(grid, KernelSpec(alpha=alpha, wave=wave, f=f0))
    vals = np.linalg.eigvalsh(ham.matrix)
    bound = vals[vals < 0.0]
    by_depth = bound[np.argsort(-np.abs(bound))]

    band_deep = lambda0 * lambda0 / cutoff_guard
    band_shallow = infrared_floor(grid, ir_guard_nodes)
    in_band = by_depth[
        (np.abs(by_depth) <= band_deep) & (np.abs(by_depth) >= band_shallow)
    ]
    if in_band.size < 3:
        raise TowerError(
            f"only {in_band.size} bound state(s) inside the validity band "
            f"[{band_shallow:.3e}, {band_deep:.3e}]; increase the grid size "
            "or the cutoff range to resolve more of the tower"
        )
    ratios = in_band[1:] / in_band[:-1]
    b = math.sqrt(params.b2)
    return TowerResult(
        energies=in_band,
        ratios=ratios,
        band_deep=band_deep,
        band_shallow=band_shallow,
        expected_quotient=math.exp(-2.0 * math.pi / b),
        all_bound=by_depth,
        f0=f0,
        lambda0=lambda0,
    )


@dataclass(frozen=True)
class CutoffIndependenceReport:
    """Comparison of bound states well below two different cutoffs."""

    lambda0: float
    lambda1: float
    f0: float
    f1: float
    window: float  # |E2m| <= window was compared
    floor: float  # common infrared floor
    pairs: np.ndarray  # (n, 2) matched eigenvalues
    rel_dev: np.ndarray
    max_rel_dev: float
    tol: float
    passed: bool

    def __post_init__(self):
        for name in ("pairs", "rel_dev"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def cutoff_independence_check(
    alpha: float,
    wave: PartialWave,
    f0: float,
    lambda0: float,
    lambda1: float,
    *,
    window_scale: float = 0.01,
    tol: float = 0.01,
    n: int = 400,
    split_fraction: float = TOWER_SPLIT_FRACTION,
    ir_guard_nodes: int = IR_GUARD_NODES,
) -> CutoffIndependenceReport:
    """Verify that eigenvalues far below both cutoffs do not move.

    Evolves f from (lambda0, f0) to lambda1 along the flow (continuing
    through a coupling divergence if the span contains one, as happens once
    per limit cycle), assembles both Hamiltonians, and compares matched bound
    states with |E2m| <= window_scale * lambda1^2.  A PoleSignal is
    propagated only if lambda1 itself lands on a divergence.
    """
    if not (lambda1 <= lambda0):
        raise ValueError("expected lambda1 <= lambda0")
    if window_scale > 0.01:
        raise ValueError("window_scale must be <= 0.01 (window must sit well "
                         "below the smaller cutoff)")

    params = make_flow_params(alpha, wave.l)
    if lambda1 == lambda0:
        f1 = f0
    else:
        f1 = flow_analytic(params, f0, lambda0, lambda1, through_poles=True)
        if isinstance(f1, PoleSignal):
            raise FlowDivergedAtTarget(f1)

    grids = []
    for lam in (lambda0, lambda1):
        grids.append(MomentumGrid.two_panel(lam, n, split_fraction * lam))
    g0, g1 = grids
    ev0 = np.linalg.eigvalsh(
        build_hamiltonian(g0, KernelSpec(alpha=alpha, wave=wave, f=f0)).matrix
    )
    ev1 = np.linalg.eigvalsh(
        build_hamiltonian(g1, KernelSpec(alpha=alpha, wave=wave, f=f1)).matrix
    )
    window = window_scale * lambda1 * lambda1
    floor = max(
        infrared_floor(g0, ir_guard_nodes), infrared_floor(g1, ir_guard_nodes)
    )

    def in_window(ev):
        sel = ev[(ev < 0.0) & (np.abs(ev) <= window) & (np.abs(ev) >= floor)]
        return sel[np.argsort(-np.abs(sel))]

    w0 = in_window(ev0)
    w1 = in_window(ev1)
    k = min(w0.size, w1.size)
    pairs = np.column_stack([w0[:k], w1[:k]])
    if k:
        rel = np.abs(pairs[:, 1] - pairs[:, 0]) / np.max(np.abs(pairs), axis=1)
        max_rel = float(rel.max())
    else:
        rel = np.empty(0)
        max_rel = 0.0
    return CutoffIndependenceReport(
        lambda0=lambda0,
        lambda1=lambda1,
        f0=f0,
        f1=float(f1),
        window=window,
        floor=floor,
        pairs=pairs,
        rel_dev=rel,
        max_rel_dev=max_rel,
        tol=tol,
        passed=bool(max_rel <= tol),
    )


class FlowDivergedAtTarget(RuntimeError):
    """The requested cutoff lands on a divergence of the coupling."""

    def __init__(self, signal):
        super().__init__(
            f"coupling diverges at ln(Lambda/Lambda0) in "
            f"[{signal.t_lo:.9f}, {signal.t_hi:.9f}]"
        )
        self.signal = signal
