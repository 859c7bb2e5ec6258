"""Exact elimination of high-momentum shells by Schur complement.

Solving the eigenvalue problem restricted to momenta below a new cutoff
Lambda' amounts to replacing the Hamiltonian block structure

    [H_PP  H_PQ]                H_eff = H_PP + H_PQ (Eref - H_QQ)^(-1) H_QP
    [H_QP  H_QQ]

where Q collects the eliminated nodes above Lambda'.  At Eref equal to an
exact eigenvalue this is an identity (the eigenvalue survives exactly); at
Eref = 0 it reproduces the approximation behind the differential flow of the
counterterm, valid for eigenvalues far below the cutoff.  Because the
potential couples low to high momenta through a single product q^l / p^(l+1),
the induced correction is separable, of the very same (pq)^l form as the
counterterm; its strength gamma-hat, extracted shell after shell, is the
brute-force cross-check of the closed-form flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import PartialWave
from .grids import MomentumGrid
from .spectral import HamiltonianMatrix, KernelSpec, build_hamiltonian

__all__ = [
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

# Relative gap below which the shifted shell block is treated as singular.
_SINGULAR_RTOL = 1.0e-12
# ||residual||_F below this fraction of the matrix scale is quadrature noise.
_NOISE_RTOL = 1.0e-13


class EliminationError(RuntimeError):
    """The shifted shell block is singular (Eref hits a shell eigenvalue)."""


@dataclass(frozen=True)
class ShellPartition:
    """Split of grid indices at a new cutoff lambda_prime.

    ``low`` holds indices with node <= lambda_prime, ``high`` the eliminated
    shell above it.  An empty shell is allowed and makes the elimination the
    identity.
    """

    low: np.ndarray
    high: np.ndarray
    lambda_prime: float

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.intp)
        high = np.asarray(self.high, dtype=np.intp)
        merged = np.sort(np.concatenate([low, high]))
        if merged.size and not np.array_equal(
            merged, np.arange(merged[0], merged[0] + merged.size)
        ):
            raise ValueError("partition must cover a contiguous index range "
                             "exactly once")
        if np.intersect1d(low, high).size:
            raise ValueError("low and high index sets overlap")
        low.setflags(write=False)
        high.setflags(write=False)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "lambda_prime", float(self.lambda_prime))

    @classmethod
    def at_cutoff(cls, nodes, lambda_prime: float) -> "ShellPartition":
        """Partition grid nodes at lambda_prime (nodes above it form the shell)."""
        nodes = np.asarray(nodes, dtype=float)
        idx = np.arange(nodes.size)
        keep = nodes <= lambda_prime
        return cls(low=idx[keep], high=idx[~keep], lambda_prime=lambda_prime)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Result of eliminating a shell: matrix on the kept nodes.

    ``residual_separability`` is filled by ``extract_gamma`` (or by the
    staircase); None means it has not been measured yet.
    """

    matrix: np.ndarray
    reference_energy: float
    nodes: np.ndarray
    weights: np.ndarray
    lambda_prime: float
    alpha: float
    wave: PartialWave
    residual_separability: float | None = None

    def __post_init__(self):
        for name in ("matrix", "nodes", "weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _schur_low_block(matrix, low, high, eref):
    """H_PP + H_PQ (eref - H_QQ)^(-1) H_QP, symmetrized against roundoff."""
    if high.size == 0:
        return np.array(matrix, dtype=float)
    hpp = matrix[np.ix_(low, low)]
    hpq = matrix[np.ix_(low, high)]
    hqq = matrix[np.ix_(high, high)]
    shell_evs = np.linalg.eigvalsh(hqq)
    scale = max(float(np.max(np.abs(shell_evs))), abs(eref), 1.0)
    gap = float(np.min(np.abs(shell_evs - eref)))
    if gap <= _SINGULAR_RTOL * scale:
        offender = float(shell_evs[np.argmin(np.abs(shell_evs - eref))])
        raise EliminationError(
            f"reference energy {eref!r} coincides with shell eigenvalue "
            f"{offender!r} (gap {gap:.3e}); shift Eref away from the shell "
            "spectrum"
        )
    shifted = eref * np.eye(high.size) - hqq
    x = np.linalg.solve(shifted, hpq.T)
    heff = hpp + hpq @ x
    return 0.5 * (heff + heff.T)


def eliminate_shell(
    ham: HamiltonianMatrix | EffectiveHamiltonian,
    partition: ShellPartition,
    eref: float = 0.0,
) -> EffectiveHamiltonian:
    """Eliminate the shell nodes of ``partition`` at reference energy ``eref``.

    At eref equal to an exact eigenvalue of the full matrix the eigenvalue is
    preserved exactly (decoupling identity); at eref = 0 the result is the
    effective Hamiltonian whose far-below-cutoff spectrum matches the full
    one up to O(|E2m| / lambda_prime^2).
    """
    if isinstance(ham, HamiltonianMatrix):
        nodes = ham.grid.nodes
        weights = ham.grid.weights
        alpha = ham.spec.alpha
        wave = ham.spec.wave
    else:
        nodes = ham.nodes
        weights = ham.weights
        alpha = ham.alpha
        wave = ham.wave
    if partition.low.size + partition.high.size != nodes.size:
        raise ValueError("partition does not cover the grid")
    heff = _schur_low_block(ham.matrix, partition.low, partition.high, float(eref))
    return EffectiveHamiltonian(
        matrix=heff,
        reference_energy=float(eref),
        nodes=nodes[partition.low],
        weights=weights[partition.low],
        lambda_prime=partition.lambda_prime,
        alpha=float(alpha),
        wave=wave,
    )


@dataclass(frozen=True)
class GammaFit:
    """Least-squares fit of the induced correction to the separable form."""

    gamma_hat: float
    residual_separability: float
    below_noise: bool


def extract_gamma(heff: EffectiveHamiltonian, base: HamiltonianMatrix) -> GammaFit:
    """Fit (H_eff - H_base) to gamma-hat (pq)^l on the kept nodes.

    ``base`` must be the Hamiltonian with the same alpha and wave but f = 0,
    built on a grid containing the kept nodes; its matching sub-block is the
    reference.  The fit is Frobenius least squares over the full symmetrized
    low block, which weights each matrix cell by its quadrature measure and
    so is not dominated by the low-momentum corner where (pq)^l vanishes.
    Returns gamma-hat and the relative residual after removing the separable
    part; gamma-hat = 0 with a flag when the correction is below the
    numerical noise floor.
    """
    if base.spec.f != 0.0:
        raise ValueError("base Hamiltonian must have f = 0")
    if base.spec.alpha != heff.alpha or base.spec.wave != heff.wave:
        raise ValueError("base and effective Hamiltonian disagree on (alpha, l)")
    idx = np.searchsorted(base.grid.nodes, heff.nodes)
    if (
        np.any(idx >= base.grid.nodes.size)
        or not np.array_equal(base.grid.nodes[idx], heff.nodes)
        or not np.array_equal(base.grid.weights[idx], heff.weights)
    ):
        raise ValueError("kept nodes are not a sub-grid of the base grid")
    residual = heff.matrix - base.matrix[np.ix_(idx, idx)]
    l = heff.wave.l
    profile = np.sqrt(heff.weights) * heff.nodes ** (l + 1)
    gram = np.multiply.outer(profile, profile)
    norm_r = float(np.linalg.norm(residual))
    scale = float(np.linalg.norm(heff.matrix)) + float(
        np.linalg.norm(base.matrix[np.ix_(idx, idx)])
    )
    if norm_r <= _NOISE_RTOL * scale:
        return GammaFit(gamma_hat=0.0, residual_separability=0.0, below_noise=True)
    gamma_hat = float(np.vdot(gram, residual) / np.vdot(gram, gram))
    rest = residual - gamma_hat * gram
    return GammaFit(
        gamma_hat=gamma_hat,
        residual_separability=float(np.linalg.norm(rest)) / norm_r,
        below_noise=False,
    )


@dataclass(frozen=True)
class StaircaseResult:
    """Coupling trajectory from repeated shell elimination.

    Arrays are aligned: after eliminating everything above ``cutoffs[k]`` the
    fitted coupling is ``gamma_hat[k]`` (dimensionless: ``f_hat[k]``), with
    separability residual ``residual_separability[k]``.  Empty when no shells
    were eliminated.
    """

    cutoffs: np.ndarray
    gamma_hat: np.ndarray
    f_hat: np.ndarray
    residual_separability: np.ndarray
    reference_energy: float

    def __post_init__(self):
        for name in ("cutoffs", "gamma_hat", "f_hat", "residual_separability"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.cutoffs.size


def staircase_flow(
    ham: HamiltonianMatrix,
    shell_cutoffs,
    *,
    eref: float = 0.0,
) -> StaircaseResult:
    """Eliminate shells down the descending ``shell_cutoffs``, fitting
    gamma-hat after each step.

    The starting Hamiltonian carries the coupling at the top cutoff; each
    step removes the nodes between consecutive cutoffs and refits.  Shell
    widths should stay small against the cutoff (<= 1e-2 relative is a good
    choice) for the trajectory to resolve the flow it is checking.
    """
    cuts = [float(c) for c in shell_cutoffs]
    if any(b >= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("shell cutoffs must be strictly descending")
    if cuts and cuts[0] >= ham.grid.cutoff:
        raise ValueError("first shell cutoff must lie below the grid cutoff")
    base = build_hamiltonian(
        ham.grid, KernelSpec(alpha=ham.spec.alpha, wave=ham.spec.wave, f=0.0)
    )
    current: HamiltonianMatrix | EffectiveHamiltonian = ham
    gammas = []
    fs = []
    residuals = []
    two_l_plus_1 = 2 * ham.spec.wave.l + 1
    for lam_next in cuts:
        nodes = current.grid.nodes if isinstance(current, HamiltonianMatrix) else current.nodes
        part = ShellPartition.at_cutoff(nodes, lam_next)
        current = eliminate_shell(current, part, eref=eref)
        fit = extract_gamma(current, base)
        current = EffectiveHamiltonian(
            matrix=current.matrix,
            reference_energy=current.reference_energy,
            nodes=current.nodes,
            weights=current.weights,
            lambda_prime=current.lambda_prime,
            alpha=current.alpha,
            wave=current.wave,
            residual_separability=fit.residual_separability,
        )
        gammas.append(fit.gamma_hat)
        fs.append(fit.gamma_hat * lam_next**two_l_plus_1)
        residuals.append(fit.residual_separability)
    return StaircaseResult(
        cutoffs=np.array(cuts),
        gamma_hat=np.array(gammas),
        f_hat=np.array(fs),
        residual_separability=np.array(residuals),
        reference_energy=float(eref),
    )


def staircase_grid(
    lambda0: float,
    lambda_end: float,
    n_shells: int,
    *,
    nodes_per_shell: int = 4,
    n_low: int = 200,
) -> tuple[MomentumGrid, np.ndarray]:
    """Composite grid whose panels line up with elimination shells.

    The region (lambda_end, lambda0) is covered by ``n_shells`` equal panels
    of ``nodes_per_shell`` Gauss-Legendre nodes each, and (0, lambda_end) by
    a single ``n_low``-node panel.  Returns the grid together with the
    descending shell cutoffs; because every shell boundary is a panel edge,
    shells are unions of whole quadrature nodes and each new cutoff falls
    between nodes.
    """
    if not (0.0 < lambda_end < lambda0):
        raise ValueError("need 0 < lambda_end < lambda0")
    if n_shells < 1:
        raise ValueError("need at least one shell")
    edges_up = np.linspace(lambda_end, lambda0, n_shells + 1)
    grid = MomentumGrid.composite(
        np.concatenate([[0.0], edges_up]),
        [n_low] + [nodes_per_shell] * n_shells,
    )
    return grid, edges_up[:-1][::-1]
