"""Quadrature grids on (0, Lambda) for the momentum-space eigenproblem.

Gauss-Legendre nodes mapped to (0, Lambda) are the default; composite
variants place panels so that either the infrared region is refined (bound
states far below the cutoff live at small momenta) or panel edges line up
with elimination shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["MomentumGrid"]


def _legendre_rule(lo: float, hi: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class MomentumGrid:
    """Nodes and weights integrating int_0^cutoff dq.

    Nodes are strictly increasing and strictly inside (0, cutoff); weights
    are positive and sum to the cutoff (Gauss-type rules integrate constants
    exactly).
    """

    cutoff: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if not (self.cutoff > 0.0) or not math.isfinite(self.cutoff):
            raise ValueError(f"cutoff must be positive and finite, got {self.cutoff}")
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or weights.shape != nodes.shape or nodes.size == 0:
            raise ValueError("nodes and weights must be equal-length 1-d arrays")
        if not (np.all(np.diff(nodes) > 0.0)):
            raise ValueError("nodes must be strictly increasing")
        if nodes[0] <= 0.0 or nodes[-1] >= self.cutoff:
            raise ValueError("nodes must lie strictly inside (0, cutoff)")
        if not np.all(weights > 0.0):
            raise ValueError("weights must all be positive")
        total = float(weights.sum())
        if abs(total - self.cutoff) > 1.0e-12 * self.cutoff:
            raise ValueError(
                f"weights sum to {total!r}, expected cutoff {self.cutoff!r}"
            )
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "cutoff", float(self.cutoff))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.nodes.size

    @classmethod
    def gauss_legendre(cls, cutoff: float, n: int) -> "MomentumGrid":
        """Single Gauss-Legendre panel on (0, cutoff)."""
        if n < 1:
            raise ValueError("need at least one node")
        q, w = _legendre_rule(0.0, float(cutoff), int(n))
        return cls(cutoff=float(cutoff), nodes=q, weights=w)

    @classmethod
    def composite(cls, edges, counts) -> "MomentumGrid":
        """Gauss-Legendre panels between consecutive ``edges``.

        ``edges`` must start at 0, be strictly increasing, and end at the
        cutoff; ``counts[i]`` nodes are placed on panel i.
        """
        edges = np.asarray(edges, dtype=float)
        counts = [int(c) for c in counts]
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least two panel edges")
        if edges[0] != 0.0:
            raise ValueError("first edge must be 0")
        if not np.all(np.diff(edges) > 0.0):
            raise ValueError("edges must be strictly increasing")
        if len(counts) != edges.size - 1:
            raise ValueError("need one node count per panel")
        if any(c < 1 for c in counts):
            raise ValueError("every panel needs at least one node")
        qs = []
        ws = []
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            q, w = _legendre_rule(float(lo), float(hi), c)
            qs.append(q)
            ws.append(w)
        return cls(
            cutoff=float(edges[-1]),
            nodes=np.concatenate(qs),
            weights=np.concatenate(ws),
        )

    @classmethod
    def two_panel(cls, cutoff: float, n: int, split: float) -> "MomentumGrid":
        """Two panels (0, split) and (split, cutoff), n nodes in total.

        Refines the infrared: used when profiling towers of bound states
        whose momenta sit orders of magnitude below the cutoff.
        """
        if not (0.0 < split < cutoff):
            raise ValueError(f"split must lie in (0, cutoff), got {split}")
        if n < 2:
            raise ValueError("need at least two nodes for two panels")
        n_lo = n // 2
        return cls.composite([0.0, float(split), float(cutoff)], [n_lo, n - n_lo])
