"""Cost functions: supervised fidelity, graph smoothness, and their blend.

All costs divide by ``2**residual_count`` so that a network whose carried
trace was inflated by ``t`` shortcut additions is still scored on a 0-to-1
fidelity scale. The graph term sums over *ordered* vertex pairs weighted by
the adjacency matrix, so each undirected edge counts twice.

The blended objective ``c_sv + gamma * c_g`` is maximized during training;
``gamma`` must be non-positive (the graph term measures spread between
neighbors, which training should shrink).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qlinalg import DimensionError, OperatorState, PureState, fidelity_pure, hs_distance

__all__ = [
    "CostReport",
    "cost_full",
    "cost_graph",
    "cost_supervised",
    "cost_test",
]


def _mean_fidelity(
    outputs: Sequence[OperatorState], targets: Sequence[PureState], residual_count: int
) -> float:
    if len(outputs) != len(targets):
        raise DimensionError(
            f"{len(outputs)} outputs vs {len(targets)} targets"
        )
    if not outputs:
        return float("nan")
    total = sum(fidelity_pure(phi, rho) for phi, rho in zip(targets, outputs))
    return total / (2.0**residual_count * len(outputs))


def cost_supervised(
    outputs: Sequence[OperatorState], targets: Sequence[PureState], residual_count: int
) -> float:
    """Mean target overlap of the supervised vertices, rescaled to [0, 1]."""
    if not outputs:
        raise ValueError("supervised cost needs at least one output/target pair")
    return _mean_fidelity(outputs, targets, residual_count)


def cost_test(
    outputs: Sequence[OperatorState], targets: Sequence[PureState], residual_count: int
) -> float:
    """Mean target overlap of the held-out vertices (NaN if there are none)."""
    return _mean_fidelity(outputs, targets, residual_count)


def cost_graph(
    outputs: Sequence[OperatorState], adjacency: np.ndarray, residual_count: int
) -> float:
    """Adjacency-weighted Hilbert-Schmidt spread over ordered vertex pairs."""
    adj = np.asarray(adjacency, dtype=float)
    n = len(outputs)
    if adj.shape != (n, n):
        raise DimensionError(f"adjacency shape {adj.shape} does not match {n} outputs")
    if np.abs(adj - adj.T).max() > 1e-12:
        raise ValueError("adjacency matrix must be symmetric")
    total = 0.0
    for v in range(n):
        for w in range(n):
            if adj[v, w] != 0.0 and v != w:
                total += adj[v, w] * hs_distance(outputs[v], outputs[w])
    return float(total) / 2.0**residual_count


def cost_full(c_supervised: float, c_graph: float, gamma: float) -> float:
    """Blend ``c_supervised + gamma * c_graph``; requires ``gamma <= 0``."""
    if gamma > 0:
        raise ValueError(f"gamma must be non-positive, got {gamma}")
    return c_supervised + gamma * c_graph


@dataclass(frozen=True)
class CostReport:
    """One evaluation of all four costs at a fixed set of unitaries."""

    c_sv: float
    c_g: float
    c_full: float
    c_test: float

    def __post_init__(self) -> None:
        for name in ("c_sv", "c_g", "c_full", "c_test"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def as_dict(self) -> dict[str, float]:
        return {
            "c_sv": self.c_sv,
            "c_g": self.c_g,
            "c_full": self.c_full,
            "c_test": self.c_test,
        }
