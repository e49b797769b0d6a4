"""The discrete operator set and its convex hull.

Beyond the canonical per-view operators, the set can be enriched with the
identity (idle steps), PageRank-style teleport mixes and per-view smoothing
powers. The pure uniform operator is never a standalone member: using it as
a trajectory step collapses the product to rank one, so it is only available
as a PageRank mixer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from mvdt.kernels import TransitionMatrix, _frozen_array

SIMPLEX_ATOL = 1e-12

DEFAULT_PAGERANK_ALPHA = 0.85
DEFAULT_SMOOTHING_POWER = 2


@dataclass(frozen=True)
class OperatorSet:
    """Ordered operators with per-operator descriptor tags."""

    operators: tuple
    tags: tuple

    def __post_init__(self):
        ops = tuple(self.operators)
        tags = tuple(self.tags)
        if not ops:
            raise ValueError("operator set must be non-empty")
        if len(tags) != len(ops):
            raise ValueError("one tag per operator required")
        n = ops[0].n
        if any(op.n != n for op in ops):
            raise ValueError("all operators must share the same size")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def n(self) -> int:
        return self.operators[0].n

    def matrices(self) -> list:
        return [op.values for op in self.operators]


@dataclass(frozen=True)
class SimplexWeights:
    """Nonnegative weights summing to one over the members of a set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > SIMPLEX_ATOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "weights", _frozen_array(w))

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SimplexWeights)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(tuple(self.weights))


@dataclass(frozen=True)
class SetConfig:
    """Which optional operators to add on top of the canonical ones."""

    include_identity: bool = False
    pagerank_alpha: Optional[float] = None
    smoothing_power: Optional[int] = None

    @classmethod
    def from_json(cls, text: str) -> "SetConfig":
        raw = json.loads(text)
        return cls(
            include_identity=bool(raw.get("include_identity", False)),
            pagerank_alpha=raw.get("pagerank_alpha"),
            smoothing_power=raw.get("smoothing_power"),
        )


def identity_operator(n: int) -> TransitionMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    return TransitionMatrix(values=np.eye(n))


def uniform_operator(n: int) -> np.ndarray:
    """Rank-one uniform matrix; returned raw as it is not a set member."""
    if n < 1:
        raise ValueError("n must be positive")
    return np.full((n, n), 1.0 / n)


def pagerank_operator(
    p: TransitionMatrix,
    alpha: float,
    mixer: Optional[Union[np.ndarray, TransitionMatrix]] = None,
) -> TransitionMatrix:
    """alpha * P + (1 - alpha) * mixer with a row-stochastic mixer."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if mixer is None:
        mixer_values = uniform_operator(p.n)
    else:
        mixer_values = mixer.values if isinstance(mixer, TransitionMatrix) else np.asarray(mixer, dtype=float)
    if np.max(np.abs(mixer_values.sum(axis=1) - 1.0)) > SIMPLEX_ATOL:
        raise ValueError("mixer must be row-stochastic")
    return TransitionMatrix(values=alpha * p.values + (1.0 - alpha) * mixer_values)


def smoothing_operator(p: TransitionMatrix, t_prime: int) -> TransitionMatrix:
    """P^{t'} by repeated multiplication."""
    if t_prime < 1:
        raise ValueError("t_prime must be >= 1")
    return TransitionMatrix(values=np.linalg.matrix_power(p.values, t_prime))


def convex_combine(operator_set: OperatorSet, w: SimplexWeights) -> TransitionMatrix:
    if len(w) != len(operator_set):
        raise ValueError(
            f"weight dimension {len(w)} does not match set size {len(operator_set)}"
        )
    stacked = np.stack(operator_set.matrices())
    values = np.tensordot(w.weights, stacked, axes=1)
    return TransitionMatrix(values=values)


def enrich_set(
    canonical: Sequence[TransitionMatrix],
    config: Optional[SetConfig] = None,
) -> OperatorSet:
    """Canonical operators plus the extras selected by config.

    Order: views, then identity, then per-view PageRank, then per-view
    smoothing powers.
    """
    canonical = list(canonical)
    if not canonical:
        raise ValueError("canonical set must be non-empty")
    config = config or SetConfig()
    operators = list(canonical)
    tags = [f"view:{v}" for v in range(len(canonical))]
    n = canonical[0].n
    if config.include_identity:
        operators.append(identity_operator(n))
        tags.append("identity")
    if config.pagerank_alpha is not None:
        alpha = float(config.pagerank_alpha)
        for v, p in enumerate(canonical):
            operators.append(pagerank_operator(p, alpha))
            tags.append(f"pagerank:{v}:alpha={alpha}")
    if config.smoothing_power is not None:
        t_prime = int(config.smoothing_power)
        for v, p in enumerate(canonical):
            operators.append(smoothing_operator(p, t_prime))
            tags.append(f"smoothed:{v}:t={t_prime}")
    return OperatorSet(operators=tuple(operators), tags=tuple(tags))
