"""Trajectory composition, stationary distributions and diffusion embeddings.

A trajectory is an ordered sequence of operator choices: discrete indices
into an operator set, or one simplex weight vector per step for the convex
hull. The composed operator is the left-product (step 0 applied first), its
stationary distribution weights the trajectory-dependent diffusion distance,
and the embedding comes from the SVD of the conjugated matrix
A = diag(pi)^{1/2} W diag(pi)^{-1/2}, which preserves that distance exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from mvdt.kernels import TransitionMatrix, _frozen_array
from mvdt.operator_space import OperatorSet, SimplexWeights, convex_combine

STATIONARY_ATOL = 1e-12
MDT_ROW_SUM_ATOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    """Ordered operator choices, all discrete (indices) or all convex
    (simplex weight vectors); step 0 is applied first."""

    kind: str
    steps: tuple

    def __post_init__(self):
        if self.kind not in ("discrete", "convex"):
            raise ValueError("kind must be 'discrete' or 'convex'")
        if not self.steps:
            raise ValueError("trajectory must have at least one step")
        if self.kind == "discrete":
            steps = tuple(int(s) for s in self.steps)
            if any(s < 0 for s in steps):
                raise ValueError("negative operator index")
        else:
            steps = tuple(
                s if isinstance(s, SimplexWeights) else SimplexWeights(np.asarray(s, dtype=float))
                for s in self.steps
            )
            if len({len(s) for s in steps}) != 1:
                raise ValueError("all steps must have the same weight dimension")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    @classmethod
    def discrete(cls, steps: Sequence[int]) -> "Trajectory":
        return cls(kind="discrete", steps=tuple(steps))

    @classmethod
    def convex(cls, steps) -> "Trajectory":
        return cls(kind="convex", steps=tuple(steps))

    def to_json(self) -> str:
        if self.kind == "discrete":
            payload = {"kind": "discrete", "steps": list(self.steps)}
        else:
            payload = {"kind": "convex",
                       "steps": [s.weights.tolist() for s in self.steps]}
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        raw = json.loads(text)
        return cls(kind=raw["kind"], steps=tuple(raw["steps"]))

    def key(self) -> tuple:
        """Hashable form, used for objective caching."""
        if self.kind == "discrete":
            return ("discrete", self.steps)
        return ("convex", tuple(tuple(s.weights) for s in self.steps))


@dataclass(frozen=True)
class MDTOperator:
    """Composed trajectory operator with its stationary distribution."""

    matrix: np.ndarray
    trajectory: Trajectory
    stationary: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        pi = np.asarray(self.stationary, dtype=float)
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > MDT_ROW_SUM_ATOL:
            raise ValueError("composed operator is not row-stochastic")
        if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-10:
            raise ValueError("stationary distribution must be positive and sum to 1")
        if np.max(np.abs(pi @ w - pi)) > MDT_ROW_SUM_ATOL:
            raise ValueError("stationary residual exceeds 1e-10")
        object.__setattr__(self, "matrix", _frozen_array(w))
        object.__setattr__(self, "stationary", _frozen_array(pi))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DiffusionMap:
    """N x l embedding with its (nonincreasing) singular values."""

    embedding: np.ndarray
    singular_values: np.ndarray
    source: Trajectory

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=float)
        sv = np.asarray(self.singular_values, dtype=float)
        if emb.shape[1] != sv.shape[0] or emb.shape[1] > emb.shape[0]:
            raise ValueError("embedding/singular value shape mismatch")
        if np.any(np.diff(sv) > 1e-12):
            raise ValueError("singular values must be nonincreasing")
        object.__setattr__(self, "embedding", _frozen_array(emb))
        object.__setattr__(self, "singular_values", _frozen_array(sv))


def stationary(w: np.ndarray, atol: float = STATIONARY_ATOL) -> np.ndarray:
    """Unique left fixed point of a row-stochastic matrix.

    Power iteration on W^T; when the spectral gap is too small to converge
    within the iteration cap, the iterated operator is squared periodically
    (doubling the effective step count) so that desk-scale ring-like graphs
    still reach the 1e-12 residual. Non-convergence signals a violated
    precondition (reducible or periodic chain).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    max_iters = max(100 * n, 200)
    b = w
    x = np.full(n, 1.0 / n)
    squarings = 0
    for it in range(max_iters):
        x_new = x @ b
        x_new = x_new / x_new.sum()
        if np.max(np.abs(x_new - x)) <= atol:
            residual = np.max(np.abs(x_new @ w - x_new))
            if residual <= atol * 10 and np.all(x_new > 0):
                return x_new
        x = x_new
        if (it + 1) % 40 == 0 and squarings < 60:
            b = b @ b
            squarings += 1
    raise RuntimeError("stationary iteration failed")


def _step_matrices(operators, traj: Trajectory) -> list:
    if isinstance(operators, OperatorSet):
        opset = operators
    else:
        ops = tuple(operators)
        opset = OperatorSet(operators=ops, tags=tuple(f"view:{v}" for v in range(len(ops))))
    mats = []
    for step in traj.steps:
        if traj.kind == "discrete":
            if step >= len(opset):
                raise IndexError(f"operator index {step} out of range for set of size {len(opset)}")
            mats.append(opset.operators[step].values)
        else:
            mats.append(convex_combine(opset, step).values)
    return mats


def compose(operators, traj: Trajectory) -> MDTOperator:
    """Left-product of the chosen operators; step 0 is applied first."""
    mats = _step_matrices(operators, traj)
    w = mats[0]
    for m in mats[1:]:
        w = m @ w
    pi = stationary(w)
    return MDTOperator(matrix=w, trajectory=traj, stationary=pi)


def diffusion_distance_sq(op: MDTOperator, i: int, j: int) -> float:
    """Squared trajectory-dependent diffusion distance between points i, j."""
    diff = op.matrix[i] - op.matrix[j]
    return float(np.sum(diff * diff / op.stationary))


def embedding_from_operator(w: np.ndarray, pi: np.ndarray, l: int) -> tuple:
    """Distance-preserving embedding of one row-stochastic operator.

    Works on the conjugated matrix A = Pi^{1/2} W Pi^{-1/2}: with the SVD
    A = M S N^T the embedding is Pi^{-1/2} M S, truncated to l columns.
    """
    if not 1 <= l <= w.shape[0]:
        raise ValueError("l must lie in [1, N]")
    sqrt_pi = np.sqrt(pi)
    a = (sqrt_pi[:, None] * w) / sqrt_pi[None, :]
    try:
        m, sv, _ = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("SVD of the conjugated operator failed") from exc
    psi = (m * sv) / sqrt_pi[:, None]
    return psi[:, :l], sv[:l]


def diffusion_map(op: MDTOperator, l: int) -> DiffusionMap:
    """Embedding whose pairwise Euclidean distances equal the trajectory
    diffusion distances at l = N."""
    psi, sv = embedding_from_operator(op.matrix, op.stationary, l)
    return DiffusionMap(embedding=psi, singular_values=sv,
                        source=op.trajectory)


def expected_operator(operator_set: OperatorSet, mu: np.ndarray, t: int) -> np.ndarray:
    """(sum_p mu_p P_p)^t, the mean operator of i.i.d. random sampling."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (len(operator_set),) or np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-9:
        raise ValueError("mu must be a distribution over the set")
    if t < 1:
        raise ValueError("t must be >= 1")
    mean = np.tensordot(mu, np.stack(operator_set.matrices()), axes=1)
    return np.linalg.matrix_power(mean, t)
