"""Internal and external quality measures.

CH (Calinski-Harabasz) and its multi-view aggregate are maximized when
searching trajectories for clustering; the contrastive loss is minimized
when learning convex trajectories for manifold tasks. AMI adjusts mutual
information for chance agreement, and PRR normalizes a method's AMI by the
random-trajectory baseline.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from mvdt.kernels import KernelMatrix, MultiViewDataset, _frozen_array
from mvdt.trajectory import MDTOperator, Trajectory, compose, diffusion_map

# logits fed to the contrastive softmax are CONTRASTIVE_TEMPERATURE * N * W;
# calibrated so that view-mixing trajectories beat single-view corners on the
# helix benchmarks while concentration on neighbors is still rewarded
CONTRASTIVE_TEMPERATURE = 0.4


@dataclass(frozen=True)
class PartitionLabels:
    """Dense cluster labels in [0, k) with every cluster non-empty."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1:
            raise ValueError("labels must be a vector")
        present = np.unique(labels)
        if present.min() < 0 or present.max() >= self.k:
            raise ValueError("labels must lie in [0, k)")
        if len(present) != self.k:
            raise ValueError("every cluster must be non-empty")
        object.__setattr__(self, "labels", _frozen_array(labels, dtype=int))

    @classmethod
    def from_labels(cls, labels) -> "PartitionLabels":
        labels = np.asarray(labels)
        _, dense = np.unique(labels, return_inverse=True)
        return cls(labels=dense, k=int(dense.max()) + 1)

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class NeighborSets:
    """Per view, per point, the indices of kernel-graph neighbors."""

    per_view: tuple

    def __post_init__(self):
        views = []
        for view_sets in self.per_view:
            sets = []
            for i, neigh in enumerate(view_sets):
                neigh = np.asarray(neigh, dtype=int)
                if len(neigh) == 0:
                    raise ValueError(f"point {i} has no neighbors")
                if i in neigh:
                    raise ValueError(f"point {i} listed as its own neighbor")
                sets.append(_frozen_array(neigh, dtype=int))
            views.append(tuple(sets))
        object.__setattr__(self, "per_view", tuple(views))

    @property
    def n_views(self) -> int:
        return len(self.per_view)

    @classmethod
    def from_kernels(cls, kernels: Sequence[KernelMatrix]) -> "NeighborSets":
        per_view = []
        for kernel in kernels:
            values = kernel.values
            sets = []
            for i in range(kernel.n):
                neigh = np.flatnonzero(values[i] > 0)
                sets.append(neigh[neigh != i])
            per_view.append(tuple(sets))
        return cls(per_view=tuple(per_view))


def ch_index(x: np.ndarray, partition: PartitionLabels) -> float:
    """Between/within scatter ratio scaled by (N - k) / (k - 1)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    k = partition.k
    if not 2 <= k <= n - 1:
        raise ValueError("k must lie in [2, N-1]")
    overall = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in range(k):
        members = x[partition.labels == c]
        centroid = members.mean(axis=0)
        between += len(members) * float(np.sum((centroid - overall) ** 2))
        within += float(np.sum((members - centroid) ** 2))
    if within == 0.0:
        return float("inf")
    return (between / within) * ((n - k) / (k - 1))


def q_ch(
    tau: Trajectory,
    data: MultiViewDataset,
    operators,
    k: int,
    weights: Optional[np.ndarray] = None,
    kmeans_seed: int = 0,
) -> float:
    """Weighted per-view CH of the k-means partition of the trajectory map.

    k-means uses a fixed seed so that the objective is deterministic during
    search.
    """
    from mvdt.cluster import kmeans

    if k < 2:
        raise ValueError("k must be >= 2")
    if weights is None:
        weights = np.full(data.n_views, 1.0 / data.n_views)
    op = compose(operators, tau)
    emb = diffusion_map(op, l=min(k, op.n)).embedding
    partition = kmeans(emb, k, seed=kmeans_seed)
    return float(sum(
        w * ch_index(view.points, partition)
        for w, view in zip(weights, data.views)
    ))


def contrastive_loss(
    op,
    neigh: NeighborSets,
    lambdas: Optional[np.ndarray] = None,
) -> float:
    """Negative log-softmax of neighbor transition mass, summed over views.

    Lower is better: the loss shrinks as each row of the operator moves
    probability mass onto that row's kernel-graph neighbors.
    """
    w = op.matrix if isinstance(op, MDTOperator) else np.asarray(op, dtype=float)
    loss, _ = _contrastive_loss_grad(w, neigh, lambdas)
    return loss


def _contrastive_loss_grad(w: np.ndarray, neigh: NeighborSets,
                           lambdas: Optional[np.ndarray]) -> tuple:
    """Loss and its gradient with respect to the operator entries.

    Operator entries scale like 1/N, so they are rescaled to O(1) logits
    before entering the softmax. Without this temperature the softmax is
    effectively linear in the entries and the minimum over the convex
    trajectory space degenerates to a single-view corner.
    """
    n = w.shape[0]
    n_views = neigh.n_views
    if lambdas is None:
        lambdas = np.full(n_views, 1.0 / n_views)
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("lambdas must be nonnegative")

    beta = CONTRASTIVE_TEMPERATURE * n
    z = beta * w

    # row-wise softmax excluding the diagonal, stabilized by the row max
    masked = z.copy()
    np.fill_diagonal(masked, -np.inf)
    row_max = masked.max(axis=1)
    exp = np.exp(masked - row_max[:, None])
    np.fill_diagonal(exp, 0.0)
    denom = exp.sum(axis=1)
    lse = row_max + np.log(denom)
    softmax = exp / denom[:, None]

    loss = 0.0
    grad = np.zeros_like(w)
    for lam, view_sets in zip(lambdas, neigh.per_view):
        if lam == 0.0:
            continue
        counts = np.array([len(s) for s in view_sets], dtype=float)
        view_loss = float(np.dot(counts, lse))
        for i, neighbors in enumerate(view_sets):
            view_loss -= float(z[i, neighbors].sum())
            grad[i, neighbors] -= lam
        loss += lam * view_loss
        grad += lam * counts[:, None] * softmax
    return loss, beta * grad


def ami(a, b) -> float:
    """Adjusted Mutual Information with the hypergeometric expected-MI term.

    Degenerate single-cluster-vs-single-cluster comparisons return 1 when
    the partitions are identical and 0 otherwise.
    """
    a = a if isinstance(a, PartitionLabels) else PartitionLabels.from_labels(a)
    b = b if isinstance(b, PartitionLabels) else PartitionLabels.from_labels(b)
    if a.n != b.n:
        raise ValueError("partitions must cover the same points")
    n = a.n
    contingency = np.zeros((a.k, b.k))
    np.add.at(contingency, (a.labels, b.labels), 1.0)
    row = contingency.sum(axis=1)
    col = contingency.sum(axis=0)

    nz = contingency > 0
    if (a.k == b.k and np.all(nz.sum(axis=0) == 1)
            and np.all(nz.sum(axis=1) == 1)):
        # identical partitions up to relabeling
        return 1.0
    mi = float(np.sum(
        contingency[nz] / n * (
            np.log(n * contingency[nz]) - np.log(np.outer(row, col)[nz])
        )
    ))
    h_a = float(-np.sum(row / n * np.log(row / n)))
    h_b = float(-np.sum(col / n * np.log(col / n)))
    emi = _expected_mi(row, col, n)
    denom = 0.5 * (h_a + h_b) - emi
    if abs(denom) < 1e-15:
        return 1.0 if np.array_equal(contingency > 0, np.eye(a.k, b.k, dtype=bool)) else 0.0
    # rounding in the entropy terms can push identical partitions above 1
    return float(min((mi - emi) / denom, 1.0))


def _expected_mi(row: np.ndarray, col: np.ndarray, n: int) -> float:
    """E[MI] under the hypergeometric model of random contingency tables."""
    gln_n = gammaln(n + 1)
    emi = 0.0
    for ai in row:
        for bj in col:
            lo = int(max(1, ai + bj - n))
            hi = int(min(ai, bj))
            for nij in range(lo, hi + 1):
                term1 = nij / n * (np.log(n * nij) - np.log(ai * bj))
                log_prob = (
                    gammaln(ai + 1) + gammaln(bj + 1)
                    + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                    - gln_n - gammaln(nij + 1) - gammaln(ai - nij + 1)
                    - gammaln(bj - nij + 1) - gammaln(n - ai - bj + nij + 1)
                )
                emi += term1 * np.exp(log_prob)
    return float(emi)


def prr(scores: dict, baseline: float) -> dict:
    """AMI of each method divided by the AMI of the random baseline."""
    if baseline <= 0:
        raise ValueError("baseline AMI must be positive")
    return {method: score / baseline for method, score in scores.items()}
