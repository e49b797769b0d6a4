"""Seeded k-means and the repeated-run clustering pipeline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mvdt.kernels import MultiViewDataset
from mvdt.quality import PartitionLabels, ami, ch_index

KMEANS_MAX_ITERS = 300
KMEANS_TOL = 1e-9


@dataclass(frozen=True)
class ClusterRunReport:
    method: str
    ami_mean: float
    ami_std: float
    ch_per_view: tuple
    runs: int
    resolved_t: int
    seed_base: int
    per_run_ami: tuple = ()

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.ami_std < 0:
            raise ValueError("ami_std must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "ami_mean": self.ami_mean,
            "ami_std": self.ami_std,
            "ch_per_view": list(self.ch_per_view),
            "runs": self.runs,
            "resolved_t": self.resolved_t,
            "seed_base": self.seed_base,
        }


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = np.sum((x - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            # remaining points coincide with chosen centroids; pick any
            centroids[c] = x[rng.integers(n)]
            continue
        probs = closest / total
        centroids[c] = x[rng.choice(n, p=probs)]
        closest = np.minimum(closest, np.sum((x - centroids[c]) ** 2, axis=1))
    return centroids


def kmeans(embedding: np.ndarray, k: int, seed: int = 0) -> PartitionLabels:
    """Lloyd iterations from a seeded k-means++ start.

    Empty clusters are re-seeded from the point farthest from its assigned
    centroid; iteration stops when centroids move less than 1e-9.
    """
    x = np.asarray(embedding, dtype=float)
    n = x.shape[0]
    if not 2 <= k <= n:
        raise ValueError("k must lie in [2, N]")
    if len(np.unique(x, axis=0)) < k:
        raise ValueError("k exceeds the number of distinct rows")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(x, k, rng)
    labels = np.zeros(n, dtype=int)
    for _ in range(KMEANS_MAX_ITERS):
        dists = np.sum((x[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dists, axis=1)
        new_centroids = centroids.copy()
        for c in range(k):
            members = labels == c
            if not np.any(members):
                farthest = int(np.argmax(dists[np.arange(n), labels]))
                new_centroids[c] = x[farthest]
                labels[farthest] = c
            else:
                new_centroids[c] = x[members].mean(axis=0)
        shift = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if shift < KMEANS_TOL:
            break
    return PartitionLabels(labels=labels, k=k)


def cluster_pipeline(
    data: MultiViewDataset,
    method_config: dict,
    k: int,
    runs: int,
    seed_base: int = 0,
) -> ClusterRunReport:
    """AMI mean/std over repeated k-means runs for one embedding method.

    Deterministic methods compute their embedding once; stochastic MDT
    variants (rand, cvx-rand) re-sample a fresh trajectory per run.
    """
    from mvdt.methods import STOCHASTIC_METHODS, method_embedding

    if data.labels is None:
        raise ValueError("ground-truth labels are required for AMI")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    method = method_config["method"]
    truth = PartitionLabels.from_labels(data.labels)

    stochastic = method in STOCHASTIC_METHODS
    embedding = None
    resolved_t = 0
    amis = []
    ch_acc = np.zeros(data.n_views)
    for run in range(runs):
        seed = seed_base + run
        if embedding is None or stochastic:
            embedding, resolved_t = method_embedding(
                data, method_config, k, seed=seed)
        partition = kmeans(embedding, k, seed=seed)
        amis.append(ami(partition, truth))
        ch_acc += [ch_index(v.points, partition) for v in data.views]
    amis = np.asarray(amis)
    return ClusterRunReport(
        method=method,
        ami_mean=float(amis.mean()),
        ami_std=float(amis.std()),
        ch_per_view=tuple(ch_acc / runs),
        runs=runs,
        resolved_t=int(resolved_t),
        seed_base=seed_base,
        per_run_ami=tuple(float(a) for a in amis),
    )
