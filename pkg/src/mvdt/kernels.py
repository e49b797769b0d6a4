"""Affinity kernels and row-stochastic diffusion operators for point-cloud views.

Pipeline per view: Gaussian kernel (max-min bandwidth) -> kNN sparsification
-> row normalization. The resulting transition matrices are the atoms that
every trajectory composition downstream builds on.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

ROW_SUM_ATOL = 1e-12
TELEPORT_BLEND = 0.01


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ViewDataset:
    """One representation of the common datapoints, rows are points."""

    points: np.ndarray
    view_id: int = 0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if pts.shape[0] < 2 or pts.shape[1] < 1:
            raise ValueError("need at least 2 points with at least 1 feature")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"view {self.view_id}: non-finite entries in points")
        object.__setattr__(self, "points", _frozen_array(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    """Ordered views over a shared set of N datapoints.

    ``labels`` are optional ground-truth cluster ids; ``latent`` carries
    generator side-information (e.g. latent angles) when available.
    """

    views: tuple
    labels: Optional[np.ndarray] = None
    latent: Optional[np.ndarray] = None

    def __post_init__(self):
        views = tuple(self.views)
        if not views:
            raise ValueError("need at least one view")
        n = views[0].n
        if any(v.n != n for v in views):
            raise ValueError("all views must share the same number of points")
        object.__setattr__(self, "views", views)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (n,):
                raise ValueError(f"labels must have length {n}")
            object.__setattr__(self, "labels", _frozen_array(labels, dtype=int))
        if self.latent is not None:
            object.__setattr__(self, "latent", _frozen_array(self.latent))

    @property
    def n(self) -> int:
        return self.views[0].n

    @property
    def n_views(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric nonnegative affinity matrix with strictly positive diagonal."""

    values: np.ndarray
    bandwidth: float

    def __post_init__(self):
        k = np.asarray(self.values, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("kernel must be square")
        if not np.array_equal(k, k.T):
            raise ValueError("kernel must be exactly symmetric")
        if np.any(k < 0):
            raise ValueError("kernel entries must be nonnegative")
        if np.any(np.diag(k) <= 0):
            raise ValueError("kernel diagonal must be strictly positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "values", _frozen_array(k))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic operator with strictly positive diagonal.

    Irreducibility is not enforced here (the identity operator is a legal
    member of enriched operator sets); `build_canonical_set` verifies it for
    the per-view operators and repairs disconnected graphs.
    """

    values: np.ndarray
    repaired: bool = False

    def __post_init__(self):
        p = np.asarray(self.values, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_ATOL:
            raise ValueError("rows must sum to 1 within 1e-12")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("entries must lie in [0, 1]")
        if np.any(np.diag(p) <= 0):
            raise ValueError("diagonal must be strictly positive")
        object.__setattr__(self, "values", _frozen_array(p))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def is_irreducible(self) -> bool:
        n_comp, _ = connected_components(self.values > 0, directed=True,
                                         connection="strong")
        return n_comp == 1


def maxmin_bandwidth(view: ViewDataset) -> float:
    """Max over points of the distance to their nearest distinct neighbor."""
    dists = squareform(pdist(view.points))
    np.fill_diagonal(dists, np.inf)
    sigma = float(np.max(np.min(dists, axis=1)))
    if sigma <= 0:
        raise ValueError("degenerate bandwidth")
    return sigma


def gaussian_kernel(view: ViewDataset, sigma: Optional[float] = None) -> KernelMatrix:
    """K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), unit diagonal."""
    if sigma is None:
        sigma = maxmin_bandwidth(view)
    elif sigma <= 0:
        raise ValueError("sigma must be positive")
    sq = squareform(pdist(view.points, metric="sqeuclidean"))
    values = np.exp(-sq / (2.0 * sigma * sigma))
    np.fill_diagonal(values, 1.0)
    # exact symmetry regardless of summation order in pdist
    values = np.minimum(values, values.T)
    return KernelMatrix(values=values, bandwidth=sigma)


def default_knn(n: int) -> int:
    """ceil(ln N), clipped to the valid range [1, N-1]."""
    return min(max(1, math.ceil(math.log(n))), n - 1)


def knn_sparsify(kernel: KernelMatrix, k_nn: int) -> KernelMatrix:
    """Keep the k_nn largest off-diagonal entries per row plus the diagonal,
    then symmetrize by element-wise maximum with the transpose.

    Ties are broken toward the lower index for determinism.
    """
    n = kernel.n
    if not 1 <= k_nn <= n - 1:
        raise ValueError("k_nn must be in [1, N-1]")
    values = kernel.values
    off = values.copy()
    np.fill_diagonal(off, -np.inf)
    kept = np.zeros_like(values)
    for i in range(n):
        order = np.argsort(-off[i], kind="stable")[:k_nn]
        kept[i, order] = values[i, order]
    np.fill_diagonal(kept, np.diag(values))
    kept = np.maximum(kept, kept.T)
    return KernelMatrix(values=kept, bandwidth=kernel.bandwidth)


def row_normalize(kernel: KernelMatrix) -> TransitionMatrix:
    """P = D^{-1} K with D the diagonal of row sums."""
    degrees = kernel.values.sum(axis=1)
    p = kernel.values / degrees[:, None]
    return TransitionMatrix(values=p)


def uniform_teleport_repair(p: TransitionMatrix) -> TransitionMatrix:
    """Blend a disconnected operator with the uniform operator so the
    irreducibility/aperiodicity hypotheses hold downstream."""
    n = p.n
    values = (1.0 - TELEPORT_BLEND) * p.values + TELEPORT_BLEND / n
    return TransitionMatrix(values=values, repaired=True)


def build_view_kernels(
    data: MultiViewDataset,
    k_nn: Optional[int] = None,
    sigma_per_view: Optional[Sequence[float]] = None,
) -> list:
    """Sparsified kernel per view (gaussian_kernel -> knn_sparsify)."""
    kernels = []
    for idx, view in enumerate(data.views):
        sigma = None if sigma_per_view is None else sigma_per_view[idx]
        try:
            kernel = gaussian_kernel(view, sigma)
            k = k_nn if k_nn is not None else default_knn(view.n)
            kernel = knn_sparsify(kernel, min(k, view.n - 1))
        except ValueError as exc:
            raise ValueError(f"view {view.view_id}: {exc}") from exc
        kernels.append(kernel)
    return kernels


def build_canonical_set(
    data: MultiViewDataset,
    k_nn: Optional[int] = None,
    sigma_per_view: Optional[Sequence[float]] = None,
) -> list:
    """One TransitionMatrix per view; disconnected views get a teleport floor."""
    operators = []
    for kernel, view in zip(build_view_kernels(data, k_nn, sigma_per_view), data.views):
        p = row_normalize(kernel)
        if not p.is_irreducible():
            warnings.warn(
                f"view {view.view_id}: kernel graph disconnected, "
                "applying uniform teleport floor",
                stacklevel=2,
            )
            p = uniform_teleport_repair(p)
        operators.append(p)
    return operators


def transition_from_kernel(kernel: KernelMatrix, k_nn: Optional[int] = None) -> TransitionMatrix:
    """Sparsify and normalize a precomputed kernel (multi-kernel views)."""
    k = k_nn if k_nn is not None else default_knn(kernel.n)
    p = row_normalize(knn_sparsify(kernel, min(k, kernel.n - 1)))
    if not p.is_irreducible():
        warnings.warn("kernel graph disconnected, applying uniform teleport floor",
                      stacklevel=2)
        p = uniform_teleport_repair(p)
    return p
