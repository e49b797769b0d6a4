"""Multi-view diffusion trajectories.

Builds per-view random-walk operators from point-cloud data, composes them
into time-inhomogeneous trajectory operators, and derives trajectory-dependent
diffusion distances and SVD embeddings. Includes unsupervised trajectory
learning (random, beam search, DIRECT, contrastive gradient descent), the
classical multi-view diffusion baselines, and a clustering benchmark harness.
"""

__version__ = "0.1.0"

from mvdt.kernels import (
    KernelMatrix,
    MultiViewDataset,
    TransitionMatrix,
    ViewDataset,
    build_canonical_set,
    build_view_kernels,
    gaussian_kernel,
    knn_sparsify,
    maxmin_bandwidth,
    row_normalize,
)
from mvdt.operator_space import (
    OperatorSet,
    SetConfig,
    SimplexWeights,
    convex_combine,
    enrich_set,
    identity_operator,
    pagerank_operator,
    smoothing_operator,
    uniform_operator,
)
from mvdt.trajectory import (
    DiffusionMap,
    MDTOperator,
    Trajectory,
    compose,
    diffusion_distance_sq,
    diffusion_map,
    expected_operator,
    stationary,
)

__all__ = [
    "KernelMatrix",
    "MultiViewDataset",
    "TransitionMatrix",
    "ViewDataset",
    "build_canonical_set",
    "build_view_kernels",
    "gaussian_kernel",
    "knn_sparsify",
    "maxmin_bandwidth",
    "row_normalize",
    "OperatorSet",
    "SetConfig",
    "SimplexWeights",
    "convex_combine",
    "enrich_set",
    "identity_operator",
    "pagerank_operator",
    "smoothing_operator",
    "uniform_operator",
    "DiffusionMap",
    "MDTOperator",
    "Trajectory",
    "compose",
    "diffusion_distance_sq",
    "diffusion_map",
    "expected_operator",
    "stationary",
]
