"""Literature multi-view diffusion baselines: AD, ID, p-AD, MVD, Cr-Diff, Com-Diff.

AD, ID and p-AD stay inside the trajectory framework (their operators are
special-case compositions); MVD, Cr-Diff and Com-Diff build their own
operators and embeddings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from mvdt.kernels import KernelMatrix, TransitionMatrix, _frozen_array
from mvdt.time_select import entropy_horizon

CRDIFF_DEFAULT_T = 20


@dataclass(frozen=True)
class BaselineEmbedding:
    embedding: np.ndarray
    method: str
    params: dict

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=float)
        object.__setattr__(self, "embedding", _frozen_array(emb))


def alternating_diffusion(ops: Sequence[TransitionMatrix]) -> TransitionMatrix:
    """One full alternation cycle P_V ... P_2 P_1 (P_1 applied first)."""
    ops = list(ops)
    if not ops:
        raise ValueError("need at least one operator")
    w = ops[0].values
    for p in ops[1:]:
        w = p.values @ w
    return TransitionMatrix(values=w)


def integrated_diffusion(
    ops: Sequence[TransitionMatrix],
    powers: Optional[Sequence[int]] = None,
) -> TransitionMatrix:
    """Alternating diffusion over per-view denoised operators P_v^{t_v}.

    Unsupplied powers come from each view's singular-entropy elbow.
    """
    ops = list(ops)
    if powers is None:
        powers = [entropy_horizon(p) for p in ops]
    if len(powers) != len(ops):
        raise ValueError("one power per operator required")
    denoised = [
        TransitionMatrix(values=np.linalg.matrix_power(p.values, int(t)))
        for p, t in zip(ops, powers)
    ]
    return alternating_diffusion(denoised)


def powered_alternating(
    ops: Sequence[TransitionMatrix],
    t: Optional[int] = None,
) -> TransitionMatrix:
    """(alternating cycle)^t, t from the cycle's entropy elbow when unset."""
    cycle = alternating_diffusion(ops)
    if t is None:
        t = entropy_horizon(cycle)
    if t < 1:
        raise ValueError("t must be >= 1")
    return TransitionMatrix(values=np.linalg.matrix_power(cycle.values, t))


def mvd(kernels: Sequence[KernelMatrix], l: Optional[int] = None,
        t: int = 1) -> BaselineEmbedding:
    """Block-kernel multi-view diffusion.

    Builds the VN x VN matrix with off-diagonal blocks K_a K_b, degree
    normalizes it, eigendecomposes, and returns the first-view rows of the
    leading eigenvectors scaled by eigenvalue^t. Cost grows quadratically
    with the number of views.
    """
    kernels = list(kernels)
    if len(kernels) < 2:
        raise ValueError("MVD needs at least two views")
    n = kernels[0].n
    v = len(kernels)
    big = np.zeros((v * n, v * n))
    for a in range(v):
        for b in range(v):
            if a != b:
                big[a * n:(a + 1) * n, b * n:(b + 1) * n] = (
                    kernels[a].values @ kernels[b].values
                )
    degrees = big.sum(axis=1)
    if np.any(degrees <= 0):
        raise ValueError("singular degree in the block kernel")
    # D^{-1} K is similar to the symmetric D^{-1/2} K D^{-1/2}
    inv_sqrt = 1.0 / np.sqrt(degrees)
    sym = inv_sqrt[:, None] * big * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(-vals)
    vals = vals[order]
    vecs = (inv_sqrt[:, None] * vecs)[:, order]
    l = l if l is not None else n
    embedding = vecs[:n, :l] * vals[:l] ** t
    return BaselineEmbedding(embedding=embedding, method="MVD",
                             params={"t": t, "l": l, "views": v})


def cross_diffusion(
    ops: Sequence[TransitionMatrix],
    t: int = CRDIFF_DEFAULT_T,
    corrected: bool = True,
) -> np.ndarray:
    """Two intertwined processes fused by averaging after t iterations.

    The printed recursion updates the second process with P2 Q1 P2^T; the
    corrected (default) form uses P1^T, matching the original cross-diffusion
    construction. Set corrected=False for the printed variant.
    """
    ops = list(ops)
    if t < 1:
        raise ValueError("t must be >= 1")
    if len(ops) == 2:
        p1, p2 = ops[0].values, ops[1].values
        q1, q2 = p1, p2
        for _ in range(t - 1):
            q1_next = p1 @ q2 @ p2.T
            q2_next = p2 @ q1 @ (p1.T if corrected else p2.T)
            q1, q2 = q1_next, q2_next
        return 0.5 * (q1 + q2)
    if len(ops) < 2:
        raise ValueError("cross diffusion needs at least two views")
    # V > 2: average the two-view results over ordered pairs
    acc = np.zeros((ops[0].n, ops[0].n))
    count = 0
    for a in range(len(ops)):
        for b in range(len(ops)):
            if a != b:
                acc += cross_diffusion([ops[a], ops[b]], t=t, corrected=corrected)
                count += 1
    return acc / count


def composite_diffusion(p1: TransitionMatrix, p2: TransitionMatrix,
                        *more) -> tuple:
    """(symmetric, anti-symmetric) pair of cross-view composite operators."""
    if more:
        raise ValueError("two-view method")
    a = p2.values @ p1.values.T
    b = p1.values @ p2.values.T
    return a + b, a - b


def composite_embedding(p1: TransitionMatrix, p2: TransitionMatrix,
                        l: int) -> BaselineEmbedding:
    """Clustering embedding from the symmetric composite operator."""
    q1, _ = composite_diffusion(p1, p2)
    vals, vecs = np.linalg.eigh(q1)
    order = np.argsort(-np.abs(vals))[:l]
    embedding = vecs[:, order] * vals[order]
    return BaselineEmbedding(embedding=embedding, method="ComDiff",
                             params={"l": l})


def cross_embedding(ops: Sequence[TransitionMatrix], l: int,
                    t: int = CRDIFF_DEFAULT_T) -> BaselineEmbedding:
    """Clustering embedding from the SVD of the fused cross-diffusion matrix."""
    q = cross_diffusion(ops, t=t)
    u, sv, _ = np.linalg.svd(q)
    embedding = u[:, :l] * sv[:l]
    return BaselineEmbedding(embedding=embedding, method="CrDiff",
                             params={"l": l, "t": t})
