"""Trajectory learning strategies.

Random sampling in the discrete and convex spaces, beam search with the CH
aggregate, DIRECT over stick-broken simplex coordinates, and gradient
descent on the contrastive loss with analytic gradients through the matrix
product chain.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import direct as scipy_direct

from mvdt.kernels import MultiViewDataset, build_canonical_set, build_view_kernels
from mvdt.operator_space import OperatorSet, SimplexWeights, enrich_set
from mvdt.quality import NeighborSets, _contrastive_loss_grad, q_ch
from mvdt.time_select import entropy_curve
from mvdt.trajectory import DiffusionMap, MDTOperator, Trajectory, compose, diffusion_map

logger = logging.getLogger(__name__)

STRATEGIES = ("rand", "cvx_rand", "beam", "direct", "contrastive")


@dataclass(frozen=True)
class SearchConfig:
    strategy: str
    t: Optional[int] = None
    beam_width: int = 5
    budget: int = 200
    seed: int = 0
    learning_rate: float = 0.05
    iterations: int = 200

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.budget < 1 or self.beam_width < 1:
            raise ValueError("budget and beam_width must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    trajectory: Trajectory
    score: float
    evaluations: int
    trace: tuple = ()
    resolved_t: int = 0


def sample_random_trajectory(
    operator_set: OperatorSet,
    mu: Optional[np.ndarray] = None,
    t: int = 1,
    seed: int = 0,
) -> Trajectory:
    """t i.i.d. operator indices drawn from mu (uniform by default)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    size = len(operator_set)
    if mu is None:
        mu = np.full(size, 1.0 / size)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (size,) or np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-9:
        raise ValueError("mu must be a distribution over the set")
    rng = np.random.default_rng(seed)
    steps = rng.choice(size, size=t, p=mu)
    return Trajectory.discrete(steps)


def sample_random_convex_trajectory(v: int, t: int, seed: int = 0) -> Trajectory:
    """t weight vectors drawn uniformly from the (V-1)-simplex."""
    if v < 1 or t < 1:
        raise ValueError("v and t must be >= 1")
    rng = np.random.default_rng(seed)
    if v == 1:
        weights = np.ones((t, 1))
    else:
        weights = rng.dirichlet(np.ones(v), size=t)
        weights = weights / weights.sum(axis=1, keepdims=True)
    return Trajectory.convex([SimplexWeights(w) for w in weights])


def beam_search(
    operator_set: OperatorSet,
    objective: Callable[[Trajectory], float],
    depth_max: int,
    width: int,
    budget: Optional[int] = None,
) -> SearchResult:
    """Beam search over the |set|-ary trajectory tree.

    Every beam member is extended by every operator at each depth; the top
    `width` scores survive. The best trajectory seen at any depth wins, so
    shorter trajectories can be selected. Objective values are cached by
    trajectory key; failures discard the candidate with a warning.
    """
    if depth_max < 1:
        raise ValueError("depth_max must be >= 1")
    cache: dict = {}
    evaluations = 0
    trace = []

    def evaluate(traj: Trajectory) -> Optional[float]:
        nonlocal evaluations
        key = traj.key()
        if key in cache:
            return cache[key]
        if budget is not None and evaluations >= budget:
            return None
        try:
            score = objective(traj)
        except Exception as exc:  # noqa: BLE001 - candidate-level isolation
            logger.warning("objective failed on %s: %s", traj.steps, exc)
            cache[key] = None
            evaluations += 1
            return None
        evaluations += 1
        cache[key] = score
        trace.append((traj, score))
        return score

    best_traj = None
    best_score = -np.inf
    beam = [()]
    for _ in range(depth_max):
        scored = []
        for prefix in beam:
            for op_idx in range(len(operator_set)):
                steps = prefix + (op_idx,)
                traj = Trajectory.discrete(steps)
                score = evaluate(traj)
                if score is None:
                    continue
                scored.append((score, steps))
                if score > best_score:
                    best_score, best_traj = score, traj
        if not scored:
            break
        scored.sort(key=lambda item: (-item[0], item[1]))
        beam = [steps for _, steps in scored[:width]]
    if best_traj is None:
        raise RuntimeError("beam search found no scorable trajectory")
    return SearchResult(trajectory=best_traj, score=best_score,
                        evaluations=evaluations, trace=tuple(trace),
                        resolved_t=len(best_traj))


def stick_breaking(x: np.ndarray) -> np.ndarray:
    """Map box coordinates in [0,1]^{V-1} to a point of the V-simplex."""
    x = np.asarray(x, dtype=float)
    v = len(x) + 1
    weights = np.empty(v)
    remaining = 1.0
    for i, xi in enumerate(x):
        weights[i] = remaining * xi
        remaining *= 1.0 - xi
    weights[-1] = remaining
    # guard the 1e-12 simplex-sum invariant against accumulated rounding
    weights = np.clip(weights, 0.0, None)
    return weights / weights.sum()


def _box_to_trajectory(x: np.ndarray, v: int, t: int) -> Trajectory:
    if v == 1:
        return Trajectory.convex([SimplexWeights(np.ones(1)) for _ in range(t)])
    coords = np.asarray(x, dtype=float).reshape(t, v - 1)
    return Trajectory.convex([SimplexWeights(stick_breaking(c)) for c in coords])


def direct_optimize(
    v: int,
    t: int,
    objective: Callable[[Trajectory], float],
    budget: int = 200,
) -> SearchResult:
    """DIRECT over the box [0,1]^{t(V-1)} of stick-broken step weights.

    Deterministic; maximizes the objective within the evaluation budget.
    """
    if t < 1 or v < 1:
        raise ValueError("v and t must be >= 1")
    dim = t * (v - 1)
    if dim == 0:
        traj = _box_to_trajectory(np.empty(0), v, t)
        return SearchResult(trajectory=traj, score=objective(traj),
                            evaluations=1, trace=((traj, objective(traj)),),
                            resolved_t=t)
    if budget < 2 * dim + 1:
        raise ValueError("budget must be at least 2 * t * (V-1) + 1")
    evaluations = 0
    trace = []
    best = {"score": -np.inf, "traj": None}

    def negated(x):
        nonlocal evaluations
        if evaluations >= budget:
            return np.inf
        traj = _box_to_trajectory(x, v, t)
        score = objective(traj)
        evaluations += 1
        trace.append((traj, score))
        if score > best["score"]:
            best["score"] = score
            best["traj"] = traj
        return -score

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        scipy_direct(negated, bounds=[(0.0, 1.0)] * dim, maxfun=budget,
                     maxiter=10000)
    if best["traj"] is None:
        center = np.full(dim, 0.5)
        traj = _box_to_trajectory(center, v, t)
        return SearchResult(trajectory=traj, score=objective(traj),
                            evaluations=evaluations + 1, resolved_t=t)
    return SearchResult(trajectory=best["traj"], score=best["score"],
                        evaluations=evaluations, trace=tuple(trace),
                        resolved_t=t)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def contrastive_objective_grad(
    logits: np.ndarray,
    matrices: Sequence[np.ndarray],
    neigh: NeighborSets,
    lambdas: Optional[np.ndarray],
) -> tuple:
    """Contrastive loss of the composed operator and its gradient in the
    per-step logits.

    Steps parameterize simplex weights through a row-wise softmax; the
    gradient backpropagates through the left-product chain via prefix and
    suffix products.
    """
    t, v = logits.shape
    weights = _softmax(logits)
    stacked = np.stack(matrices)
    step_mats = [np.tensordot(weights[s], stacked, axes=1) for s in range(t)]

    prefixes = [np.eye(stacked.shape[1])]          # prefixes[s] = W_s ... W_1
    for m in step_mats:
        prefixes.append(m @ prefixes[-1])
    suffixes = [None] * (t + 1)
    suffixes[t] = np.eye(stacked.shape[1])
    for s in range(t - 1, -1, -1):
        suffixes[s] = suffixes[s + 1] @ step_mats[s]
    # suffixes[s] = W_t ... W_{s+1}; composed operator is suffixes[0]
    composed = suffixes[0]

    loss, g_w = _contrastive_loss_grad(composed, neigh, lambdas)
    grad = np.empty_like(logits)
    for s in range(t):
        d_step = suffixes[s + 1].T @ g_w @ prefixes[s].T
        g_a = np.array([np.sum(d_step * stacked[p]) for p in range(v)])
        a = weights[s]
        grad[s] = a * (g_a - np.dot(a, g_a))
    return loss, grad


def adam_optimize_contrastive(
    canonical: OperatorSet,
    t: int,
    neigh: NeighborSets,
    lambdas: Optional[np.ndarray] = None,
    lr: float = 0.05,
    iters: int = 200,
    seed: int = 0,
) -> SearchResult:
    """Minimize the contrastive loss over convex step weights with ADAM.

    Starts from near-uniform logits with seeded jitter; a non-finite loss
    halves the learning rate and restarts from the last finite iterate, up
    to three times.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    matrices = canonical.matrices()
    v = len(canonical)
    rng = np.random.default_rng(seed)
    logits = rng.normal(0.0, 0.01, size=(t, v))

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    best_loss = np.inf
    best_logits = logits.copy()
    evaluations = 0
    trace = []
    restarts = 0
    while True:
        m = np.zeros_like(logits)
        vel = np.zeros_like(logits)
        last_finite = logits.copy()
        failed = False
        for step in range(1, iters + 1):
            loss, grad = contrastive_objective_grad(logits, matrices, neigh, lambdas)
            evaluations += 1
            if not np.isfinite(loss):
                failed = True
                break
            last_finite = logits.copy()
            if loss < best_loss:
                best_loss = loss
                best_logits = logits.copy()
            iterate = Trajectory.convex(
                [SimplexWeights(w) for w in _softmax(logits)])
            trace.append((iterate, float(loss)))
            m = beta1 * m + (1 - beta1) * grad
            vel = beta2 * vel + (1 - beta2) * grad * grad
            m_hat = m / (1 - beta1 ** step)
            v_hat = vel / (1 - beta2 ** step)
            logits = logits - lr * m_hat / (np.sqrt(v_hat) + eps)
        if not failed:
            break
        restarts += 1
        if restarts > 3:
            raise RuntimeError("contrastive optimization diverged after 3 restarts")
        lr *= 0.5
        logits = last_finite

    traj = Trajectory.convex([SimplexWeights(w) for w in _softmax(best_logits)])
    return SearchResult(trajectory=traj, score=float(best_loss),
                        evaluations=evaluations, trace=tuple(trace),
                        resolved_t=t)


def resolve_horizon(operator_set: OperatorSet, t_max: int = 30) -> int:
    """Entropy-elbow diffusion horizon for the uniform expected operator."""
    return entropy_curve(operator_set, t_max=t_max).elbow


def run_variant(
    data: MultiViewDataset,
    config: SearchConfig,
    k: int,
    task: str = "clustering",
) -> tuple:
    """Build operators, resolve t, run the strategy, embed the winner.

    Returns (SearchResult, DiffusionMap). Clustering embeddings have k
    columns; manifold embeddings have 2 non-trivial columns (the constant
    leading diffusion coordinate is dropped).
    """
    if task not in ("clustering", "manifold"):
        raise ValueError("task must be 'clustering' or 'manifold'")
    kernels = build_view_kernels(data)
    canonical = build_canonical_set(data)
    opset = enrich_set(canonical)
    v = len(opset)

    elbow = None
    t = config.t
    if t is None and config.strategy != "beam":
        elbow = resolve_horizon(opset)
        t = elbow

    if config.strategy == "rand":
        traj = sample_random_trajectory(opset, t=t, seed=config.seed)
        result = SearchResult(trajectory=traj, score=float("nan"),
                              evaluations=0, resolved_t=t)
    elif config.strategy == "cvx_rand":
        traj = sample_random_convex_trajectory(v, t, seed=config.seed)
        result = SearchResult(trajectory=traj, score=float("nan"),
                              evaluations=0, resolved_t=t)
    elif config.strategy == "beam":
        if config.t is not None:
            depth_max = config.t
        else:
            elbow = resolve_horizon(opset)
            depth_max = max(1, 2 * elbow)
        objective = lambda tr: q_ch(tr, data, opset, k)  # noqa: E731
        result = beam_search(opset, objective, depth_max=depth_max,
                             width=config.beam_width, budget=config.budget)
    elif config.strategy == "direct":
        objective = lambda tr: q_ch(tr, data, opset, k)  # noqa: E731
        result = direct_optimize(v, t, objective, budget=config.budget)
    else:  # contrastive
        neigh = NeighborSets.from_kernels(kernels)
        result = adam_optimize_contrastive(
            opset, t, neigh, lr=config.learning_rate,
            iters=config.iterations, seed=config.seed,
        )

    op = compose(opset, result.trajectory)
    if task == "clustering":
        emb = diffusion_map(op, l=min(k, op.n))
    else:
        full = diffusion_map(op, l=min(3, op.n))
        emb = DiffusionMap(embedding=full.embedding[:, 1:3],
                           singular_values=full.singular_values[1:3],
                           source=full.source)
    return result, emb
