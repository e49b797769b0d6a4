"""Trajectory learning: sampling, beam search, DIRECT, contrastive descent."""
import itertools

import numpy as np
import pytest

from mvdt.kernels import build_canonical_set, build_view_kernels
from mvdt.learn import (
    SearchConfig,
    adam_optimize_contrastive,
    beam_search,
    contrastive_objective_grad,
    direct_optimize,
    run_variant,
    sample_random_convex_trajectory,
    sample_random_trajectory,
    stick_breaking,
)
from mvdt.operator_space import enrich_set
from mvdt.quality import NeighborSets, q_ch
from mvdt.trajectory import Trajectory

from conftest import make_blobs_views, random_views


def test_sample_random_trajectory_deterministic(tiny_2v):
    opset = enrich_set(build_canonical_set(tiny_2v))
    a = sample_random_trajectory(opset, t=6, seed=42)
    b = sample_random_trajectory(opset, t=6, seed=42)
    assert a == b
    assert len(a) == 6


def test_sample_random_trajectory_frequencies(tiny_2v):
    opset = enrich_set(build_canonical_set(tiny_2v))
    counts = np.zeros(2)
    n_samples = 2000
    for seed in range(n_samples):
        traj = sample_random_trajectory(opset, t=1, seed=seed)
        counts[traj.steps[0]] += 1
    # binomial 3 sigma band around 0.5
    sigma = 0.5 / np.sqrt(n_samples)
    assert abs(counts[0] / n_samples - 0.5) < 3 * sigma


def test_sample_random_convex_trajectory():
    traj = sample_random_convex_trajectory(3, 5, seed=0)
    assert traj.kind == "convex"
    assert len(traj) == 5
    for step in traj.steps:
        assert abs(step.weights.sum() - 1.0) <= 1e-12
    single = sample_random_convex_trajectory(1, 4, seed=0)
    assert all(step.weights[0] == 1.0 for step in single.steps)


def test_stick_breaking_simplex():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.random(4)
        w = stick_breaking(x)
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.all(w >= 0)
    assert np.allclose(stick_breaking(np.array([1.0, 0.3])), [1.0, 0.0, 0.0])
    assert np.allclose(stick_breaking(np.zeros(2)), [0.0, 0.0, 1.0])


def _brute_force_best(opset, objective, depth):
    best_score, best = -np.inf, None
    for d in range(1, depth + 1):
        for steps in itertools.product(range(len(opset)), repeat=d):
            score = objective(Trajectory.discrete(steps))
            if score > best_score:
                best_score, best = score, steps
    return best_score, best


def test_beam_search_exhaustive_matches_brute_force():
    data = make_blobs_views(n_per=20, k=3, n_views=2, seed=11)
    opset = enrich_set(build_canonical_set(data))
    objective = lambda tr: q_ch(tr, data, opset, 3)  # noqa: E731
    result = beam_search(opset, objective, depth_max=3, width=8)
    brute_score, _ = _brute_force_best(opset, objective, 3)
    assert result.score == pytest.approx(brute_score)


def test_beam_search_width_monotone():
    data = make_blobs_views(n_per=10, k=2, n_views=2, seed=13, sep=6.0)
    opset = enrich_set(build_canonical_set(data))
    objective = lambda tr: q_ch(tr, data, opset, 2)  # noqa: E731
    scores = [
        beam_search(opset, objective, depth_max=3, width=w).score
        for w in (1, 2, 4, 8)
    ]
    assert all(a <= b + 1e-9 for a, b in zip(scores, scores[1:]))


def test_beam_search_budget_respected(tiny_2v):
    opset = enrich_set(build_canonical_set(tiny_2v))
    calls = []

    def objective(traj):
        calls.append(traj)
        return -float(len(traj))

    result = beam_search(opset, objective, depth_max=4, width=2, budget=5)
    assert result.evaluations <= 5


def test_beam_search_discards_failures(tiny_2v, caplog):
    opset = enrich_set(build_canonical_set(tiny_2v))

    def objective(traj):
        if traj.steps[0] == 0:
            raise RuntimeError("boom")
        return float(len(traj))

    result = beam_search(opset, objective, depth_max=2, width=4)
    assert result.trajectory.steps[0] == 1


def test_direct_quadratic_center():
    # optimum at the box center: the first DIRECT sample already finds it
    def objective(traj):
        w = traj.steps[0].weights
        return -float((w[0] - 0.5) ** 2)

    result = direct_optimize(2, 1, objective, budget=20)
    assert result.score >= -1e-6


def test_direct_deterministic():
    data = make_blobs_views(n_per=10, k=2, n_views=2, seed=17)
    opset = enrich_set(build_canonical_set(data))
    objective = lambda tr: q_ch(tr, data, opset, 2)  # noqa: E731
    a = direct_optimize(2, 2, objective, budget=40)
    b = direct_optimize(2, 2, objective, budget=40)
    assert a.score == b.score
    assert a.trajectory == b.trajectory
    assert a.evaluations <= 40


def test_direct_single_view_degenerate():
    calls = []

    def objective(traj):
        calls.append(traj)
        return 1.0

    result = direct_optimize(1, 3, objective, budget=10)
    assert result.score == 1.0
    assert all(step.weights[0] == 1.0 for step in result.trajectory.steps)


def test_direct_budget_validation():
    with pytest.raises(ValueError):
        direct_optimize(3, 2, lambda tr: 0.0, budget=3)


def _fd_gradient(logits, matrices, neigh, h=1e-5):
    grad = np.zeros_like(logits)
    for idx in np.ndindex(logits.shape):
        plus = logits.copy()
        plus[idx] += h
        minus = logits.copy()
        minus[idx] -= h
        lp, _ = contrastive_objective_grad(plus, matrices, neigh, None)
        lm, _ = contrastive_objective_grad(minus, matrices, neigh, None)
        grad[idx] = (lp - lm) / (2 * h)
    return grad


@pytest.mark.parametrize("t", [2, 3])
def test_contrastive_gradient_finite_differences(t):
    rng = np.random.default_rng(t)
    data = random_views(8, 2, seed=t)
    kernels = build_view_kernels(data)
    neigh = NeighborSets.from_kernels(kernels)
    matrices = enrich_set(build_canonical_set(data)).matrices()
    logits = rng.normal(0.0, 0.5, size=(t, 2))
    _, analytic = contrastive_objective_grad(logits, matrices, neigh, None)
    numeric = _fd_gradient(logits, matrices, neigh)
    rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
    assert rel.max() <= 1e-4


def test_contrastive_gradient_single_view():
    data = random_views(8, 1, seed=9)
    kernels = build_view_kernels(data)
    neigh = NeighborSets.from_kernels(kernels)
    matrices = enrich_set(build_canonical_set(data)).matrices()
    logits = np.random.default_rng(0).normal(size=(3, 1))
    _, grad = contrastive_objective_grad(logits, matrices, neigh, None)
    assert np.linalg.norm(grad) <= 1e-10


def test_adam_descends():
    data = make_blobs_views(n_per=10, k=2, n_views=2, seed=21, sep=6.0)
    kernels = build_view_kernels(data)
    neigh = NeighborSets.from_kernels(kernels)
    opset = enrich_set(build_canonical_set(data))
    result = adam_optimize_contrastive(opset, t=2, neigh=neigh, iters=50,
                                       seed=0)
    first_loss = result.trace[0][1]
    assert result.score <= first_loss
    assert result.trajectory.kind == "convex"


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(strategy="nope")
    with pytest.raises(ValueError):
        SearchConfig(strategy="rand", budget=0)


def test_run_variant_rand_reproducible():
    data = make_blobs_views(n_per=10, k=2, n_views=2, seed=23)
    config = SearchConfig(strategy="rand", t=3, seed=5)
    r1, e1 = run_variant(data, config, k=2)
    r2, e2 = run_variant(data, config, k=2)
    assert r1.trajectory == r2.trajectory
    assert np.array_equal(e1.embedding, e2.embedding)


def test_run_variant_manifold_two_columns():
    data = make_blobs_views(n_per=10, k=2, n_views=2, seed=29)
    config = SearchConfig(strategy="cvx_rand", t=2, seed=1)
    _, emb = run_variant(data, config, k=2, task="manifold")
    assert emb.embedding.shape[1] == 2
    # the constant leading coordinate is dropped
    assert not np.allclose(emb.embedding[:, 0], emb.embedding[0, 0])
