"""Quality measures, with scikit-learn as the independent oracle for AMI/CH."""
import numpy as np
import pytest
from sklearn.metrics import adjusted_mutual_info_score, calinski_harabasz_score

from mvdt.kernels import build_canonical_set, build_view_kernels
from mvdt.operator_space import enrich_set
from mvdt.quality import (
    CONTRASTIVE_TEMPERATURE,
    NeighborSets,
    PartitionLabels,
    ami,
    ch_index,
    contrastive_loss,
    prr,
    q_ch,
)
from mvdt.trajectory import Trajectory, compose

from conftest import make_blobs_views, random_views


def test_partition_labels_densify():
    part = PartitionLabels.from_labels([5, 5, 9, 9, 9])
    assert part.k == 2
    assert list(part.labels) == [0, 0, 1, 1, 1]


def test_partition_labels_validation():
    with pytest.raises(ValueError):
        PartitionLabels(labels=np.array([0, 2]), k=2)
    with pytest.raises(ValueError):
        PartitionLabels(labels=np.array([0, 0]), k=2)


def test_ch_index_against_sklearn():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    labels = rng.integers(0, 3, size=40)
    labels[:3] = [0, 1, 2]
    part = PartitionLabels.from_labels(labels)
    assert ch_index(x, part) == pytest.approx(
        calinski_harabasz_score(x, part.labels))


def test_ch_index_perfect_split_infinite():
    x = np.array([[0.0], [0.0], [1.0], [1.0]])
    part = PartitionLabels.from_labels([0, 0, 1, 1])
    assert ch_index(x, part) == np.inf


def test_ami_against_sklearn():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = rng.integers(0, 4, size=60)
        b = rng.integers(0, 3, size=60)
        a[:4] = [0, 1, 2, 3]
        b[:3] = [0, 1, 2]
        assert ami(a, b) == pytest.approx(
            adjusted_mutual_info_score(a, b), abs=1e-10)


def test_ami_self_is_one():
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 5, size=100)
    labels[:5] = np.arange(5)
    assert ami(labels, labels) == 1.0


def test_ami_relabel_invariant():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 3, size=50)
    a[:3] = [0, 1, 2]
    b = rng.integers(0, 3, size=50)
    b[:3] = [0, 1, 2]
    relabeled = (b + 1) % 3
    assert ami(a, b) == pytest.approx(ami(a, relabeled), abs=1e-12)


def test_ami_chance_level():
    rng = np.random.default_rng(4)
    vals = []
    for _ in range(50):
        a = rng.integers(0, 3, size=300)
        b = rng.integers(0, 3, size=300)
        a[:3] = [0, 1, 2]
        b[:3] = [0, 1, 2]
        vals.append(ami(a, b))
    assert abs(np.mean(vals)) < 0.02


def test_prr():
    scores = {"a": 0.9, "b": 0.45}
    ratios = prr(scores, 0.45)
    assert ratios == {"a": 2.0, "b": 1.0}
    with pytest.raises(ValueError):
        prr(scores, 0.0)


def test_neighbor_sets_from_kernels(tiny_2v):
    kernels = build_view_kernels(tiny_2v)
    neigh = NeighborSets.from_kernels(kernels)
    assert neigh.n_views == 2
    for view_sets in neigh.per_view:
        for i, s in enumerate(view_sets):
            assert len(s) >= 1
            assert i not in s


def test_contrastive_loss_oracle(tiny_2v):
    # independent oracle: direct double-loop evaluation of the loss
    kernels = build_view_kernels(tiny_2v)
    neigh = NeighborSets.from_kernels(kernels)
    opset = enrich_set(build_canonical_set(tiny_2v))
    op = compose(opset, Trajectory.discrete([0, 1]))
    n = op.n
    z = CONTRASTIVE_TEMPERATURE * n * op.matrix
    expected = 0.0
    for lam, view_sets in zip([0.5, 0.5], neigh.per_view):
        for i, neighbors in enumerate(view_sets):
            others = [k for k in range(n) if k != i]
            lse = np.log(np.sum(np.exp(z[i, others])))
            for j in neighbors:
                expected += lam * (-z[i, j] + lse)
    assert contrastive_loss(op, neigh) == pytest.approx(expected, rel=1e-10)


def test_q_ch_deterministic_and_positive():
    data = make_blobs_views(n_per=15, k=3, n_views=2, seed=7)
    opset = enrich_set(build_canonical_set(data))
    traj = Trajectory.discrete([0, 1])
    a = q_ch(traj, data, opset, k=3)
    b = q_ch(traj, data, opset, k=3)
    assert a == b
    assert a > 0
