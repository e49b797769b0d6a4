"""Shared fixtures: small synthetic multi-view instances."""
import numpy as np
import pytest

from mvdt.kernels import MultiViewDataset, ViewDataset


def make_blobs_views(
    n_per: int = 20,
    k: int = 3,
    n_views: int = 2,
    sep: float = 10.0,
    std: float = 0.5,
    seed: int = 0,
    noise_view: bool = False,
):
    """Well-separated Gaussian blobs seen through simple per-view maps."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, sep, size=(k, 2))
    labels = np.repeat(np.arange(k), n_per)
    base = centers[labels] + rng.normal(0.0, std, size=(k * n_per, 2))
    views = []
    for v in range(n_views):
        if noise_view and v == n_views - 1:
            pts = rng.normal(0.0, 1.0, size=base.shape)
        else:
            rot = rng.normal(0.0, 1.0, size=(2, 2))
            rot, _ = np.linalg.qr(rot)
            pts = base @ rot + rng.normal(0.0, std / 2.0, size=base.shape)
        views.append(ViewDataset(points=pts, view_id=v))
    return MultiViewDataset(views=tuple(views), labels=labels)


def random_views(n: int, v: int, seed: int = 0, dim: int = 3):
    """Unstructured random point clouds for operator-level tests."""
    rng = np.random.default_rng(seed)
    views = tuple(
        ViewDataset(points=rng.normal(size=(n, dim)), view_id=i)
        for i in range(v)
    )
    return MultiViewDataset(views=views)


@pytest.fixture
def blobs_2v():
    return make_blobs_views(n_per=20, k=3, n_views=2, seed=0)


@pytest.fixture
def tiny_2v():
    return random_views(12, 2, seed=1)
