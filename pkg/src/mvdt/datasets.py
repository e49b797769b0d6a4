"""Synthetic multi-view generators and CSV ingestion.

Generators cover the helix pair (circular latent structure seen through two
nonlinear 3-d deformations), a deformed plane, multi-kernel views built from
one point cloud, and noisy view pairs. Real benchmark data enters only
through load_views.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from mvdt.kernels import (
    KernelMatrix,
    MultiViewDataset,
    ViewDataset,
    maxmin_bandwidth,
)

GENERATOR_NAMES = ("helix_a", "helix_b", "deformed_plane", "multikernel", "noisy_pair")

HELIX_DEFAULT_N = 1500
DEFORMED_PLANE_DEFAULT_N = 3000


def _helix_angles(n: int) -> tuple:
    x1 = 2.0 * np.pi * np.arange(n) / n
    x2 = np.mod(x1 + np.pi / 2.0, 2.0 * np.pi)
    return x1, x2


def _helix_a_transform(x: np.ndarray) -> np.ndarray:
    return np.column_stack([
        4.0 * np.cos(0.9 * x) + 0.3 * np.cos(20.0 * x),
        4.0 * np.sin(0.9 * x) + 0.3 * np.sin(20.0 * x),
        0.1 * (6.3 * x ** 2 - x ** 3),
    ])


def _helix_b_transform(x: np.ndarray) -> np.ndarray:
    return 4.0 * np.column_stack([np.cos(5.0 * x), np.sin(5.0 * x), x])


def gen_helix_a(n: int = HELIX_DEFAULT_N) -> MultiViewDataset:
    """Two 3-d deformations of evenly spaced angles; latent angle kept."""
    if n < 10:
        raise ValueError("n must be >= 10")
    x1, x2 = _helix_angles(n)
    return MultiViewDataset(
        views=(
            ViewDataset(points=_helix_a_transform(x1), view_id=0),
            ViewDataset(points=_helix_a_transform(x2), view_id=1),
        ),
        latent=x1,
    )


def gen_helix_b(n: int = HELIX_DEFAULT_N) -> MultiViewDataset:
    if n < 10:
        raise ValueError("n must be >= 10")
    x1, x2 = _helix_angles(n)
    return MultiViewDataset(
        views=(
            ViewDataset(points=_helix_b_transform(x1), view_id=0),
            ViewDataset(points=_helix_b_transform(x2), view_id=1),
        ),
        latent=x1,
    )


def gen_deformed_plane(n: int = DEFORMED_PLANE_DEFAULT_N,
                       seed: int = 0) -> MultiViewDataset:
    """Uniform plane samples pushed through two non-bijective deformations."""
    if n < 10:
        raise ValueError("n must be >= 10")
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0.0, 3.0 * np.pi / 2.0, size=n)
    x2 = rng.uniform(0.0, 21.0, size=n)
    view1 = np.column_stack([
        x1 * np.cos(0.65 * x1),
        0.2 * x2 + 0.3 * np.sin(x1),
        x1 * np.cos(x1),
    ])
    view2 = np.column_stack([
        x2 + np.sin(2.0 * x1) + 0.4 * np.cos(x2),
        x1 + np.sin(x2) + 0.3 * np.cos(2.0 * x1),
        np.sin(x1) + np.cos(x2),
    ])
    return MultiViewDataset(
        views=(ViewDataset(points=view1, view_id=0),
               ViewDataset(points=view2, view_id=1)),
        latent=np.column_stack([x1, x2]),
    )


def gen_multikernel_views(view: ViewDataset) -> list:
    """Squared-exponential, Laplacian and correlation kernels of one cloud."""
    if view.dim < 2:
        raise ValueError("correlation kernel needs at least 2 features")
    stds = view.points.std(axis=1)
    if np.any(stds == 0):
        bad = int(np.flatnonzero(stds == 0)[0])
        raise ValueError(f"point {bad} has zero variance, correlation undefined")
    sigma = maxmin_bandwidth(view)
    dists = squareform(pdist(view.points))
    k1 = np.exp(-dists ** 2 / (2.0 * sigma ** 2))
    k2 = np.exp(-dists / sigma)
    corr = np.corrcoef(view.points)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    k3 = np.exp((corr - 1.0) / (2.0 * sigma))
    kernels = []
    for k in (k1, k2, k3):
        np.fill_diagonal(k, 1.0)
        k = np.minimum(k, k.T)
        kernels.append(KernelMatrix(values=k, bandwidth=sigma))
    return kernels


def gen_noisy_pair(
    view: ViewDataset,
    s: float,
    mode: str = "gaussian_pair",
    seed: int = 0,
) -> MultiViewDataset:
    """Two noisy copies of one view.

    gaussian_pair: view 1 gets N(0, 0.3^2) noise, view 2 gets N(0, s^2).
    gaussian_dropout: view 1 gets N(0, s^2) noise, view 2 zeroes each
    coordinate independently with probability s.
    """
    if not 0 <= s < 1:
        raise ValueError("s must lie in [0, 1)")
    if mode not in ("gaussian_pair", "gaussian_dropout"):
        raise ValueError("mode must be gaussian_pair or gaussian_dropout")
    rng = np.random.default_rng(seed)
    x = view.points
    if mode == "gaussian_pair":
        v1 = x + rng.normal(0.0, 0.3, size=x.shape)
        v2 = x + rng.normal(0.0, s, size=x.shape) if s > 0 else x.copy()
    else:
        v1 = x + rng.normal(0.0, s, size=x.shape) if s > 0 else x.copy()
        keep = rng.random(size=x.shape) >= s
        v2 = np.where(keep, x, 0.0)
    return MultiViewDataset(views=(
        ViewDataset(points=v1, view_id=0),
        ViewDataset(points=v2, view_id=1),
    ))


def _read_csv_matrix(path: Path, skip_header: bool) -> np.ndarray:
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        for row_idx, row in enumerate(reader):
            if row_idx == 0 and skip_header:
                continue
            if not row:
                continue
            parsed = []
            for col_idx, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell at row {row_idx + 1}, "
                        f"column {col_idx + 1}: {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: empty file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: inconsistent column counts {sorted(widths)}")
    return np.asarray(rows)


def load_views(
    paths: Sequence,
    labels_path: Optional[str] = None,
    skip_header: bool = False,
) -> MultiViewDataset:
    """One CSV per view, row i = datapoint i; optional single-column labels."""
    matrices = [_read_csv_matrix(Path(p), skip_header) for p in paths]
    counts = {m.shape[0] for m in matrices}
    if len(counts) != 1:
        detail = ", ".join(
            f"{p} ({m.shape[0]} rows)" for p, m in zip(paths, matrices)
        )
        raise ValueError(f"views disagree on N: {detail}")
    labels = None
    if labels_path is not None:
        raw = _read_csv_matrix(Path(labels_path), skip_header)
        if raw.shape[1] != 1:
            raise ValueError(f"{labels_path}: labels must be a single column")
        if raw.shape[0] != matrices[0].shape[0]:
            raise ValueError(
                f"{labels_path}: {raw.shape[0]} labels for {matrices[0].shape[0]} points"
            )
        labels = raw[:, 0].astype(int)
    views = tuple(
        ViewDataset(points=m, view_id=v) for v, m in enumerate(matrices)
    )
    return MultiViewDataset(views=views, labels=labels)
