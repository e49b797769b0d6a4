"""Diffusion horizon selection via singular entropy and Kneedle elbows."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mvdt.kernels import TransitionMatrix, _frozen_array
from mvdt.operator_space import OperatorSet
from mvdt.trajectory import expected_operator

DEFAULT_T_MAX = 30
KNEEDLE_SENSITIVITY = 1.0


@dataclass(frozen=True)
class EntropyCurve:
    times: np.ndarray
    entropies: np.ndarray
    elbow: int
    elbow_fallback: bool = False

    def __post_init__(self):
        times = np.asarray(self.times, dtype=int)
        entropies = np.asarray(self.entropies, dtype=float)
        if times.shape != entropies.shape:
            raise ValueError("times and entropies must align")
        if self.elbow not in times:
            raise ValueError("elbow must be one of the sampled times")
        object.__setattr__(self, "times", _frozen_array(times, dtype=int))
        object.__setattr__(self, "entropies", _frozen_array(entropies))


def singular_entropy(w: np.ndarray) -> float:
    """Shannon entropy of the sum-normalized singular value spectrum."""
    w = np.asarray(w, dtype=float)
    sv = np.linalg.svd(w, compute_uv=False)
    total = sv.sum()
    if total <= 0:
        raise ValueError("all-zero matrix has no singular entropy")
    p = sv / total
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def _kneedle(xs: np.ndarray, ys: np.ndarray,
             sensitivity: float = KNEEDLE_SENSITIVITY) -> Optional[int]:
    """Index of the knee of a decreasing convex curve, or None.

    Min-max normalizes both axes, flips y so the curve is increasing, and
    scans the difference curve y_d = y_flipped - x for a local maximum whose
    threshold (max minus S times the mean x-spacing) is crossed afterwards.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x_range = xs[-1] - xs[0]
    y_range = ys.max() - ys.min()
    if x_range <= 0 or y_range <= 0:
        return None
    x_n = (xs - xs[0]) / x_range
    y_n = (ys - ys.min()) / y_range
    y_d = (1.0 - y_n) - x_n
    n = len(xs)
    maxima = [
        i for i in range(1, n - 1)
        if y_d[i] > y_d[i - 1] and y_d[i] >= y_d[i + 1]
    ]
    if not maxima:
        return None
    mean_dx = float(np.mean(np.diff(x_n)))
    for pos, i in enumerate(maxima):
        threshold = y_d[i] - sensitivity * mean_dx
        stop = maxima[pos + 1] if pos + 1 < len(maxima) else n
        for j in range(i + 1, stop):
            if y_d[j] < threshold:
                return i
    return None


def elbow_detect(xs, ys) -> int:
    """Kneedle elbow index; falls back to the maximum of the discrete
    second difference when no knee is found."""
    idx, _ = elbow_detect_with_fallback(xs, ys)
    return idx


def elbow_detect_with_fallback(xs, ys) -> tuple:
    """(index, used_fallback) variant of elbow_detect."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3 or len(xs) != len(ys):
        raise ValueError("need at least 3 aligned points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    if np.ptp(ys) <= 1e-12 * max(1.0, float(np.max(np.abs(ys)))):
        # flat curve up to rounding, e.g. a rank-one mean operator whose
        # entropies are all numerically zero: earliest time wins
        return 0, True
    idx = _kneedle(xs, ys)
    if idx is not None:
        return idx, False
    curvature = np.abs(np.diff(ys, 2))
    return int(np.argmax(curvature)) + 1, True


def entropy_curve(
    operator_set: OperatorSet,
    mu: Optional[np.ndarray] = None,
    t_max: int = DEFAULT_T_MAX,
) -> EntropyCurve:
    """Singular entropy of the expected operator for t = 1..t_max."""
    if t_max < 3:
        raise ValueError("t_max must be >= 3")
    if mu is None:
        mu = np.full(len(operator_set), 1.0 / len(operator_set))
    mean = expected_operator(operator_set, mu, 1)
    times = np.arange(1, t_max + 1)
    entropies = []
    current = np.eye(operator_set.n)
    for _ in times:
        current = current @ mean
        entropies.append(singular_entropy(current))
    entropies = np.asarray(entropies)
    idx, fallback = elbow_detect_with_fallback(times, entropies)
    return EntropyCurve(times=times, entropies=entropies,
                        elbow=int(times[idx]), elbow_fallback=fallback)


def entropy_horizon(p: TransitionMatrix, t_max: int = DEFAULT_T_MAX) -> int:
    """Elbow time of the single-operator entropy curve (per-view horizon)."""
    opset = OperatorSet(operators=(p,), tags=("view:0",))
    return entropy_curve(opset, t_max=t_max).elbow
