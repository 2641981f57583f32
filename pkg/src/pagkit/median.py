"""Geometric median and mean absolute deviation of sampled vector signals.

The implicit first-order condition (mean of unit vectors toward the data,
with the 0/0 irregularity resolved to 0) doubles as the convergence
residual, so a converged result certifies near-stationarity directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, NoConvergeError

#: iterate closer than this to a data point counts as anchored on it
_ANCHOR_DIST = 1e-14

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class MedianResult:
    mu: np.ndarray          # geometric median, d-vector
    mad: float              # mean absolute deviation at mu
    iterations: int
    residual: float         # optimality gap of the implicit equation


def scalar_median(samples) -> float:
    """Middle order statistic; even counts average the two middle values."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise EmptyInputError("scalar_median of empty input")
    return float(np.median(samples))


def mad_about(points, mu) -> float:
    """Mean Euclidean distance of the points from an arbitrary center."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mu = np.asarray(mu, dtype=float).reshape(points.shape[1])
    return float(np.mean(np.linalg.norm(points - mu, axis=1)))


def _residual_vector(points, mu):
    """Mean of unit vectors from mu toward the points (0/0 terms dropped).

    Returns (residual vector, number of anchored points).
    """
    diff = points - mu
    dist = np.linalg.norm(diff, axis=1)
    anchored = dist < _ANCHOR_DIST
    n_anchor = int(anchored.sum())
    if n_anchor:
        diff = diff[~anchored]
        dist = dist[~anchored]
    if dist.size == 0:
        return np.zeros(points.shape[1]), n_anchor
    return (diff / dist[:, None]).sum(axis=0) / points.shape[0], n_anchor


def geometric_median(points, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> MedianResult:
    """Weiszfeld fixed-point iteration for the spatial median of a point cloud.

    Initialized at the coordinate-wise median.  An iterate landing on a data
    point is kept if the implicit optimality condition holds there (residual
    not exceeding the anchored mass fraction), otherwise it is nudged off
    along the residual direction.  On success ``residual`` is the optimality
    gap and satisfies ``residual <= tol``.

    Raises NoConvergeError (with the best iterate attached) if the budget
    runs out.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise EmptyInputError("geometric_median of empty input")
    if tol <= 0:
        raise ValueError("tol must be positive")
    N = points.shape[0]
    spread = float(np.max(np.linalg.norm(points - points.mean(axis=0), axis=1)))

    mu = np.median(points, axis=0)
    gap = np.inf
    for it in range(1, max_iter + 1):
        diff = points - mu
        dist = np.linalg.norm(diff, axis=1)
        anchored = dist < _ANCHOR_DIST

        if anchored.any():
            r_vec, n_anchor = _residual_vector(points, mu)
            r = float(np.linalg.norm(r_vec))
            # An anchor is optimal iff the pull of the other points does not
            # exceed the anchored mass fraction.
            gap = max(0.0, r - n_anchor / N)
            if gap <= tol:
                return MedianResult(mu.copy(), mad_about(points, mu), it, gap)
            step = max(spread * 1e-12, _ANCHOR_DIST * 10)
            mu = mu + step * (r_vec / r)
            continue

        r_vec = (diff / dist[:, None]).sum(axis=0) / N
        gap = float(np.linalg.norm(r_vec))
        if gap <= tol:
            return MedianResult(mu.copy(), mad_about(points, mu), it, gap)
        w = 1.0 / dist
        mu = (points * w[:, None]).sum(axis=0) / w.sum()

    best = MedianResult(mu.copy(), mad_about(points, mu), max_iter, gap)
    raise NoConvergeError(f"no convergence after {max_iter} iterations", best=best)
