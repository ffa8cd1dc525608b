"""Exploration distributions over a player's action set.

``g_optimal`` solves the G-optimal design problem over 0/1 facility features
with Wynn's (Frank-Wolfe) iteration on the D-optimal objective; by the
Kiefer-Wolfowitz equivalence the optimal max-leverage equals the dimension
of the feature span.  ``semi_bandit_exploration`` builds the cheaper
facility-cover distribution used with per-facility feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPAN_TOL = 1e-10


@dataclass
class DesignAllocation:
    weights: np.ndarray
    achieved_g: float
    rank: int
    converged: bool
    iterations: int
    logdet_history: list[float] = field(default_factory=list)


def span_coordinates(features: np.ndarray) -> np.ndarray:
    """Coordinates of every feature row in an orthonormal basis of their span."""
    X = np.asarray(features, dtype=float)
    if not X.size:
        return np.zeros((X.shape[0], 0))
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    rank = int((s > SPAN_TOL * max(s.max(), 1.0)).sum())
    return X @ vt[:rank].T


def leverages(coords: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """z_a^T Sigma(weights)^{-1} z_a for every row z_a."""
    cov = coords.T @ (weights[:, None] * coords)
    sol = np.linalg.solve(cov, coords.T)
    return np.einsum("ij,ji->i", coords, sol)


def g_optimal(
    features: np.ndarray,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    track_logdet: bool = False,
) -> DesignAllocation:
    """Approximate G-optimal design over the rows of ``features``.

    Args:
        features: (num_actions, dim) feature matrix, one row per action.
        tol: stop once max leverage <= rank * (1 + tol).
        max_iter: iteration cap; reaching it sets ``converged=False``.
        track_logdet: record log det of the span covariance after every
            iteration (for monotonicity checks).
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D array")
    n = X.shape[0]
    nonzero = np.abs(X).sum(axis=1) > 0
    if not nonzero.any():
        w = np.zeros(n)
        w[0] = 1.0
        return DesignAllocation(w, 0.0, 0, True, 0)

    Z = span_coordinates(X)
    r = Z.shape[1]
    w = np.where(nonzero, 1.0, 0.0)
    w /= w.sum()
    cov_inv = np.linalg.inv(Z.T @ (w[:, None] * Z))
    history: list[float] = []
    if track_logdet:
        history.append(float(np.linalg.slogdet(Z.T @ (w[:, None] * Z))[1]))

    converged = False
    it = 0
    for it in range(max_iter + 1):
        if it and it % 200 == 0:
            cov_inv = np.linalg.inv(Z.T @ (w[:, None] * Z))
        g = np.einsum("ij,jk,ik->i", Z, cov_inv, Z)
        j = int(np.argmax(g))
        g_star = float(g[j])
        if g_star <= r * (1.0 + tol):
            converged = True
            break
        if it == max_iter:
            break
        step = (g_star / r - 1.0) / (g_star - 1.0)
        w *= 1.0 - step
        w[j] += step
        # Sherman-Morrison on (1 - step) * Sigma + step * z z^T
        base = cov_inv / (1.0 - step)
        u = base @ Z[j]
        cov_inv = base - step * np.outer(u, u) / (1.0 + step * (Z[j] @ u))
        if track_logdet:
            history.append(float(np.linalg.slogdet(Z.T @ (w[:, None] * Z))[1]))

    w = np.maximum(w, 0.0)
    w /= w.sum()
    achieved = float(leverages(Z, w).max())
    return DesignAllocation(w, achieved, r, converged, it, history)


def semi_bandit_exploration(actions: Sequence[Sequence[int]], num_facilities: int) -> np.ndarray:
    """Facility-cover exploration distribution.

    Scans actions in declared order and keeps every action that covers a
    facility not covered yet.  Each kept action gets mass ``1 / (2F)``; the
    remaining mass is spread uniformly over the other actions, or over the
    kept ones when nothing else remains.  Every facility appearing in some
    action then has inclusion probability at least ``1 / (2F)``.
    """
    if not actions:
        raise ValueError("action list must be non-empty")
    if num_facilities < 1:
        raise ValueError("need at least one facility")
    all_facilities = set().union(*(set(a) for a in actions))
    covered: set[int] = set()
    cover = []
    for j, act in enumerate(actions):
        if covered >= all_facilities:
            break
        if not set(act) <= covered:
            cover.append(j)
            covered |= set(act)
    rho = np.zeros(len(actions))
    base = 1.0 / (2 * num_facilities)
    rho[cover] = base
    rest = [j for j in range(len(actions)) if j not in set(cover)]
    remaining = 1.0 - base * len(cover)
    target = rest if rest else cover
    rho[target] += remaining / len(target)
    return rho
