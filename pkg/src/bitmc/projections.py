"""Euclidean projections onto the nuclear-norm ball and its intersection with a box.

The nuclear-ball projection is exact (singular-value soft thresholding with
the threshold found by a sort-and-scan). The intersection with the box
``{|X_ij| <= kappa}`` has no closed form and is computed by ADMM with a
geometrically increasing penalty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .linalg import as_matrix, svd

__all__ = [
    "ConstraintSet",
    "AdmmOptions",
    "AdmmInfo",
    "project_box",
    "soft_threshold",
    "nuclear_threshold",
    "project_nuclear_ball",
    "project_intersection",
    "project",
]


@dataclass(frozen=True)
class ConstraintSet:
    """``{X : ||X||_* <= tau}``, intersected with ``{||X||_inf <= kappa}`` when `kappa` is set."""

    tau: float
    kappa: Optional[float] = None

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"nuclear-norm radius tau must be positive, got {self.tau}")
        if self.kappa is not None and not self.kappa > 0:
            raise ValueError(f"box bound kappa must be positive, got {self.kappa}")

    @classmethod
    def from_alpha(cls, alpha: float, r: int, d1: int, d2: int, box: bool = True) -> "ConstraintSet":
        """``tau = alpha sqrt(r d1 d2)`` and, if `box`, ``kappa = alpha``."""
        return cls(alpha * math.sqrt(r * d1 * d2), alpha if box else None)

    def scaled(self, c: float) -> "ConstraintSet":
        return ConstraintSet(self.tau * c, None if self.kappa is None else self.kappa * c)


@dataclass(frozen=True)
class AdmmOptions:
    mu0: float = 1.0
    growth: float = 1.05
    # None means 1e-6 * max(1, ||clip(x)||_F), at most 1e-6 * max(1, kappa sqrt(d1 d2))
    eps: Optional[float] = None
    max_iters: int = 500

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if not self.growth > 1:
            raise ValueError("growth must exceed 1")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


class AdmmInfo(NamedTuple):
    iterations: int
    converged: bool
    gap: float  # ||W - Z||_F at the returned iterate
    w_inf: float
    z_inf: float
    shortcut: Optional[str]


def project_box(x, kappa: float) -> np.ndarray:
    """Entrywise clamp to ``[-kappa, kappa]``."""
    return np.clip(np.asarray(x, dtype=np.float64), -kappa, kappa)


def soft_threshold(x, lam: float) -> np.ndarray:
    """``U max(S - lam, 0) V^T``."""
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    u, s, v = svd(x)
    s = np.maximum(s - lam, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ v[:, keep].T


def nuclear_threshold(s, tau: float) -> float:
    """Smallest ``lam >= 0`` with ``sum(max(s - lam, 0)) <= tau``.

    `s` must be sorted in nonincreasing order.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.sum() <= tau:
        return 0.0
    csum = np.cumsum(s)
    k = np.arange(1, s.size + 1)
    lam = (csum - tau) / k
    # last index where the k-th value is still above its candidate threshold
    active = np.nonzero(s > lam)[0]
    return float(max(lam[active[-1]], 0.0))


def _project_nuclear_svd(x, tau):
    u, s, v = svd(x)
    if s.sum() <= tau:
        return x.copy(), False
    s = np.maximum(s - nuclear_threshold(s, tau), 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ v[:, keep].T, True


def project_nuclear_ball(x, tau: float) -> np.ndarray:
    """Exact projection onto ``{||X||_* <= tau}``; returns a copy of `x` if inside."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    x = as_matrix(x, "x")
    return _project_nuclear_svd(x, tau)[0]


def project_intersection(
    x,
    c: ConstraintSet,
    opts: Optional[AdmmOptions] = None,
    *,
    shortcut: bool = True,
    return_info: bool = False,
):
    """Projection onto ``{||X||_* <= tau, ||X||_inf <= kappa}`` by ADMM.

    Splits the problem as ``min 1/2 ||X - W||^2`` over ``W`` in the box and
    ``Z`` in the nuclear ball subject to ``W = Z``, and iterates::

        W <- clip((X + Y + mu Z) / (1 + mu), -kappa, kappa)
        Z <- P_nuc(W - Y / mu)
        Y <- Y - mu (W - Z);  mu <- growth * mu

    until ``||W - Z||_F <= eps`` and ``||Z||_inf - kappa <= eps``; ``Z`` is
    returned. With `shortcut`, the two cases where one of the single-set
    projections already lands in the other set are returned exactly without
    iterating.

    If the iteration cap is hit, the ``Z`` iterate with the smallest
    ``||W - Z||_F`` is returned and ``info.converged`` is False.
    """
    if c.kappa is None:
        raise ValueError("project_intersection needs a box bound kappa")
    opts = opts or AdmmOptions()
    x = as_matrix(x, "x")
    tau, kappa = c.tau, c.kappa

    def done(z, info):
        return (z, info) if return_info else z

    w = project_box(x, kappa)
    # scale by the clipped input: ||x||_F is unbounded under long gradient steps
    eps = opts.eps if opts.eps is not None else 1e-6 * max(1.0, float(np.linalg.norm(w)))
    z, moved = _project_nuclear_svd(w, tau)
    if shortcut:
        if not moved:
            return done(w, AdmmInfo(0, True, 0.0, float(np.max(np.abs(w))), float(np.max(np.abs(w))), "box"))
        z1, moved1 = _project_nuclear_svd(x, tau)
        z1_inf = float(np.max(np.abs(z1)))
        if z1_inf <= kappa:
            return done(z1, AdmmInfo(0, True, 0.0, z1_inf, z1_inf, "nuclear"))

    y = np.zeros_like(x)
    mu = opts.mu0
    best = (math.inf, z, w)
    k = 0
    while k < opts.max_iters:
        w = project_box((x + y + mu * z) / (1.0 + mu), kappa)
        z, _ = _project_nuclear_svd(w - y / mu, tau)
        diff = w - z
        y = y - mu * diff
        mu *= opts.growth
        k += 1
        gap = float(np.linalg.norm(diff))
        z_inf = float(np.max(np.abs(z)))
        if gap < best[0]:
            best = (gap, z, w)
        if gap <= eps and z_inf - kappa <= eps:
            return done(z, AdmmInfo(k, True, gap, float(np.max(np.abs(w))), z_inf, None))
    gap, z, w = best
    return done(z, AdmmInfo(k, False, gap, float(np.max(np.abs(w))), float(np.max(np.abs(z))), None))


def project(x, c: ConstraintSet, admm: Optional[AdmmOptions] = None) -> np.ndarray:
    """Projection onto `c`, dispatching on whether a box bound is present."""
    if c.kappa is None:
        return project_nuclear_ball(x, c.tau)
    return project_intersection(x, c, admm)
