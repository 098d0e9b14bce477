"""Negative log-likelihood of binary observations and its gradient."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .links import Link
from .obsmodel import ObservationSet

__all__ = ["ObjectiveState", "neg_log_likelihood", "gradient", "value_and_grad"]


class ObjectiveState(NamedTuple):
    value: float
    grad: np.ndarray
    # observations whose log-probability hit the p_min floor
    clamped: int


def _check(x, obs: ObservationSet) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != obs.shape:
        raise ValueError(f"matrix shape {x.shape} does not match observations {obs.shape}")
    return x


def _value(vals, obs, link):
    log_pos, log_neg = link.log_terms(vals)
    terms = np.where(obs.y > 0, log_pos, log_neg)
    # numpy's sum is pairwise, with a fixed reduction order
    value = -float(np.sum(terms)) if terms.size else 0.0
    clamped = int(np.count_nonzero(terms <= np.log(link.p_min)))
    return value, clamped


def neg_log_likelihood(x, obs: ObservationSet, link: Link) -> float:
    """``-sum_{(i,j) in Omega} log P(Y_ij = y_ij | X_ij)``."""
    x = _check(x, obs)
    if not len(obs):
        return 0.0
    return _value(x[obs.rows, obs.cols], obs, link)[0]


def _grad(vals, obs, link):
    pos, neg = link.score_terms(vals)
    g = np.zeros(obs.shape)
    g[obs.rows, obs.cols] = np.where(obs.y > 0, -pos, neg)
    return g


def gradient(x, obs: ObservationSet, link: Link) -> np.ndarray:
    """Gradient of :func:`neg_log_likelihood`; zero off the observed entries."""
    x = _check(x, obs)
    if not len(obs):
        return np.zeros(obs.shape)
    return _grad(x[obs.rows, obs.cols], obs, link)


def value_and_grad(x, obs: ObservationSet, link: Link) -> ObjectiveState:
    """Fused evaluation used by the line searches."""
    x = _check(x, obs)
    if not len(obs):
        return ObjectiveState(0.0, np.zeros(obs.shape), 0)
    vals = x[obs.rows, obs.cols]
    value, clamped = _value(vals, obs, link)
    return ObjectiveState(value, _grad(vals, obs, link), clamped)
