"""Link functions mapping a real matrix entry to P(Y = +1).

Two canonical links are provided, the logistic ``f(x) = 1 / (1 + exp(-x))``
and the probit ``f(x) = Phi(x / sigma)``. Arbitrary links can be wrapped with
:func:`custom`, given ``f`` and its derivative.

All evaluations are vectorised over numpy arrays. Probabilities are clamped
to ``[p_min, 1 - p_min]`` and log-probabilities floored at ``log(p_min)`` so
that the likelihood stays finite for arbitrarily large iterates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

__all__ = [
    "P_MIN",
    "Link",
    "logistic",
    "probit",
    "custom",
    "parse_link",
    "steepness",
    "flatness",
]

P_MIN = 1e-12

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Link:
    """Observation model ``f: R -> (0, 1)``.

    Use the :func:`logistic`, :func:`probit` and :func:`custom` constructors
    rather than building instances directly.
    """

    kind: str
    sigma: float = 1.0
    f: Optional[Callable] = None
    fprime: Optional[Callable] = None
    p_min: float = P_MIN

    def __post_init__(self):
        if self.kind not in ("logistic", "probit", "custom"):
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.kind == "probit" and not self.sigma > 0:
            raise ValueError(f"probit sigma must be positive, got {self.sigma}")
        if self.kind == "custom" and (self.f is None or self.fprime is None):
            raise ValueError("custom link needs both f and fprime")
        if not 0 < self.p_min < 0.5:
            raise ValueError("p_min must lie in (0, 0.5)")

    @property
    def name(self) -> str:
        if self.kind == "probit":
            return f"probit:{self.sigma:g}"
        return self.kind

    def _raw(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "logistic":
            return special.expit(x)
        if self.kind == "probit":
            return special.ndtr(x / self.sigma)
        return np.asarray(self.f(x), dtype=np.float64)

    def eval(self, x):
        """Probability of a +1 observation, clamped to ``[p_min, 1 - p_min]``."""
        out = np.clip(self._raw(x), self.p_min, 1.0 - self.p_min)
        return out if out.ndim else float(out)

    __call__ = eval

    def deriv(self, x):
        """Derivative ``f'(x)`` (unclamped)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "logistic":
            p = special.expit(x)
            out = p * (1.0 - p)
        elif self.kind == "probit":
            z = x / self.sigma
            out = np.exp(-0.5 * z * z - _LOG_SQRT_2PI) / self.sigma
        else:
            out = np.asarray(self.fprime(x), dtype=np.float64)
        return out if out.ndim else float(out)

    def _raw_log_terms(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "logistic":
            # log f(x) = -log(1 + e^{-x}),  log(1 - f(x)) = -log(1 + e^{x})
            return -np.logaddexp(0.0, -x), -np.logaddexp(0.0, x)
        if self.kind == "probit":
            z = x / self.sigma
            return special.log_ndtr(z), special.log_ndtr(-z)
        p = self._raw(x)
        with np.errstate(divide="ignore"):
            return np.log(p), np.log1p(-p)

    def log_terms(self, x):
        """Return ``(log f(x), log(1 - f(x)))``, each floored at ``log(p_min)``."""
        lo = math.log(self.p_min)
        a, b = self._raw_log_terms(x)
        a = np.maximum(a, lo)
        b = np.maximum(b, lo)
        if a.ndim == 0:
            return float(a), float(b)
        return a, b

    def score_terms(self, x):
        """Return ``(f'/f, f'/(1 - f))`` evaluated stably.

        These are the magnitudes of the per-entry derivative of the negative
        log-likelihood for ``y = +1`` and ``y = -1`` respectively.
        """
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "logistic":
            p = special.expit(x)
            return 1.0 - p, p
        if self.kind == "probit":
            z = x / self.sigma
            log_phi = -0.5 * z * z - _LOG_SQRT_2PI
            pos = np.exp(log_phi - special.log_ndtr(z)) / self.sigma
            neg = np.exp(log_phi - special.log_ndtr(-z)) / self.sigma
            return pos, neg
        p = np.clip(self._raw(x), self.p_min, 1.0 - self.p_min)
        d = np.asarray(self.fprime(x), dtype=np.float64)
        return d / p, d / (1.0 - p)

    def variance_ratio(self, x):
        """``f'(x) / (f(x) (1 - f(x)))`` computed without cancellation."""
        pos, neg = self.score_terms(x)
        # f'/(f(1-f)) = f'/f + f'/(1-f)
        return pos + neg


def logistic(p_min: float = P_MIN) -> Link:
    return Link("logistic", p_min=p_min)


def probit(sigma: float = 1.0, p_min: float = P_MIN) -> Link:
    return Link("probit", sigma=float(sigma), p_min=p_min)


def custom(f: Callable, fprime: Callable, p_min: float = P_MIN) -> Link:
    """Wrap a user supplied CDF-like ``f`` and its derivative ``fprime``."""
    return Link("custom", f=f, fprime=fprime, p_min=p_min)


def parse_link(text: str) -> Link:
    """Parse ``"logistic"`` or ``"probit:<sigma>"``."""
    text = text.strip()
    if text == "logistic":
        return logistic()
    if text.startswith("probit"):
        _, _, sig = text.partition(":")
        return probit(float(sig) if sig else 1.0)
    raise ValueError(f"cannot parse link {text!r}; expected 'logistic' or 'probit:<sigma>'")


_GRID_POINTS = 10001


def _grid_sup(func, alpha: float) -> float:
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        return float(func(np.zeros(1))[0])
    grid = np.linspace(-alpha, alpha, _GRID_POINTS)
    vals = func(grid)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, _GRID_POINTS - 1)]
    res = optimize.minimize_scalar(
        lambda t: -float(func(np.array([t]))[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if res.success and -res.fun > best:
        best = float(-res.fun)
    return best


def steepness(link: Link, alpha: float) -> float:
    """``sup_{|x| <= alpha} |f'(x)| / (f(x) (1 - f(x)))`` by grid search and local refinement."""
    return _grid_sup(lambda x: np.abs(link.variance_ratio(x)), alpha)


def flatness(link: Link, alpha: float) -> float:
    """``sup_{|x| <= alpha} f(x) (1 - f(x)) / f'(x)^2`` by grid search and local refinement."""

    def ratio(x):
        pos, neg = link.score_terms(x)
        # f(1-f)/f'^2 = 1 / ((f'/f) (f'/(1-f)))
        return 1.0 / (pos * neg)

    return _grid_sup(ratio, alpha)
