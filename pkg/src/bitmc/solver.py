"""Nonmonotone spectral projected-gradient (SPG) solver.

Minimises the negative log-likelihood over a :class:`ConstraintSet`. Each
iteration builds the projected direction ``d = P(x - gamma g) - x`` from a
Barzilai-Borwein step ``gamma`` and backtracks along ``x + a d``. Only when
that fails is the curvilinear path ``P(x - a gamma g)`` searched, which costs
one projection per trial step.

Acceptance uses the Grippo-Lampariello-Lucidi rule: a trial point is
accepted when its objective is at most ``max(last t values) + armijo * delta``
where ``delta`` is ``a <g, d>`` (linear) or ``<g, x(a) - x>`` (curvilinear).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import rank_truncate
from .links import Link
from .objective import value_and_grad
from .obsmodel import ObservationSet
from .projections import AdmmOptions, ConstraintSet, project_intersection, project_nuclear_ball

__all__ = [
    "SolverOptions",
    "StepRecord",
    "Solution",
    "solve",
    "spectral_step",
    "optimality_residual",
    "debias",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 2000
    opt_tol: float = 1e-4
    history_len: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    gamma_min: float = 1e-10
    gamma_max: float = 1e10
    max_backtracks: int = 20
    time_limit: Optional[float] = None  # seconds
    # record the worst constraint violation over accepted iterates (one extra SVD each)
    check_feasibility: bool = False
    admm: AdmmOptions = field(default_factory=AdmmOptions)

    def __post_init__(self):
        if self.max_iters < 1 or self.history_len < 1 or self.max_backtracks < 1:
            raise ValueError("iteration counts must be positive")
        if not self.opt_tol > 0:
            raise ValueError("opt_tol must be positive")
        if not (0 < self.armijo < 1 and 0 < self.backtrack < 1):
            raise ValueError("armijo and backtrack must lie in (0, 1)")
        if not 0 < self.gamma_min <= self.gamma_max:
            raise ValueError("need 0 < gamma_min <= gamma_max")


@dataclass(frozen=True)
class StepRecord:
    """One accepted step, kept so the acceptance rule can be re-checked."""

    kind: str  # "linear" or "curvilinear"
    f_ref: float  # max of the last t objective values
    decrease: float  # directional term (negative), before the armijo factor
    f_new: float
    step: float
    gamma: float


@dataclass
class Solution:
    x_hat: np.ndarray
    objective_trace: list
    residual: float
    iterations: int
    converged: bool
    line_search_kind_counts: tuple
    status: str = ""
    residual_trace: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    clamp_hits: int = 0
    admm_failures: int = 0
    max_admm_gap: float = 0.0
    wall_ms: float = 0.0
    # (max ||x_k||_* / tau - 1, max ||x_k||_inf - kappa); only with check_feasibility
    max_violation: Optional[tuple] = None

    def diagnostics(self) -> dict:
        """JSON-ready summary (everything except the matrix)."""
        return {
            "converged": self.converged,
            "status": self.status,
            "iterations": self.iterations,
            "residual": self.residual,
            "objective": self.objective_trace[-1],
            "objective_trace": list(self.objective_trace),
            "residual_trace": list(self.residual_trace),
            "line_search_counts": {
                "linear": self.line_search_kind_counts[0],
                "curvilinear": self.line_search_kind_counts[1],
            },
            "clamp_hits": self.clamp_hits,
            "admm_failures": self.admm_failures,
            "max_admm_gap": self.max_admm_gap,
            "wall_ms": self.wall_ms,
            "max_violation": None
            if self.max_violation is None
            else [v if np.isfinite(v) else None for v in self.max_violation],
        }


def spectral_step(s, y, opts: SolverOptions = SolverOptions()) -> float:
    """Barzilai-Borwein step ``<s, s> / <s, y>`` clipped to ``[gamma_min, gamma_max]``."""
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sy = float(np.vdot(s, y))
    if sy <= 0:
        return opts.gamma_max
    return float(min(max(float(np.vdot(s, s)) / sy, opts.gamma_min), opts.gamma_max))


class _Projector:
    """Projection onto the feasible set that tallies ADMM diagnostics."""

    def __init__(self, c: ConstraintSet, admm: AdmmOptions):
        self.c = c
        self.admm = admm
        self.failures = 0
        self.max_gap = 0.0

    def __call__(self, x):
        if self.c.kappa is None:
            return project_nuclear_ball(x, self.c.tau)
        z, info = project_intersection(x, self.c, self.admm, return_info=True)
        if not info.converged:
            self.failures += 1
        self.max_gap = max(self.max_gap, info.gap)
        return z


def optimality_residual(x, grad, c: ConstraintSet, admm: Optional[AdmmOptions] = None) -> float:
    """``||P(x - grad) - x||_F / max(1, ||x||_F)``; zero exactly at a stationary point."""
    return _residual(x, grad, _Projector(c, admm or AdmmOptions()))


def _residual(x, grad, proj):
    return float(np.linalg.norm(proj(x - grad) - x) / max(1.0, float(np.linalg.norm(x))))


def solve(
    obs: ObservationSet,
    link: Link,
    c: ConstraintSet,
    opts: Optional[SolverOptions] = None,
    x0=None,
) -> Solution:
    """Maximum-likelihood estimate of the matrix under the constraint set `c`.

    Solves ``min -L(X)`` subject to ``||X||_* <= tau`` (and ``||X||_inf <=
    kappa`` when ``c.kappa`` is set). The start point defaults to the zero
    matrix, which is feasible for every constraint set.
    """
    if not isinstance(c, ConstraintSet):
        raise TypeError("c must be a ConstraintSet")
    opts = opts or SolverOptions()
    t_start = time.perf_counter()
    proj = _Projector(c, opts.admm)

    x = np.zeros(obs.shape) if x0 is None else proj(np.asarray(x0, dtype=np.float64))
    state = value_and_grad(x, obs, link)
    f, g = state.value, state.grad
    clamp_hits = state.clamped
    trace = [f]
    residual = _residual(x, g, proj)
    res_trace = [residual]
    steps: list[StepRecord] = []
    counts = [0, 0]

    g_inf = float(np.max(np.abs(g)))
    gamma = min(max(1.0 / g_inf, opts.gamma_min), opts.gamma_max) if g_inf > 0 else 1.0

    violation = _violation(x, c) if opts.check_feasibility else None
    best_x, best_f = x, f
    status = ""
    converged = residual <= opts.opt_tol
    k = 0
    if converged:
        status = "optimal"
    while not converged:
        if k >= opts.max_iters:
            status = "iteration limit"
            break
        if opts.time_limit is not None and time.perf_counter() - t_start > opts.time_limit:
            status = "time limit"
            break
        f_ref = max(trace[-opts.history_len:])

        accepted = None
        # linear search along d = P(x - gamma g) - x
        d = proj(x - gamma * g) - x
        gtd = float(np.vdot(g, d))
        if gtd < 0:
            a = 1.0
            for _ in range(opts.max_backtracks):
                xn = x + a * d
                sn = value_and_grad(xn, obs, link)
                if sn.value <= f_ref + opts.armijo * a * gtd:
                    accepted = StepRecord("linear", f_ref, a * gtd, sn.value, a, gamma)
                    break
                a *= opts.backtrack
        if accepted is None:
            # curvilinear search along P(x - a gamma g)
            a = 1.0
            for _ in range(opts.max_backtracks):
                xn = proj(x - a * gamma * g)
                delta = float(np.vdot(g, xn - x))
                if delta >= 0:
                    a *= opts.backtrack
                    continue
                sn = value_and_grad(xn, obs, link)
                if sn.value <= f_ref + opts.armijo * delta:
                    accepted = StepRecord("curvilinear", f_ref, delta, sn.value, a, gamma)
                    break
                a *= opts.backtrack
        if accepted is None:
            status = "line search failure"
            break

        counts[0 if accepted.kind == "linear" else 1] += 1
        steps.append(accepted)
        s_vec = xn - x
        y_vec = sn.grad - g
        x, f, g = xn, sn.value, sn.grad
        clamp_hits += sn.clamped
        trace.append(f)
        k += 1
        if f < best_f:
            best_x, best_f = x, f
        if violation is not None:
            violation = tuple(map(max, violation, _violation(x, c)))
        gamma = spectral_step(s_vec, y_vec, opts)
        residual = _residual(x, g, proj)
        res_trace.append(residual)
        if residual <= opts.opt_tol:
            converged = True
            status = "optimal"

    if not converged and best_f < f:
        x = best_x
        residual = _residual(x, value_and_grad(x, obs, link).grad, proj)
    if not converged:
        logger.info("SPG stopped without convergence (%s) after %d iterations, residual %.3g", status, k, residual)
    return Solution(
        x_hat=x,
        objective_trace=trace,
        residual=residual,
        iterations=k,
        converged=converged,
        line_search_kind_counts=(counts[0], counts[1]),
        status=status,
        residual_trace=res_trace,
        steps=steps,
        clamp_hits=clamp_hits,
        admm_failures=proj.failures,
        max_admm_gap=proj.max_gap,
        wall_ms=1000.0 * (time.perf_counter() - t_start),
        max_violation=violation,
    )


def _violation(x, c: ConstraintSet) -> tuple:
    nuc = float(np.sum(np.linalg.svd(x, compute_uv=False)))
    box = float(np.max(np.abs(x))) - c.kappa if c.kappa is not None else -np.inf
    return (nuc / c.tau - 1.0, box)


def debias(x_hat, r: int) -> np.ndarray:
    """Hard-threshold the recovered matrix to rank `r`."""
    return rank_truncate(x_hat, r)
