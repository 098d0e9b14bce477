"""Experiment harness: single recoveries, noise and sample-size sweeps, ratings evaluation.

Each runner takes an :class:`ExperimentConfig`, returns a plain dict, and
(when ``config.output`` is set) writes CSV/JSON files there. Numeric CSV
output depends only on the configuration, so identical configs reproduce
byte-identical files; timings go to JSON only.

Synthetic observations follow the latent-variable form: a random rank-r
matrix scaled to max-abs 1, Gaussian noise of standard deviation sigma added
to the sampled entries, and the sign recorded. The matching probit link is
used for recovery. With ``link = "logistic"`` the observations are drawn from
the logistic link directly instead.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import dataio
from .links import Link, parse_link, probit
from .metrics import hellinger_sq, rel_fro_error, sign_accuracy
from .obsmodel import (
    sample_observations,
    sample_observations_latent,
    sample_omega,
    synth_low_rank,
)
from .projections import AdmmOptions, ConstraintSet
from .solver import SolverOptions, debias, solve

__all__ = [
    "CONFIG_SCHEMA",
    "CONFIG_VERSION",
    "ConfigError",
    "DatasetMissing",
    "ExperimentConfig",
    "load_config",
    "derive_seed",
    "config_hash",
    "loglog_slope",
    "run_recover",
    "run_sweep_sigma",
    "run_sweep_n",
    "run_recsys_eval",
    "run",
    "REFERENCE_STANDARD",
    "REFERENCE_ONEBIT",
]

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = "bitmc.config"
CONFIG_VERSION = 1

KINDS = ("recover", "sweep_sigma", "sweep_n", "recsys_eval")
PROGRAMS = ("box", "nuclear")

# Reference MovieLens-100k sign accuracies, per rating 1..5 and overall.
REFERENCE_ONEBIT = ({1: 0.79, 2: 0.73, 3: 0.58, 4: 0.75, 5: 0.89}, 0.73)
REFERENCE_STANDARD = ({1: 0.64, 2: 0.56, 3: 0.44, 4: 0.65, 5: 0.75}, 0.60)


class ConfigError(ValueError):
    pass


class DatasetMissing(FileNotFoundError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d1: int = 100
    d2: int = 100
    r: int = 1
    ranks: Optional[tuple] = None  # sweep_n; defaults to (r,)
    alpha: float = 1.0
    n_fraction: float = 0.15  # n / (d1 d2)
    n_fractions: tuple = (0.15, 0.25, 0.35, 0.45, 0.6)
    sigma: float = 0.18
    sigma_grid: tuple = tuple(np.logspace(-2, 1, 9).tolist())
    # None: probit at the configured sigma for synthetic runs, logistic for recsys_eval
    link: Optional[str] = None
    programs: tuple = ("nuclear",)
    kappa: Optional[object] = None  # recover: true -> alpha, number -> that bound
    replicates: int = 5
    seed: int = 0
    debias: bool = True
    solver: dict = field(default_factory=dict)
    workers: int = 1
    observations: Optional[str] = None
    ratings: Optional[str] = None
    ratings_format: str = "tsv_uirt"
    holdout_fraction: float = 0.05
    threshold: Optional[float] = None
    output: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.d1 < 1 or self.d2 < 1:
            raise ConfigError("dimensions must be positive")
        if not 1 <= self.r <= min(self.d1, self.d2):
            raise ConfigError(f"rank r={self.r} out of range")
        if self.ranks is not None and (not self.ranks or any(not 1 <= q <= min(self.d1, self.d2) for q in self.ranks)):
            raise ConfigError("ranks must be a nonempty list of valid ranks")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not self.sigma_grid or any(s <= 0 for s in self.sigma_grid):
            raise ConfigError("sigma_grid must be a nonempty list of positive values")
        if not self.n_fractions or any(not 0 <= q <= 1 for q in self.n_fractions):
            raise ConfigError("n_fractions must be a nonempty list in [0, 1]")
        if not 0 <= self.n_fraction <= 1:
            raise ConfigError("n_fraction must lie in [0, 1]")
        if not self.programs or any(p not in PROGRAMS for p in self.programs):
            raise ConfigError(f"programs must be a nonempty subset of {PROGRAMS}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.solver_options()
            self.base_link(self.sigma)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        schema = doc.pop("schema", CONFIG_SCHEMA)
        version = doc.pop("version", CONFIG_VERSION)
        if schema != CONFIG_SCHEMA or version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config schema {schema!r} version {version!r}")
        if "d" in doc:
            d = doc.pop("d")
            doc.setdefault("d1", d)
            doc.setdefault("d2", d)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in doc:
            raise ConfigError("config needs a 'kind'")
        doc["kind"] = doc["kind"].replace("-", "_")
        if doc["kind"] == "recsys_eval":
            doc.setdefault("alpha", 3.0)
            doc.setdefault("r", 10)
        for key in ("ranks", "n_fractions", "sigma_grid", "programs"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        doc = asdict(self)
        for k, v in doc.items():
            if isinstance(v, tuple):
                doc[k] = list(v)
        return {"schema": CONFIG_SCHEMA, "version": CONFIG_VERSION, **doc}

    def full_scale(self) -> "ExperimentConfig":
        """Larger dimensions and replicate counts for the full-size sweeps."""
        if self.kind == "sweep_sigma":
            return replace(self, d1=500, d2=500, replicates=15)
        if self.kind == "sweep_n":
            return replace(self, d1=200, d2=200, ranks=(3, 5, 10))
        return self

    def solver_options(self) -> SolverOptions:
        opts = dict(self.solver)
        admm = opts.pop("admm", None)
        if admm is not None:
            opts["admm"] = AdmmOptions(**admm)
        return SolverOptions(**opts)

    def base_link(self, sigma: float) -> Link:
        """Link used for both synthesis and recovery at noise level `sigma`."""
        name = self.link or ("logistic" if self.kind == "recsys_eval" else "probit")
        if name == "probit":
            return probit(sigma)
        return parse_link(name)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)


def config_hash(cfg: ExperimentConfig) -> str:
    """Short digest of every setting that can change numeric output."""
    doc = cfg.to_dict()
    for k in ("output", "workers"):
        doc.pop(k, None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def derive_seed(base: int, *keys: int) -> int:
    """Independent 64-bit seed for the cell identified by `keys`."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def loglog_slope(x, y) -> Optional[float]:
    """Least-squares slope of ``log y`` against ``log x``; None for fewer than two points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = np.isfinite(y) & (y > 0) & (x > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


# ---------------------------------------------------------------------------
# synthetic cells


def _synth_obs(cfg, link, m, omega, seed):
    if link.kind == "probit":
        return sample_observations_latent(m, omega, link.sigma, seed)
    return sample_observations(m, omega, link, seed)


def _errors(x_hat, m, link, r, do_debias):
    est = debias(x_hat, r) if do_debias else x_hat
    fro_sq = rel_fro_error(est, m)
    hell_sq = hellinger_sq(link.eval(m), link.eval(est))
    return {
        "rel_fro_sq": fro_sq,
        "rel_fro": math.sqrt(fro_sq),
        "hellinger_sq": hell_sq,
        "hellinger": math.sqrt(hell_sq),
    }


def _solve_cell(task):
    """Run one synthetic cell. Never raises: failures are reported in the row."""
    cfg, program, sigma, rank, nfrac, rep, keys = task
    seeds = {
        "matrix": derive_seed(cfg.seed, rank, rep, 0),
        "omega": derive_seed(cfg.seed, *keys, 1),
        "noise": derive_seed(cfg.seed, *keys, 2),
    }
    row = {"program": program, "sigma": sigma, "rank": rank, "n_fraction": nfrac, "replicate": rep, "seed": seeds["noise"]}
    try:
        d1, d2 = cfg.d1, cfg.d2
        link = cfg.base_link(sigma)
        m = synth_low_rank(d1, d2, rank, seeds["matrix"])
        omega = sample_omega(d1, d2, nfrac * d1 * d2, seeds["omega"])
        obs = _synth_obs(cfg, link, m, omega, seeds["noise"])
        c = ConstraintSet.from_alpha(cfg.alpha, rank, d1, d2, box=(program == "box"))
        sol = solve(obs, link, c, cfg.solver_options())
        row.update(_errors(sol.x_hat, m, link, rank, cfg.debias))
        row.update(
            n_obs=len(obs),
            converged=sol.converged,
            status=sol.status,
            iterations=sol.iterations,
            residual=sol.residual,
            max_violation=None if sol.max_violation is None else list(sol.max_violation),
            wall_ms=sol.wall_ms,
            ok=True,
        )
    except Exception as exc:  # a failing cell must not abort the sweep
        logger.warning("cell %s failed: %s", keys, exc)
        row.update(ok=False, converged=False, status=f"error: {exc}")
    return row


def _map(cfg, fn, tasks):
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_num(row.get(h)) for h in header) + "\n")


_CELL_COLS = [
    "config_hash", "seed", "program", "rank", "sigma", "n_fraction", "replicate", "n_obs",
    "ok", "converged", "status", "iterations", "residual",
    "rel_fro_sq", "rel_fro", "hellinger_sq", "hellinger",
]


def _mean(rows, key):
    vals = [r[key] for r in rows if r.get("ok") and r.get(key) is not None]
    return float(np.mean(vals)) if vals else None


def _summarise(cells, group_keys, cfg, chash):
    groups: dict = {}
    for row in cells:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)
    out = []
    for key in sorted(groups):
        rows = groups[key]
        summary = dict(zip(group_keys, key))
        summary.update(
            config_hash=chash,
            seed=cfg.seed,
            replicates=len(rows),
            failed=sum(not r["ok"] for r in rows),
            converged=sum(bool(r.get("converged")) for r in rows),
            max_residual=max((r["residual"] for r in rows if r.get("ok")), default=None),
            mean_rel_fro_sq=_mean(rows, "rel_fro_sq"),
            mean_rel_fro=_mean(rows, "rel_fro"),
            mean_hellinger_sq=_mean(rows, "hellinger_sq"),
            mean_hellinger=_mean(rows, "hellinger"),
        )
        summary["flag"] = "" if summary["failed"] == 0 else "failed_cells"
        out.append(summary)
    return out


def _emit(cfg, name, cells, summary, summary_cols, extra):
    if not cfg.output:
        return
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    for c in cells:
        c["config_hash"] = chash
    _write_csv(out / f"{name}_cells.csv", _CELL_COLS, cells)
    _write_csv(out / f"{name}.csv", summary_cols, summary)
    timing = {
        "wall_ms_total": float(sum(c.get("wall_ms") or 0.0 for c in cells)),
        "cells": [
            {k: c.get(k) for k in ("program", "rank", "sigma", "n_fraction", "replicate", "wall_ms", "max_violation")}
            for c in cells
        ],
    }
    (out / f"{name}.json").write_text(
        json.dumps({"config": cfg.to_dict(), "config_hash": chash, **extra, "timing": timing}, indent=2) + "\n",
        encoding="utf-8",
    )


def run_sweep_sigma(cfg: ExperimentConfig) -> dict:
    """Mean error over replicates for each (program, sigma).

    Within a replicate the matrix, sampling pattern and standard-normal noise
    draw are shared across noise levels, so the curves differ only through
    sigma.
    """
    nfrac = cfg.n_fraction
    tasks = [
        (cfg, prog, float(s), cfg.r, nfrac, rep, (cfg.r, rep))
        for prog in cfg.programs
        for s in cfg.sigma_grid
        for rep in range(cfg.replicates)
    ]
    cells = sorted(_map(cfg, _solve_cell, tasks), key=lambda c: (c["program"], c["sigma"], c["replicate"]))
    chash = config_hash(cfg)
    summary = _summarise(cells, ["program", "sigma"], cfg, chash)
    cols = ["config_hash", "seed", "program", "sigma", "replicates", "failed", "converged", "max_residual",
            "mean_rel_fro_sq", "mean_rel_fro", "mean_hellinger_sq", "mean_hellinger", "flag"]
    _emit(cfg, "sweep_sigma", cells, summary, cols, {"summary": summary})
    return {"config_hash": chash, "cells": cells, "summary": summary}


def run_sweep_n(cfg: ExperimentConfig) -> dict:
    """Mean errors for each (program, rank, n) plus log-log slopes against n."""
    ranks = cfg.ranks or (cfg.r,)
    tasks = [
        (cfg, prog, float(cfg.sigma), rank, float(q), rep, (rank, rep, qi))
        for prog in cfg.programs
        for rank in ranks
        for qi, q in enumerate(cfg.n_fractions)
        for rep in range(cfg.replicates)
    ]
    cells = sorted(_map(cfg, _solve_cell, tasks), key=lambda c: (c["program"], c["rank"], c["n_fraction"], c["replicate"]))
    chash = config_hash(cfg)
    summary = _summarise(cells, ["program", "rank", "n_fraction"], cfg, chash)
    for row in summary:
        row["n"] = row["n_fraction"] * cfg.d1 * cfg.d2
    slopes = []
    for prog in cfg.programs:
        for rank in ranks:
            rows = [s for s in summary if s["program"] == prog and s["rank"] == rank]
            n = [s["n"] for s in rows]
            slopes.append({
                "program": prog,
                "rank": rank,
                **{f"slope_{m}": loglog_slope(n, [s[f"mean_{m}"] for s in rows])
                   for m in ("rel_fro_sq", "rel_fro", "hellinger_sq", "hellinger")},
            })
    cols = ["config_hash", "seed", "program", "rank", "n_fraction", "n", "replicates", "failed", "converged",
            "max_residual", "mean_rel_fro_sq", "mean_rel_fro", "mean_hellinger_sq", "mean_hellinger", "flag"]
    _emit(cfg, "sweep_n", cells, summary, cols, {"summary": summary, "slopes": slopes})
    return {"config_hash": chash, "cells": cells, "summary": summary, "slopes": slopes}


def run_recover(cfg: ExperimentConfig) -> dict:
    """Solve once, from an observation file or from a synthetic draw.

    A ``kappa`` setting selects the box-constrained program; without it only
    the nuclear-norm ball is imposed.
    """
    m = None
    link = cfg.base_link(cfg.sigma)
    if cfg.observations:
        obs = dataio.read_observations(cfg.observations)
    else:
        seed_m, seed_o, seed_y = (derive_seed(cfg.seed, 0, k) for k in range(3))
        m = synth_low_rank(cfg.d1, cfg.d2, cfg.r, seed_m)
        omega = sample_omega(cfg.d1, cfg.d2, cfg.n_fraction * cfg.d1 * cfg.d2, seed_o)
        obs = _synth_obs(cfg, link, m, omega, seed_y)
    d1, d2 = obs.shape
    kappa = None
    if cfg.kappa is not None and cfg.kappa is not False:
        kappa = cfg.alpha if cfg.kappa is True else float(cfg.kappa)
    c = ConstraintSet(cfg.alpha * math.sqrt(cfg.r * d1 * d2), kappa)
    sol = solve(obs, link, c, cfg.solver_options())
    x_hat = debias(sol.x_hat, cfg.r) if cfg.debias and len(obs) else sol.x_hat
    metrics = {}
    if m is not None:
        metrics = _errors(sol.x_hat, m, link, cfg.r, cfg.debias)
    solver_doc = sol.diagnostics()
    solver_doc.update(program="box" if kappa is not None else "nuclear", tau=c.tau, kappa=kappa, link=link.name)
    result = {"config_hash": config_hash(cfg), "x_hat": x_hat, "solution": sol, "metrics": metrics, "solver": solver_doc}
    if cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        dataio.write_matrix(out / "x_hat.csv", x_hat)
        dataio.write_result(out / "result.json", cfg.to_dict(), cfg.seed, metrics, solver_doc)
    return result


def run_recsys_eval(cfg: ExperimentConfig) -> dict:
    """Ratings file -> binarise/split -> nuclear-ball ML (logistic) -> held-out sign accuracy."""
    path = cfg.ratings or os.environ.get("BITMC_RATINGS")
    if not path or not Path(path).is_file():
        raise DatasetMissing(path or "<no ratings path configured>")
    table = dataio.parse_ratings(path, cfg.ratings_format)
    split = dataio.binarize_split(table, cfg.holdout_fraction, cfg.seed, cfg.threshold)
    link = cfg.base_link(cfg.sigma)
    d1, d2 = table.shape
    c = ConstraintSet.from_alpha(cfg.alpha, cfg.r, d1, d2, box=False)
    sol = solve(split.train, link, c, cfg.solver_options())
    report = sign_accuracy(sol.x_hat, split.holdout)
    extra = [("1-bit matrix completion (reference)", *REFERENCE_ONEBIT),
             ("standard matrix completion (reference)", *REFERENCE_STANDARD)]
    csv_text = report.to_csv(extra_rows=extra)
    result = {
        "status": "ok",
        "config_hash": config_hash(cfg),
        "threshold": split.threshold,
        "n_train": len(split.train),
        "n_holdout": len(split.holdout),
        "report": report,
        "csv": csv_text,
        "solution": sol,
    }
    if cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "recsys_eval.csv").write_text(csv_text, encoding="utf-8")
        dataio.write_result(
            out / "recsys_eval.json",
            cfg.to_dict(),
            cfg.seed,
            {"accuracy_report": report.to_dict(), "threshold": split.threshold},
            sol.diagnostics(),
        )
    return result


def run(cfg: ExperimentConfig) -> dict:
    return {
        "recover": run_recover,
        "sweep_sigma": run_sweep_sigma,
        "sweep_n": run_sweep_n,
        "recsys_eval": run_recsys_eval,
    }[cfg.kind](cfg)
