"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL|SKIPPED`` line; the lines are
also collected into an "acceptance criteria" section of the pytest summary.
Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline.
"""
import math
import os
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from bitmc.experiments import ExperimentConfig, run_recsys_eval, run_sweep_n, run_sweep_sigma
from bitmc.links import flatness, logistic, probit, steepness
from bitmc.metrics import hellinger_sq, kl_divergence
from bitmc.objective import gradient, neg_log_likelihood, value_and_grad
from bitmc.obsmodel import ObservationSet
from bitmc.projections import AdmmOptions, ConstraintSet, project_intersection, project_nuclear_ball

from oracles import project_nuclear_grid

REPO = Path(__file__).resolve().parents[1]
SOLVER = {"check_feasibility": True}


def random_obs(rng, d1, d2, frac=0.6):
    mask = rng.random((d1, d2)) < frac
    rows, cols = np.nonzero(mask)
    return ObservationSet(d1, d2, rows, cols, rng.choice([-1, 1], size=rows.size))


def fd_gradient(x, obs, link, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (neg_log_likelihood(x + e, obs, link) - neg_log_likelihood(x - e, obs, link)) / (2 * h)
    return g


def test_criterion_1_gradient(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = {}
    clamped = 0
    for link in (logistic(), probit(0.5), probit(1.0), probit(2.0)):
        err = 0.0
        for _ in range(50):
            # inside the p_min floor, where the likelihood is smooth
            x = rng.uniform(-2.0, 2.0, size=(8, 7))
            obs = random_obs(rng, 8, 7)
            clamped += value_and_grad(x, obs, link).clamped
            err = max(err, float(np.max(np.abs(gradient(x, obs, link) - fd_gradient(x, obs, link)))))
        worst[link.name] = err
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-6 and clamped == 0 and elapsed < 10
    detail = ", ".join(f"{k} max err {v:.2e}" for k, v in worst.items())
    assert criterion(1, ok, f"{detail}; {elapsed:.1f} s")


def test_criterion_2_nuclear_projection(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=(4, 4))
        for tau in (0.5, 1.0, 2.0):
            worst = max(worst, float(np.linalg.norm(project_nuclear_ball(x, tau) - project_nuclear_grid(x, tau))))
    expand = idem = 0.0
    for _ in range(200):
        tau = float(rng.uniform(0.2, 3.0))
        a, b = rng.normal(size=(2, 4, 4)) * rng.uniform(0.1, 3.0)
        pa, pb = project_nuclear_ball(a, tau), project_nuclear_ball(b, tau)
        expand = max(expand, np.linalg.norm(pa - pb) - np.linalg.norm(a - b))
        idem = max(idem, float(np.linalg.norm(project_nuclear_ball(pa, tau) - pa)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and expand <= 1e-12 and idem <= 1e-10 and elapsed < 30
    assert criterion(
        2, ok, f"oracle dist {worst:.2e}; expansion {expand:.1e}; idempotence {idem:.1e}; {elapsed:.1f} s"
    )


def test_criterion_3_admm(criterion):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    match = 0.0
    infeasible = 0
    for _ in range(50):
        x = rng.normal(size=(6, 6)) * rng.uniform(0.5, 3.0)
        tau = float(rng.uniform(0.5, 5.0))
        p = project_nuclear_ball(x, tau)
        inactive = ConstraintSet(tau, 1.5 * float(np.max(np.abs(p))) + 0.1)
        active = ConstraintSet(tau, 0.5 * float(np.max(np.abs(p))))
        # shortcut off so the ADMM iteration itself is exercised
        for c, shortcut in ((inactive, False), (inactive, True), (active, True)):
            z = project_intersection(x, c, AdmmOptions(), shortcut=shortcut)
            eps = 1e-6 * max(1.0, float(np.linalg.norm(np.clip(x, -c.kappa, c.kappa))))
            if c is inactive:
                match = max(match, float(np.linalg.norm(z - p)))
            nuc = float(np.sum(np.linalg.svd(z, compute_uv=False)))
            infeasible += nuc > c.tau + eps or float(np.max(np.abs(z))) > c.kappa + eps
    elapsed = time.perf_counter() - t0
    ok = match <= 1e-3 and infeasible == 0 and elapsed < 60
    assert criterion(3, ok, f"max dist to nuclear projection {match:.2e}; {infeasible} infeasible of 150; {elapsed:.1f} s")


def test_criterion_4_metric_inequalities(criterion):
    t0 = time.perf_counter()
    grid = np.arange(1, 100) / 100
    bad_h = bad_sq = 0
    for x in grid:
        for y in grid:
            kl = kl_divergence(x, y)
            bad_h += kl < hellinger_sq(x, y)
            bad_sq += kl > (x - y) ** 2 / (y * (1 - y))
    elapsed = time.perf_counter() - t0
    ok = bad_h == 0 and bad_sq == 0 and elapsed < 5
    assert criterion(4, ok, f"{bad_h} KL<H^2 and {bad_sq} chi-square violations on 99x99 grid; {elapsed:.1f} s")


def test_criterion_5_link_constants(criterion):
    alphas = (0.5, 1.0, 2.0, 4.0)
    lg = logistic()
    flat_err = max(abs(flatness(lg, a) / ((1 + math.exp(a)) ** 2 / math.exp(a)) - 1) for a in alphas)
    steep_err = max(abs(steepness(lg, a) - 1) for a in alphas)
    probit_ok = True
    for s in (0.5, 1.0, 2.0):
        for a in alphas:
            pl = probit(s)
            probit_ok &= steepness(pl, a) <= 8 * (a / s + 1) / s
            probit_ok &= flatness(pl, a) <= math.pi * s**2 * math.exp(a**2 / (2 * s**2))
    ok = flat_err <= 1e-6 and steep_err <= 1e-8 and probit_ok
    assert criterion(
        5, ok, f"logistic flatness rel err {flat_err:.1e}; steepness err {steep_err:.1e}; probit bounds {'hold' if probit_ok else 'violated'}"
    )


def sigma_config(out):
    return ExperimentConfig.from_dict(
        dict(kind="sweep_sigma", d=100, r=1, n_fraction=0.15, programs=["box", "nuclear"], replicates=5,
             solver=SOLVER, output=str(out))
    )


def n_config(out):
    return ExperimentConfig.from_dict(
        dict(kind="sweep_n", d=100, r=3, sigma=0.18, n_fractions=[0.15, 0.25, 0.35, 0.45, 0.6], replicates=5,
             solver=SOLVER, output=str(out))
    )


def ratings_path():
    env = os.environ.get("BITMC_RATINGS")
    if env:
        return Path(env)
    return REPO / "data" / "ml-100k" / "u.data"


def recsys_config(out):
    return ExperimentConfig.from_dict(
        dict(kind="recsys_eval", ratings=str(ratings_path()), solver=SOLVER, output=str(out))
    )


def timed(fn, cfg):
    t0 = time.perf_counter()
    res = fn(cfg)
    return cfg, res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep_sigma(tmp_path_factory):
    return timed(run_sweep_sigma, sigma_config(tmp_path_factory.mktemp("sigma")))


@pytest.fixture(scope="module")
def sweep_n(tmp_path_factory):
    return timed(run_sweep_n, n_config(tmp_path_factory.mktemp("n")))


@pytest.fixture(scope="module")
def recsys(tmp_path_factory):
    if not ratings_path().is_file():
        return None
    return timed(run_recsys_eval, recsys_config(tmp_path_factory.mktemp("recsys")))


@pytest.mark.slow
def test_criterion_6_noise_sweep_shape(sweep_sigma, criterion):
    _, res, elapsed = sweep_sigma
    curves = {}
    for row in res["summary"]:
        curves.setdefault(row["program"], {})[row["sigma"]] = row["mean_rel_fro_sq"]
    sigmas = sorted(curves["box"])
    box, nuc = curves["box"], curves["nuclear"]
    best = min(sigmas[1:-1], key=lambda s: box[s])
    ratios = {p: min(c[sigmas[0]], c[sigmas[-1]]) / min(c[s] for s in sigmas[1:-1]) for p, c in curves.items()}
    gap = abs(nuc[best] - box[best]) / box[best]
    ok = all(r >= 2 for r in ratios.values()) and gap <= 0.25 and elapsed < 20 * 60
    assert criterion(
        6, ok,
        f"best sigma {best:.3g}: box {box[best]:.3f}, nuclear {nuc[best]:.3f} ({100 * gap:.1f}% apart); "
        f"endpoint/best ratio box {ratios['box']:.2f}, nuclear {ratios['nuclear']:.2f}; {elapsed:.0f} s",
    )


@pytest.mark.slow
def test_criterion_7_sample_rate(sweep_n, criterion):
    _, res, elapsed = sweep_n
    (s,) = res["slopes"]
    fro, hel = s["slope_rel_fro"], s["slope_hellinger"]
    ok = -0.65 <= fro <= -0.35 and -0.65 <= hel <= -0.35 and elapsed < 30 * 60
    assert criterion(
        7, ok,
        f"slope rel. Frobenius {fro:.3f}, Hellinger {hel:.3f} (squared forms {s['slope_rel_fro_sq']:.3f}, "
        f"{s['slope_hellinger_sq']:.3f}); {elapsed:.0f} s",
    )


@pytest.mark.slow
def test_criterion_8_ratings(recsys, criterion):
    if recsys is None:
        criterion(8, True, f"dataset not found at {ratings_path()}; set BITMC_RATINGS", status="SKIPPED")
        pytest.skip("MovieLens 100k not available")
    _, res, elapsed = recsys
    rep = res["report"]
    acc = rep.per_rating
    ok = rep.overall >= 0.70 and acc[1] >= acc[3] and acc[5] >= acc[3] and elapsed < 30 * 60
    per = ", ".join(f"{k:g}: {v:.3f}" for k, v in sorted(acc.items()))
    assert criterion(8, ok, f"overall {rep.overall:.3f}; per rating {per}; {elapsed:.0f} s")


def _cell_problems(cells, d1, d2, kappa=1.0):
    box_tol = 1e-6 * max(1.0, kappa * math.sqrt(d1 * d2))
    problems = []
    for c in cells:
        if not c["ok"]:
            problems.append(f"cell failed: {c['status']}")
            continue
        if not c["converged"]:
            continue
        nuc_v, box_v = c["max_violation"]
        if c["residual"] > 1e-4:
            problems.append(f"residual {c['residual']:.2e}")
        if nuc_v > 1e-8 or box_v > box_tol:
            problems.append(f"violation {nuc_v:.1e}/{box_v:.1e}")
    return problems


def _same_bytes(a, b, names):
    return all((Path(a) / n).read_bytes() == (Path(b) / n).read_bytes() for n in names)


@pytest.mark.slow
def test_criterion_9_solver_contract(sweep_sigma, sweep_n, recsys, tmp_path, criterion):
    runs = [
        (sweep_sigma, run_sweep_sigma, ["sweep_sigma.csv", "sweep_sigma_cells.csv"]),
        (sweep_n, run_sweep_n, ["sweep_n.csv", "sweep_n_cells.csv"]),
    ]
    problems = []
    n_conv = n_total = 0
    identical = True
    for (cfg, res, _), fn, names in runs:
        cells = res["cells"]
        n_conv += sum(bool(c["converged"]) for c in cells)
        n_total += len(cells)
        problems += _cell_problems(cells, cfg.d1, cfg.d2, cfg.alpha)
        again = replace(cfg, output=str(tmp_path / cfg.kind))
        fn(again)
        identical &= _same_bytes(cfg.output, again.output, names)
    if recsys is not None:
        cfg, res, _ = recsys
        sol = res["solution"]
        n_total += 1
        if sol.converged:
            n_conv += 1
            if sol.residual > 1e-4 or sol.max_violation[0] > 1e-8:
                problems.append(f"recsys residual {sol.residual:.2e}, violation {sol.max_violation[0]:.1e}")
        again = replace(cfg, output=str(tmp_path / "recsys"))
        run_recsys_eval(again)
        identical &= _same_bytes(cfg.output, again.output, ["recsys_eval.csv"])
    ok = not problems and identical
    scope = "criteria 6-8" if recsys is not None else "criteria 6-7; 8 skipped"
    assert criterion(
        9, ok,
        f"{n_conv}/{n_total} runs converged ({scope}); {len(problems)} residual/feasibility problems "
        f"{problems[:3]}; rerun CSV {'byte-identical' if identical else 'DIFFERS'}",
    )
