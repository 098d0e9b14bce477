import numpy as np
import pytest

from bitmc.linalg import norm
from bitmc.projections import (
    AdmmOptions,
    ConstraintSet,
    nuclear_threshold,
    project,
    project_box,
    project_intersection,
    project_nuclear_ball,
    soft_threshold,
)
from oracles import nuclear_lambda_grid, project_diag2_grid, project_nuclear_grid


def test_box_examples():
    x = np.array([[0.3, -0.2], [0.9, -1.0]])
    assert np.array_equal(project_box(x, 1.0), x)
    assert project_box(np.array([[5.0]]), 1.0)[0, 0] == 1.0
    assert project_box(np.array([[-3.5]]), 2.0)[0, 0] == -2.0


def test_soft_threshold_examples(rng):
    x = rng.normal(size=(5, 4))
    np.testing.assert_allclose(soft_threshold(x, 0.0), x, atol=1e-10)
    np.testing.assert_allclose(soft_threshold(np.diag([3.0, 1.0]), 1.0), np.diag([2.0, 0.0]), atol=1e-14)
    assert not soft_threshold(x, norm(x, "operator")).any()
    with pytest.raises(ValueError):
        soft_threshold(x, -1.0)


def test_soft_threshold_shifts_singular_values(rng):
    x = rng.normal(size=(6, 6))
    s = np.linalg.svd(x, compute_uv=False)
    out = np.linalg.svd(soft_threshold(x, 0.7), compute_uv=False)
    np.testing.assert_allclose(out, np.maximum(s - 0.7, 0), atol=1e-12)


def test_nuclear_ball_examples(rng):
    x = rng.normal(size=(4, 3)) * 0.1
    assert np.array_equal(project_nuclear_ball(x, 10.0), x)
    # 4 - 2 lambda = 2 on the segment where both values are active gives lambda = 1
    np.testing.assert_allclose(project_nuclear_ball(np.diag([3.0, 1.0]), 2.0), np.diag([2.0, 0.0]), atol=1e-14)
    assert nuclear_threshold(np.array([3.0, 1.0]), 2.0) == 1.0
    x = rng.normal(size=(5, 5))
    sizes = [np.linalg.norm(project_nuclear_ball(x, t)) for t in (1.0, 1e-1, 1e-3, 1e-6)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:])) and sizes[-1] <= 1e-6 * (1 + 1e-8)


def test_nuclear_ball_matches_grid_oracle(rng):
    for _ in range(30):
        x = rng.normal(size=(4, 4))
        for tau in (0.5, 1.0, 2.0):
            assert np.linalg.norm(project_nuclear_ball(x, tau) - project_nuclear_grid(x, tau)) <= 1e-4


def test_threshold_matches_grid(rng):
    for _ in range(50):
        s = np.sort(rng.exponential(size=5))[::-1]
        tau = rng.uniform(0.1, s.sum())
        assert nuclear_threshold(s, tau) == pytest.approx(nuclear_lambda_grid(s, tau), abs=2e-6)


def test_projections_nonexpansive_and_idempotent(rng):
    for _ in range(100):
        x, y = rng.normal(size=(2, 4, 4))
        tau = rng.uniform(0.2, 3)
        kappa = rng.uniform(0.1, 1.5)
        for proj in (lambda a: project_box(a, kappa), lambda a: project_nuclear_ball(a, tau)):
            px, py = proj(x), proj(y)
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
            assert np.max(np.abs(proj(px) - px)) <= 1e-8


def test_intersection_scalar_and_fixed_point(rng):
    z = project_intersection(np.array([[5.0]]), ConstraintSet(1.0, 1.0))
    assert z[0, 0] == pytest.approx(1.0, abs=1e-6)
    x = rng.normal(size=(5, 5)) * 0.05
    c = ConstraintSet(10.0, 1.0)
    opts = AdmmOptions()
    out = project_intersection(x, c, opts, shortcut=False)
    assert np.linalg.norm(out - x) <= 1e-6 * max(1, np.linalg.norm(x)) * 10


def test_intersection_inactive_box_matches_nuclear(rng):
    for _ in range(20):
        x = rng.normal(size=(6, 6))
        tau = rng.uniform(0.5, 4)
        pn = project_nuclear_ball(x, tau)
        c = ConstraintSet(tau, float(np.max(np.abs(pn))) * 1.01)
        for shortcut in (True, False):
            z = project_intersection(x, c, shortcut=shortcut)
            assert np.linalg.norm(z - pn) <= 1e-3


def test_intersection_feasible_and_close_to_cvx_answer(rng):
    for _ in range(20):
        x = 2 * rng.normal(size=(6, 6))
        c = ConstraintSet(rng.uniform(1, 5), rng.uniform(0.2, 1.0))
        z, info = project_intersection(x, c, shortcut=False, return_info=True)
        eps = 1e-6 * max(1, np.linalg.norm(x))
        assert info.converged
        assert norm(z, "nuclear") <= c.tau + eps
        assert norm(z, "inf") <= c.kappa + eps


def test_intersection_beats_diag_grid(rng):
    for _ in range(15):
        a, b = rng.uniform(-3, 3, size=2)
        tau, kappa = rng.uniform(0.3, 2.5), rng.uniform(0.2, 1.5)
        x = np.diag([a, b])
        z = project_intersection(x, ConstraintSet(tau, kappa), shortcut=False)
        assert np.linalg.norm(z - x) <= project_diag2_grid(a, b, tau, kappa) + 1e-3


def test_intersection_reports_nonconvergence(rng):
    x = 3 * rng.normal(size=(6, 6))
    z, info = project_intersection(
        x, ConstraintSet(2.0, 0.3), AdmmOptions(max_iters=2, eps=1e-12), shortcut=False, return_info=True
    )
    assert not info.converged and info.iterations == 2
    assert norm(z, "nuclear") <= 2.0 + 1e-9


def test_project_dispatch(rng):
    x = rng.normal(size=(3, 3))
    assert np.array_equal(project(x, ConstraintSet(1.0)), project_nuclear_ball(x, 1.0))
    with pytest.raises(ValueError):
        project_intersection(x, ConstraintSet(1.0))


def test_constraint_set_validation():
    c = ConstraintSet.from_alpha(1.0, 4, 10, 25)
    assert c.tau == pytest.approx(np.sqrt(1000)) and c.kappa == 1.0
    assert ConstraintSet.from_alpha(2.0, 1, 4, 4, box=False).kappa is None
    for bad in (dict(tau=0.0), dict(tau=-1.0), dict(tau=1.0, kappa=0.0)):
        with pytest.raises(ValueError):
            ConstraintSet(**bad)
    with pytest.raises(ValueError):
        AdmmOptions(growth=1.0)
