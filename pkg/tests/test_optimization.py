import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esglab import (
    Allocation,
    AssetModel,
    InfeasibleError,
    ObjectiveSpec,
    ScenarioSet,
    enumerate_grid,
    evaluate_objective,
    exact_moment_argmin,
    generate_linear,
    portfolio_returns,
    solve_grid,
)
from esglab.optimization import quadratic_objective, quadratic_oracle, select_minimum, grid_moments

from oracles import double_loop_scan, grid_by_combinations


def random_instance(seed, n_paths=500):
    r = np.random.default_rng(seed)
    A = r.standard_normal((3, 3))
    cov = A @ A.T
    d = np.sqrt(np.diag(cov))
    model = AssetModel(("a", "b", "c"), r.uniform(0.01, 0.1, 3), r.uniform(0.01, 0.3, 3), cov / np.outer(d, d))
    s = generate_linear(model, n_paths, seed=int(r.integers(2 ** 31)))
    asset_means = s.returns[:, 0, :].mean(axis=0)
    m0 = float(r.uniform(asset_means.min(), asset_means.max()))
    return s, m0


def test_grid_sizes():
    assert len(enumerate_grid(3, 0.05)) == 231
    assert [a.weights for a in enumerate_grid(1, 0.05)] == [(1.0,)]
    assert [a.weights for a in enumerate_grid(2, 0.5)] == [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]


@pytest.mark.parametrize("n, k", [(2, 7), (3, 20), (4, 10), (5, 4), (6, 3)])
def test_grid_matches_combinatorial_oracle(n, k):
    grid = enumerate_grid(n, 1 / k)
    assert [tuple(c) for c in grid.counts.tolist()] == grid_by_combinations(n, k)
    assert len(grid) == math.comb(k + n - 1, n - 1)


def test_grid_allocations_satisfy_invariants():
    grid = enumerate_grid(3, 0.05)
    for a in grid:
        w = np.array(a.weights)
        assert (w >= 0).all()
        assert abs(w.sum() - 1) <= 1e-12
        np.testing.assert_allclose(w / 0.05, np.rint(w / 0.05), atol=1e-12)
    assert grid.index(Allocation((0.45, 0.5, 0.05))) == grid.index((0.45, 0.5, 0.05))


def test_portfolio_returns_cases():
    r = np.array([[[0.1, -0.1]], [[0.3, 0.2]]])
    s = ScenarioSet(r)
    np.testing.assert_array_equal(portfolio_returns((0.0, 1.0), s), r[:, 0, 1])
    assert portfolio_returns((0.5, 0.5), ScenarioSet(np.array([[[0.1, -0.1]]])))[0] == 0.0
    two = ScenarioSet(np.array([[[0.1], [0.1]]]))
    assert portfolio_returns((1.0,), two)[0] == pytest.approx(0.21, abs=1e-15)


def test_evaluate_objective_cases():
    spec = ObjectiveSpec(0.04)
    c = evaluate_objective((1.0,), ScenarioSet(np.full((5, 1, 1), 0.07)), spec)
    assert c[0] == pytest.approx(0.07, abs=1e-16) and c[1] <= 1e-16 and c[2]
    boundary = evaluate_objective((1.0,), ScenarioSet(np.array([[[0.0]], [[0.08]]])), spec)
    assert boundary == (0.04, pytest.approx(0.08 / math.sqrt(2)), True)
    m, sd, ok = evaluate_objective((1.0,), ScenarioSet(np.array([0.02, 0.06, 0.10])[:, None, None]), spec)
    assert m == pytest.approx(0.06, abs=1e-15) and sd == pytest.approx(0.04, abs=1e-15) and ok


def test_solve_grid_riskless_asset():
    m = AssetModel(("safe", "risky"), [0.05, 0.08], [0.0, 0.2], np.eye(2))
    out = solve_grid(generate_linear(m, 300, seed=2), ObjectiveSpec(0.04))
    assert out.best.weights == (1.0, 0.0)
    assert out.objective <= 1e-15


def test_solve_grid_infeasible():
    m = AssetModel(("a", "b"), [0.01, 0.02], [0.1, 0.1], np.eye(2))
    out = solve_grid(generate_linear(m, 100, seed=2), ObjectiveSpec(0.5))
    assert not out.feasible and out.feasible_count == 0 and out.best is None


@pytest.mark.parametrize("seed", range(5))
def test_solve_grid_matches_double_loop(seed):
    s, m0 = random_instance(seed, n_paths=200)
    out = solve_grid(s, ObjectiveSpec(m0))
    w, obj = double_loop_scan(s.returns[:, 0, :], m0)
    assert out.best.weights == w
    assert out.objective == pytest.approx(obj, rel=1e-12)
    assert out.expected >= m0 - 1e-12


def test_exact_argmin_cases(bundled):
    m = AssetModel(("a", "b"), [0.05, 0.05], [0.0, 0.2], np.eye(2))
    assert exact_moment_argmin(m, ObjectiveSpec(0.04)).weights == (1.0, 0.0)

    same = AssetModel(("a", "b", "c"), [0.05] * 3, [0.1] * 3, np.full((3, 3), 0.3) + 0.7 * np.eye(3))
    best = exact_moment_argmin(same, ObjectiveSpec(0.04))
    # sum(p^2) is minimal at the permutations of (6, 7, 7)/20; lexicographically first wins
    assert best.weights == (0.3, 0.35, 0.35)

    with pytest.raises(InfeasibleError):
        exact_moment_argmin(m, ObjectiveSpec(0.06))


def test_exact_argmin_matches_large_sample(bundled):
    exact = exact_moment_argmin(bundled.model, bundled.spec)
    big = generate_linear(bundled.model, 200_000, seed=99)
    assert solve_grid(big, bundled.spec).best == exact


def test_quadratic_oracle_values():
    assert quadratic_oracle([0.3, 0.3, 0.3]) == (pytest.approx(0.3), pytest.approx(0.0, abs=1e-30))
    x, f = quadratic_oracle([1.0, 2.0, 3.0])
    assert x == 2.0 and f == pytest.approx(2 / 3, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-0.02, 0.03))
def test_permutation_and_shift_properties(seed, c):
    s, m0 = random_instance(seed, n_paths=120)
    spec = ObjectiveSpec(m0)
    base = solve_grid(s, spec)
    perm = np.random.default_rng(seed).permutation(s.n_paths)
    assert solve_grid(s.replace_returns(s.returns[perm]), spec).best == base.best

    grid = enumerate_grid(3, 0.05)
    means, stds = grid_moments(s, grid.weights)
    shifted = s.replace_returns(s.returns + c)
    means2, stds2 = grid_moments(shifted, grid.weights)
    np.testing.assert_allclose(means2, means + c, atol=1e-12)
    np.testing.assert_allclose(stds2, stds, rtol=0, atol=1e-12)
    if c > 0:
        assert np.all((means2 >= m0) | (means < m0))
    was_feasible = np.where(means >= m0, 1.0, -1.0)
    assert select_minimum(stds2, was_feasible, 0.0) == select_minimum(stds, means, m0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40))
def test_quadratic_oracle_beats_grid(sample):
    x_star, f_star = quadratic_oracle(sample)
    h = 0.01
    xs = np.arange(min(sample) - h, max(sample) + 2 * h, h)
    vals = quadratic_objective(xs, sample)
    tol = 1e-9 * max(1.0, f_star)
    assert vals.min() >= f_star - tol
    assert vals.min() <= f_star + h ** 2 / 4 + tol


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 230))
def test_gap_to_reference_minimum_is_non_negative(seed, index):
    ref, m0 = random_instance(seed, n_paths=400)
    grid = enumerate_grid(3, 0.05)
    means, stds = grid_moments(ref, grid.weights)
    F = np.where(means >= m0, stds, np.inf)
    if np.isfinite(F[index]):
        assert F[index] - F.min() >= -1e-12
