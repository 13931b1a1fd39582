"""Grid-enumerated minimum-volatility allocation under a return floor.

The decision universe is every weight vector on the simplex whose entries
are multiples of ``step``. For a scenario set the empirical problem is

    minimize   std(R_p)   subject to   mean(R_p) >= m0

with ``R_p`` the compounded portfolio return over the scenario horizon.
Ties (objectives within 1e-12 relative) go to the lexicographically
smallest weight vector, which is also the first one in grid order.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .exceptions import InfeasibleError, ValidationError
from .types import Allocation, AssetModel, ObjectiveSpec, ScenarioSet

TIE_RTOL = 1e-12
TIE_ATOL = 1e-15
# max entries of one (allocations x paths) block
_BLOCK = 1 << 22


@lru_cache(maxsize=64)
def _grid_counts(n_assets, n_steps):
    if n_assets == 1:
        return np.array([[n_steps]], dtype=np.int64)
    blocks = []
    for c in range(n_steps + 1):
        rest = _grid_counts(n_assets - 1, n_steps - c)
        blocks.append(np.column_stack([np.full(rest.shape[0], c, dtype=np.int64), rest]))
    out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


class AllocationGrid:
    """The enumerated allocation universe, in ascending lexicographic order.

    Behaves as a read-only sequence of :class:`Allocation`; ``weights`` gives
    the whole grid as a ``(size, n_assets)`` array.
    """

    def __init__(self, n_assets, step):
        spec = ObjectiveSpec(step=step)
        if n_assets < 1:
            raise ValidationError("the grid needs at least one asset")
        self.n_assets = int(n_assets)
        self.step = float(step)
        self.n_steps = spec.n_steps
        self.counts = _grid_counts(self.n_assets, self.n_steps)
        self.weights = self.counts / self.n_steps
        self.weights.setflags(write=False)

    def __len__(self):
        return self.counts.shape[0]

    def __getitem__(self, i):
        return Allocation(tuple(self.weights[i]), step=self.step)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def index(self, allocation):
        w = np.asarray(allocation.weights if isinstance(allocation, Allocation) else allocation)
        counts = np.rint(w * self.n_steps).astype(np.int64)
        hit = np.flatnonzero(np.all(self.counts == counts, axis=1))
        if hit.size == 0:
            raise ValueError(f"{tuple(w)} is not on the grid")
        return int(hit[0])


def enumerate_grid(n_assets, step):
    """All allocations with weights in ``{0, step, ..., 1}`` summing to 1.

    There are ``C(1/step + n - 1, n - 1)`` of them, e.g. 231 for three
    assets at a 5% step.
    """
    return AllocationGrid(n_assets, step)


@dataclass(frozen=True)
class OptimizationOutcome:
    """Result of a grid scan; ``best`` is None when nothing is feasible."""

    best: Optional[Allocation]
    objective: float
    expected: float
    feasible_count: int
    index: int = -1

    @property
    def feasible(self):
        return self.best is not None


def _check_pair(weights, scenarios):
    if not isinstance(scenarios, ScenarioSet):
        raise ValidationError("scenarios must be a ScenarioSet")
    if weights.shape[-1] != scenarios.n_assets:
        raise ValidationError(
            f"allocation has {weights.shape[-1]} weights, scenarios have {scenarios.n_assets} assets"
        )


def _portfolio_block(weights, returns):
    """Horizon returns of several allocations, shape ``(n_alloc, n_paths)``."""
    T = returns.shape[1]
    if T == 1:
        return weights @ returns[:, 0, :].T
    growth = np.ones((weights.shape[0], returns.shape[0]))
    for t in range(T):
        growth *= 1.0 + weights @ returns[:, t, :].T
    return growth - 1.0


def portfolio_returns(allocation, scenarios):
    """Per-path horizon return ``prod_t (1 + sum_j p_j r[s, t, j]) - 1``."""
    w = np.asarray(allocation.weights if isinstance(allocation, Allocation) else allocation, dtype=float)
    _check_pair(w, scenarios)
    return _portfolio_block(w[None, :], scenarios.returns)[0]


def grid_moments(scenarios, weights):
    """Sample mean and std (ddof=1) of the portfolio return for each weight row."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    _check_pair(weights, scenarios)
    N = scenarios.n_paths
    if N < 2:
        raise ValidationError("at least 2 scenarios are needed for a sample std")
    G = weights.shape[0]
    means = np.empty(G)
    stds = np.empty(G)
    chunk = max(1, _BLOCK // (N * scenarios.n_periods))
    for start in range(0, G, chunk):
        P = _portfolio_block(weights[start:start + chunk], scenarios.returns)
        means[start:start + chunk] = P.mean(axis=1)
        stds[start:start + chunk] = P.std(axis=1, ddof=1)
    return means, stds


def evaluate_objective(allocation, scenarios, spec):
    """Return ``(mean, std, feasible)`` of one allocation on a scenario set."""
    w = allocation.weights if isinstance(allocation, Allocation) else allocation
    means, stds = grid_moments(scenarios, [w])
    return float(means[0]), float(stds[0]), bool(means[0] >= spec.m0)


def select_minimum(objectives, expected, m0):
    """Index of the feasible minimum with the lexicographic tie-break, or -1."""
    feasible = expected >= m0
    if not feasible.any():
        return -1
    best = objectives[feasible].min()
    tol = max(TIE_ATOL, TIE_RTOL * abs(best))
    return int(np.flatnonzero(feasible & (objectives <= best + tol))[0])


def _outcome(grid, objectives, expected, m0):
    i = select_minimum(objectives, expected, m0)
    n_feasible = int(np.count_nonzero(expected >= m0))
    if i < 0:
        return OptimizationOutcome(None, float("nan"), float("nan"), 0)
    return OptimizationOutcome(grid[i], float(objectives[i]), float(expected[i]), n_feasible, i)


def solve_grid(scenarios, spec, grid=None):
    """Exhaustive scan of the grid for the minimum-std feasible allocation.

    Infeasibility is reported through ``OptimizationOutcome.best is None``
    rather than an exception.
    """
    if grid is None:
        grid = enumerate_grid(scenarios.n_assets, spec.step)
    means, stds = grid_moments(scenarios, grid.weights)
    return _outcome(grid, stds, means, spec.m0)


def exact_moment_argmin(model, spec, dt=1.0, grid=None):
    """Grid minimizer of ``sqrt(p' Sigma p)`` s.t. ``p' mu dt >= m0`` using population moments.

    ``Sigma = dt * diag(sigma) corr diag(sigma)``.

    Raises
    ------
    InfeasibleError
        If no grid point reaches ``m0``.
    """
    if not isinstance(model, AssetModel):
        raise ValidationError("model must be an AssetModel")
    if grid is None:
        grid = enumerate_grid(model.n_assets, spec.step)
    W = grid.weights
    var = np.einsum("gi,ij,gj->g", W, model.covariance(dt), W)
    objectives = np.sqrt(np.clip(var, 0.0, None))
    expected = W @ model.mu * dt
    i = select_minimum(objectives, expected, spec.m0)
    if i < 0:
        raise InfeasibleError(
            f"no allocation reaches an expected return of {spec.m0!r} "
            f"(best is {expected.max()!r})"
        )
    return grid[i]


def quadratic_oracle(sample):
    """Closed-form minimizer of ``E[(x - xi)^2]`` under the empirical law.

    Returns ``(x_star, f_star)``: the sample mean and the population
    variance (divisor n) of ``sample``.
    """
    xi = np.asarray(sample, dtype=float).reshape(-1)
    if xi.size == 0:
        raise ValidationError("the sample is empty")
    x_star = float(xi.mean())
    return x_star, float(np.mean((xi - x_star) ** 2))


def quadratic_objective(x, sample):
    """``mean((x - xi)^2)`` for a scalar or an array of candidate ``x``."""
    xi = np.asarray(sample, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float)
    return np.mean((x[..., None] - xi) ** 2, axis=-1)
