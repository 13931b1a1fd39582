"""Stability and bias diagnostics of a scenario generator.

A sweep generates ``replications`` independent scenario sets for every
size, solves the grid allocation problem on each, and measures

* internal stability: spread of the optimal empirical objectives;
* external stability: spread of those solutions' objectives evaluated on a
  large reference set standing in for the true distribution;
* bias: ``e_f = F(x_k; reference) - min_x F(x; reference)``.

On the reference set an allocation whose mean misses ``m0`` has objective
``+inf`` (the constraint is part of the problem), so ``e_f >= 0`` always.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._rng import QUADRATIC_STREAM, REFERENCE_STREAM, REPLICATION_STREAM, derive_seed, make_rng
from .exceptions import ConfigError, InfeasibleError, ValidationError
from .generation import (
    bootstrap,
    compound_periods,
    gbm_scenarios,
    generate_linear,
    moment_match_affine,
    pca_fit,
    pca_generate,
)
from .optimization import enumerate_grid, grid_moments, quadratic_oracle, select_minimum, solve_grid
from .types import (
    Allocation,
    AssetModel,
    ObjectiveSpec,
    ScenarioSet,
    StabilityReport,
    SummaryStats,
    WeightStats,
)

METHODS = ("gaussian", "bootstrap", "gbm", "pca")
DEFAULT_SIZES = (50, 1000, 5000, 10000)
DEFAULT_REPLICATIONS = 30
DEFAULT_REFERENCE_SIZE = 200_000
MAX_INFEASIBLE_FRACTION = 0.10
THREADS_ENV = "ESG_LAB_THREADS"


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Everything needed to reproduce a sweep bit for bit."""

    model: AssetModel
    spec: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    sizes: tuple = DEFAULT_SIZES
    replications: int = DEFAULT_REPLICATIONS
    master_seed: int = 0
    reference_size: int = DEFAULT_REFERENCE_SIZE
    dt: float = 1.0
    n_periods: int = 1
    method: str = "gaussian"
    antithetic: bool = False
    moment_match: bool = False
    history: Optional[np.ndarray] = None
    periods_per_year: int = 12
    pca_components: Optional[int] = None

    def __post_init__(self):
        sizes = tuple(int(z) for z in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ConfigError("sizes", "must not be empty")
        if any(z < 2 for z in sizes):
            raise ConfigError("sizes", "every size must be at least 2")
        if len(set(sizes)) != len(sizes):
            raise ConfigError("sizes", "sizes must be distinct")
        if self.replications < 2:
            raise ConfigError("replications", "must be at least 2")
        if self.reference_size < 10 * max(sizes):
            raise ConfigError(
                "reference_size", f"must be at least 10 x max(sizes) = {10 * max(sizes)}"
            )
        if not self.dt > 0:
            raise ConfigError("dt", "must be positive")
        if self.n_periods < 1:
            raise ConfigError("n_periods", "must be at least 1")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {list(METHODS)}")
        if self.antithetic:
            if self.method not in ("gaussian", "gbm"):
                raise ConfigError("antithetic", "only applies to the gaussian and gbm methods")
            odd = [z for z in sizes + (self.reference_size,) if z % 2]
            if odd:
                raise ConfigError("antithetic", f"needs even path counts, got {odd}")
        if self.method == "bootstrap":
            if self.history is None:
                raise ConfigError("model", "the bootstrap method needs a calibrated history")
            self.bootstrap_block()
        if self.method == "pca" and self.pca_components is not None:
            if not 1 <= self.pca_components <= self.model.n_assets:
                raise ConfigError("pca_components", f"must lie in [1, {self.model.n_assets}]")
        if self.moment_match and min(sizes) <= self.model.n_assets:
            raise ConfigError("sizes", "moment matching needs more paths than assets")

    def bootstrap_block(self):
        """Historical rows compounded into one model period."""
        k = self.dt * self.periods_per_year
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ConfigError("dt", "dt x periods_per_year must be a positive integer for bootstrap")
        return int(round(k))


def target_moments(config):
    """Population mean and covariance of one period's returns under the generator."""
    model, dt = config.model, config.dt
    if config.method in ("gaussian", "pca"):
        return model.mu * dt, model.covariance(dt)
    if config.method == "gbm":
        m = np.exp(model.mu * dt)
        return m - 1.0, np.outer(m, m) * np.expm1(model.covariance(dt))
    H = np.asarray(config.history, dtype=float)
    k = config.bootstrap_block()
    a = 1.0 + H.mean(axis=0)
    second = (1.0 + H).T @ (1.0 + H) / H.shape[0]
    ak = a ** k
    return ak - 1.0, second ** k - np.outer(ak, ak)


def make_scenarios(config, n_paths, seed, moment_match=None):
    """Generate one scenario set with the configured method."""
    model = config.model
    T, dt = config.n_periods, config.dt
    if config.method == "gaussian":
        s = generate_linear(model, n_paths, T, dt, seed, config.antithetic)
    elif config.method == "gbm":
        s = gbm_scenarios(model, n_paths, T, dt, seed, config.antithetic)
    elif config.method == "pca":
        k = config.pca_components or model.n_assets
        basis = pca_fit(model.covariance(1.0), model.mu, k)
        s = pca_generate(basis, n_paths, T, dt, seed, names=model.names)
    else:
        k = config.bootstrap_block()
        s = bootstrap(config.history, n_paths, T * k, seed, names=model.names, dt=dt / k)
        s = compound_periods(s, k)
    if config.moment_match if moment_match is None else moment_match:
        mean, cov = target_moments(config)
        s = moment_match_affine(s, mean, cov)
    return s


def resolve_threads(threads=None):
    """Worker count from the argument, else ``ESG_LAB_THREADS``, else all cores."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or not raw.strip():
            return os.cpu_count() or 1
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {threads}")
    return threads


def internal_stats(values):
    """Mean, sample std (ddof=1), extremes and quartiles of ``values``.

    Quartiles interpolate linearly between order statistics at position
    ``h = (n - 1) q`` (0-based), e.g. q25 of 1..5 is 2.
    """
    x = np.asarray(values, dtype=float).reshape(-1)
    x = x[~np.isnan(x)]
    if x.size < 2:
        raise ValidationError(f"statistics need at least 2 values, got {x.size}")
    q25, q50, q75 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    return SummaryStats(
        count=int(x.size),
        mean=float(x.mean()),
        std=float(x.std(ddof=1)),
        min=float(x.min()),
        q25=float(q25),
        q50=float(q50),
        q75=float(q75),
        max=float(x.max()),
    )


class ReferenceEvaluator:
    """Grid objectives on a reference scenario set, computed once."""

    def __init__(self, reference, spec, grid=None):
        if not isinstance(reference, ScenarioSet):
            raise ValidationError("reference must be a ScenarioSet")
        self.spec = spec
        self.grid = grid if grid is not None else enumerate_grid(reference.n_assets, spec.step)
        self.means, self.stds = grid_moments(reference, self.grid.weights)
        self.feasible = self.means >= spec.m0
        self.best_index = select_minimum(self.stds, self.means, spec.m0)

    @property
    def minimum(self):
        if self.best_index < 0:
            raise InfeasibleError("the reference set is infeasible for every grid point")
        return float(self.stds[self.best_index])

    @property
    def optimum(self):
        return self.grid[self.best_index] if self.best_index >= 0 else None

    def lookup(self, solutions):
        idx = np.array([self.grid.index(a) for a in solutions], dtype=np.int64)
        return self.means[idx], self.stds[idx], self.feasible[idx]

    def constrained_objective(self, solutions):
        _, stds, feasible = self.lookup(solutions)
        return np.where(feasible, stds, np.inf)


@dataclass(frozen=True)
class ExternalEvaluation:
    expected: np.ndarray
    objectives: np.ndarray
    feasible: np.ndarray
    dispersion: float
    std: float


def _evaluator(reference, spec):
    return reference if isinstance(reference, ReferenceEvaluator) else ReferenceEvaluator(reference, spec)


def external_evaluate(solutions, reference, spec):
    """Objectives of ``solutions`` on the reference set and their spread.

    ``dispersion`` is max - min of the reference std across solutions and
    ``std`` their sample standard deviation (0 for a single solution).
    """
    ev = _evaluator(reference, spec)
    solutions = list(solutions)
    if not solutions:
        raise ValidationError("no solutions to evaluate")
    means, stds, feasible = ev.lookup(solutions)
    spread = float(stds.std(ddof=1)) if stds.size > 1 else 0.0
    return ExternalEvaluation(means, stds, feasible, float(stds.max() - stds.min()), spread)


def bias_estimate(solutions, reference, spec):
    """Per-solution ``e_f`` against the reference optimum, and their mean.

    A solution infeasible on the reference gets ``e_f = inf``.
    """
    ev = _evaluator(reference, spec)
    e_f = ev.constrained_objective(list(solutions)) - ev.minimum
    return e_f, float(np.mean(e_f)) if e_f.size else float("nan")


def _weight_stats(w):
    w = w[~np.isnan(w)]
    if w.size == 0:
        nan = float("nan")
        return WeightStats(nan, nan, nan, nan)
    std = float(w.std(ddof=1)) if w.size > 1 else 0.0
    return WeightStats(float(w.mean()), std, float(w.min()), float(w.max()))


def run_replications(config, threads=None):
    """Run the full sweep and assemble a :class:`StabilityReport`.

    Replication ``r`` at size ``z`` draws from seed
    ``derive_seed(master_seed, 1, z, r)``; the reference set uses a separate
    stream. Results do not depend on ``threads``.

    Raises
    ------
    InfeasibleError
        If more than 10% of the replications of some size are infeasible,
        or the reference set admits no feasible allocation.
    """
    spec = config.spec
    grid = enumerate_grid(config.model.n_assets, spec.step)
    tasks = [(z, r) for z in config.sizes for r in range(config.replications)]

    def work(task):
        z, r = task
        s = make_scenarios(config, z, derive_seed(config.master_seed, REPLICATION_STREAM, z, r))
        return solve_grid(s, spec, grid), s.resampled

    n_workers = min(resolve_threads(threads), len(tasks))
    if n_workers == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(work, tasks))

    S, K, n = len(config.sizes), config.replications, config.model.n_assets
    objectives = np.full((S, K), np.nan)
    expected = np.full((S, K), np.nan)
    feasible = np.zeros((S, K), dtype=bool)
    weights = np.full((S, K, n), np.nan)
    resampled = 0
    for (outcome, n_res), (z, r) in zip(results, tasks):
        i = config.sizes.index(z)
        resampled += n_res
        if outcome.feasible:
            objectives[i, r] = outcome.objective
            expected[i, r] = outcome.expected
            feasible[i, r] = True
            weights[i, r] = outcome.best.weights

    for i, z in enumerate(config.sizes):
        bad = K - int(feasible[i].sum())
        if bad > MAX_INFEASIBLE_FRACTION * K:
            raise InfeasibleError(
                f"{bad} of {K} replications at size {z} have no allocation with "
                f"mean >= {spec.m0!r}; lower m0 or change the model"
            )

    ref = make_scenarios(config, config.reference_size, derive_seed(config.master_seed, REFERENCE_STREAM))
    ev = ReferenceEvaluator(ref, spec, grid)
    ref_min = ev.minimum

    ref_obj = np.full((S, K), np.nan)
    ref_exp = np.full((S, K), np.nan)
    bias = np.full((S, K), np.nan)
    internal, weight_stats, external, dispersion = {}, {}, {}, {}
    mean_bias, mean_bias_feasible, ref_infeasible = {}, {}, {}
    for i, z in enumerate(config.sizes):
        ok = np.flatnonzero(feasible[i])
        sols = [Allocation(tuple(weights[i, r]), spec.step) for r in ok]
        ext = external_evaluate(sols, ev, spec)
        e_f, mean_e = bias_estimate(sols, ev, spec)
        ref_obj[i, ok] = ext.objectives
        ref_exp[i, ok] = ext.expected
        bias[i, ok] = e_f
        internal[z] = internal_stats(objectives[i])
        weight_stats[z] = {name: _weight_stats(weights[i, :, j]) for j, name in enumerate(config.model.names)}
        external[z] = internal_stats(ext.objectives)
        dispersion[z] = ext.dispersion
        mean_bias[z] = mean_e
        finite = e_f[np.isfinite(e_f)]
        mean_bias_feasible[z] = float(finite.mean()) if finite.size else float("nan")
        ref_infeasible[z] = int(np.count_nonzero(~ext.feasible))

    return StabilityReport(
        sizes=config.sizes,
        replications=K,
        names=config.model.names,
        objectives=objectives,
        expected=expected,
        feasible=feasible,
        weights=weights,
        internal=internal,
        weight_stats=weight_stats,
        reference_objectives=ref_obj,
        reference_expected=ref_exp,
        external=external,
        external_dispersion=dispersion,
        reference_optimum=ev.optimum,
        reference_min=ref_min,
        bias=bias,
        mean_bias=mean_bias,
        mean_bias_feasible=mean_bias_feasible,
        reference_infeasible=ref_infeasible,
        resampled=resampled,
    )


@dataclass(frozen=True)
class QuadraticVariant:
    """Replication results of the quadratic example for one sampling scheme."""

    x_star: np.ndarray
    f_star: np.ndarray
    e_f: np.ndarray


@dataclass(frozen=True)
class QuadraticDemoReport:
    sizes: tuple
    replications: int
    dist_mean: float
    dist_var: float
    variants: dict

    def internal(self, variant, size):
        return internal_stats(self.variants[variant].f_star[self.sizes.index(size)])


def quadratic_stability_demo(dist_mean, dist_var, sizes=DEFAULT_SIZES, replications=DEFAULT_REPLICATIONS, master_seed=0):
    """Replicate ``min_x E[(x - xi)^2]`` with xi ~ N(dist_mean, dist_var).

    Three schemes share each base sample:

    * ``plain``: the raw normal sample;
    * ``mean_matched``: shifted so its mean equals ``dist_mean`` exactly,
      so every ``e_f`` vanishes while the optimal values (sample variances)
      still differ;
    * ``variance_matched``: rescaled about its own mean so its variance
      equals ``dist_var``, so the optimal values agree while
      ``e_f = (x_star - dist_mean)^2`` varies.
    """
    if not dist_var >= 0:
        raise ValidationError("dist_var must be non-negative")
    sizes = tuple(int(z) for z in sizes)
    if not sizes or any(z < 2 for z in sizes):
        raise ValidationError("every size must be at least 2")
    if replications < 2:
        raise ValidationError("replications must be at least 2")
    S, K = len(sizes), int(replications)
    scale = math.sqrt(dist_var)
    out = {v: (np.empty((S, K)), np.empty((S, K))) for v in ("plain", "mean_matched", "variance_matched")}
    for i, z in enumerate(sizes):
        for r in range(K):
            rng = make_rng(derive_seed(master_seed, QUADRATIC_STREAM, z, r))
            xi = dist_mean + scale * rng.standard_normal(z)
            m = xi.mean()
            v = np.mean((xi - m) ** 2)
            samples = {
                "plain": xi,
                "mean_matched": xi - m + dist_mean,
                "variance_matched": m + (xi - m) * math.sqrt(dist_var / v) if v > 0 else xi,
            }
            for name, sample in samples.items():
                x_star, f_star = quadratic_oracle(sample)
                out[name][0][i, r] = x_star
                out[name][1][i, r] = f_star
    variants = {
        name: QuadraticVariant(x, f, (x - dist_mean) ** 2) for name, (x, f) in out.items()
    }
    return QuadraticDemoReport(sizes, K, float(dist_mean), float(dist_var), variants)
