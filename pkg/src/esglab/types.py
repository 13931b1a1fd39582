"""Domain types shared across the laboratory.

All containers are frozen dataclasses holding read-only numpy arrays, so a
value can be handed to worker threads without copying.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ValidationError
from .validation import check_correlation, check_finite, frozen_array

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AssetModel:
    """Annualized drift, volatility and correlation of ``n`` assets.

    Parameters
    ----------
    names : sequence of str
        Asset identifiers.
    mu : array-like of shape (n,)
        Expected arithmetic return per year.
    sigma : array-like of shape (n,)
        Volatility per square-root year, non-negative.
    corr : array-like of shape (n, n)
        Correlation matrix. Matrices whose smallest eigenvalue lies in
        ``[-1e-10, 0)`` are clipped to PSD and rescaled to unit diagonal.
    """

    names: tuple
    mu: np.ndarray
    sigma: np.ndarray
    corr: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        mu = check_finite(np.asarray(self.mu, dtype=float).reshape(-1), "mu")
        sigma = check_finite(np.asarray(self.sigma, dtype=float).reshape(-1), "sigma")
        n = len(names)
        if n < 1:
            raise ValidationError("an asset model needs at least one asset")
        if len(set(names)) != n:
            raise ValidationError(f"duplicate asset names in {list(names)}")
        if mu.shape != (n,) or sigma.shape != (n,):
            raise ValidationError(
                f"mu and sigma must have length {n}, got {mu.shape[0]} and {sigma.shape[0]}"
            )
        if np.any(sigma < 0):
            raise ValidationError("sigma entries must be non-negative")
        corr = check_correlation(self.corr, n)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "mu", frozen_array(mu))
        object.__setattr__(self, "sigma", frozen_array(sigma))
        object.__setattr__(self, "corr", frozen_array(corr))

    @property
    def n_assets(self):
        return len(self.names)

    def covariance(self, dt=1.0):
        """Covariance of one period of length ``dt`` years."""
        d = np.diag(self.sigma)
        return dt * (d @ self.corr @ d)

    def __eq__(self, other):
        if not isinstance(other, AssetModel):
            return NotImplemented
        return self.names == other.names and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in ("mu", "sigma", "corr")
        )

    __hash__ = None

    def to_dict(self):
        return {
            "assets": list(self.names),
            "model": {
                "mu": self.mu.tolist(),
                "sigma": self.sigma.tolist(),
                "corr": self.corr.tolist(),
            },
        }


@dataclass(frozen=True)
class ScenarioSet:
    """Linear-structure scenarios: one trajectory per path.

    ``returns[s, t, i]`` is the arithmetic return of asset ``i`` over period
    ``t`` of path ``s``. Entries must be finite and strictly above -1.
    """

    returns: np.ndarray
    dt: float = 1.0
    method: str = "gaussian"
    seed: Optional[int] = None
    names: Optional[tuple] = None
    resampled: int = 0

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim == 2:
            r = r[:, None, :]
        if r.ndim != 3:
            raise ValidationError(f"returns must be 3-dimensional, got shape {r.shape}")
        if r.shape[0] < 1 or r.shape[1] < 1 or r.shape[2] < 1:
            raise ValidationError(f"returns must be non-empty, got shape {r.shape}")
        check_finite(r, "returns")
        if np.any(r <= -1.0):
            raise ValidationError("scenario returns must be greater than -1")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        names = self.names
        if names is None:
            names = tuple(f"asset{i + 1}" for i in range(r.shape[2]))
        names = tuple(str(n) for n in names)
        if len(names) != r.shape[2]:
            raise ValidationError(f"{len(names)} names given for {r.shape[2]} assets")
        object.__setattr__(self, "returns", frozen_array(r))
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_paths(self):
        return self.returns.shape[0]

    @property
    def n_periods(self):
        return self.returns.shape[1]

    @property
    def n_assets(self):
        return self.returns.shape[2]

    def replace_returns(self, returns, method=None):
        """Copy of this set with new returns and optionally a new method tag."""
        return ScenarioSet(
            returns,
            dt=self.dt,
            method=self.method if method is None else method,
            seed=self.seed,
            names=self.names,
            resampled=self.resampled,
        )


@dataclass(frozen=True)
class BranchingVector:
    """Children per node at each level, ``[b(1), ..., b(T)]``."""

    b: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.b)
        if any(x != y for x, y in zip(b, self.b)) or any(x < 1 for x in b):
            raise ValidationError(f"branching factors must be positive integers, got {list(self.b)}")
        object.__setattr__(self, "b", b)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not text:
            return cls(())
        try:
            return cls(tuple(int(x) for x in text.split(",")))
        except ValueError:
            raise ValidationError(f"cannot parse branching vector {text!r}") from None

    def __len__(self):
        return len(self.b)

    def __iter__(self):
        return iter(self.b)


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    """Scenario tree stored as a breadth-first node arena.

    Attributes
    ----------
    parent : ndarray of int, shape (n_nodes,)
        Parent index, -1 for the root.
    depth : ndarray of int, shape (n_nodes,)
    values : ndarray of shape (n_nodes, n_assets)
        Per-asset return realized on the arc into the node (zeros at the root).
    prob : ndarray of shape (n_nodes,)
        Conditional probability of the node given its parent.
    branching : BranchingVector
    """

    parent: np.ndarray
    depth: np.ndarray
    values: np.ndarray
    prob: np.ndarray
    branching: BranchingVector
    dt: float = 1.0
    names: Optional[tuple] = None
    _first_child: np.ndarray = field(init=False, repr=False)
    _n_children: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        from .tree import count_nodes

        parent = np.asarray(self.parent, dtype=np.int64)
        depth = np.asarray(self.depth, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        prob = np.asarray(self.prob, dtype=float)
        n = parent.shape[0]
        if depth.shape != (n,) or prob.shape != (n,) or values.ndim != 2 or values.shape[0] != n:
            raise ValidationError("tree arrays have inconsistent lengths")
        roots = np.flatnonzero(parent < 0)
        if roots.tolist() != [0] or depth[0] != 0 or prob[0] != 1.0:
            raise ValidationError("a tree needs exactly one root at index 0 with depth 0 and prob 1")
        if n != count_nodes(self.branching):
            raise ValidationError(
                f"{n} nodes do not match branching {list(self.branching)}"
            )
        if n > 1:
            if np.any(parent[1:] >= np.arange(1, n)) or np.any(np.diff(parent[1:]) < 0):
                raise ValidationError("nodes must be stored in breadth-first order")
            if np.any(depth[1:] != depth[parent[1:]] + 1):
                raise ValidationError("child depth must be parent depth + 1")
        n_children = np.bincount(parent[1:], minlength=n) if n > 1 else np.zeros(1, dtype=np.int64)
        # in breadth-first order the children of node i follow those of nodes 0..i-1
        first_child = 1 + np.concatenate(([0], np.cumsum(n_children)[:-1]))
        internal = np.flatnonzero(n_children > 0)
        sums = np.zeros(n)
        np.add.at(sums, parent[1:], prob[1:])
        if internal.size and np.max(np.abs(sums[internal] - 1.0)) > SUM_TOL:
            raise ValidationError("children probabilities must sum to 1")
        names = self.names
        if names is None:
            names = tuple(f"asset{i + 1}" for i in range(values.shape[1]))
        object.__setattr__(self, "parent", frozen_array(parent))
        object.__setattr__(self, "depth", frozen_array(depth))
        object.__setattr__(self, "values", frozen_array(values))
        object.__setattr__(self, "prob", frozen_array(prob))
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "_first_child", frozen_array(first_child))
        object.__setattr__(self, "_n_children", frozen_array(n_children))

    @property
    def n_nodes(self):
        return self.parent.shape[0]

    @property
    def n_arcs(self):
        return self.n_nodes - 1

    @property
    def height(self):
        return len(self.branching)

    def children(self, node):
        start = self._first_child[node]
        return range(start, start + self._n_children[node])

    def leaves(self):
        return np.flatnonzero(self._n_children == 0)

    def path_probability(self, node):
        p = 1.0
        while node > 0:
            p *= self.prob[node]
            node = self.parent[node]
        return p


@dataclass(frozen=True)
class Allocation:
    """Portfolio weights on the simplex, quantized to ``step``."""

    weights: tuple
    step: float = 0.05

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise ValidationError("an allocation needs at least one weight")
        if any(x < 0 for x in w):
            raise ValidationError(f"weights must be non-negative, got {w}")
        if abs(sum(w) - 1.0) > SUM_TOL:
            raise ValidationError(f"weights must sum to 1, got {sum(w)!r}")
        for x in w:
            c = x / self.step
            if abs(c - round(c)) * self.step > SUM_TOL:
                raise ValidationError(f"weight {x!r} is not a multiple of step {self.step!r}")
        object.__setattr__(self, "weights", w)

    @property
    def as_array(self):
        return np.array(self.weights)

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Return floor ``m0`` per horizon and grid ``step`` of the allocation problem."""

    m0: float = 0.04
    step: float = 0.05

    def __post_init__(self):
        if not np.isfinite(self.m0):
            raise ValidationError("m0 must be finite")
        if not (0 < self.step <= 1):
            raise ValidationError(f"step must lie in (0, 1], got {self.step!r}")
        k = 1.0 / self.step
        if abs(k - round(k)) > 1e-9:
            raise ValidationError(f"1/step must be an integer, got step={self.step!r}")

    @property
    def n_steps(self):
        return int(round(1.0 / self.step))


@dataclass(frozen=True)
class SummaryStats:
    """Location and spread of a sample; quantiles use linear interpolation at h = (n-1)q."""

    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float

    @property
    def range(self):
        return self.max - self.min


@dataclass(frozen=True)
class WeightStats:
    mean: float
    std: float
    min: float
    max: float

    @property
    def range(self):
        return self.max - self.min


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of a replication sweep.

    Per-replication arrays are indexed ``[size_index, replication]``; the
    weights array has a trailing asset axis. Infeasible replications carry
    NaN objectives and NaN weights.
    """

    sizes: tuple
    replications: int
    names: tuple
    objectives: np.ndarray
    expected: np.ndarray
    feasible: np.ndarray
    weights: np.ndarray
    internal: dict
    weight_stats: dict
    reference_objectives: np.ndarray
    reference_expected: np.ndarray
    external: dict
    external_dispersion: dict
    reference_optimum: Optional[Allocation]
    reference_min: float
    bias: np.ndarray
    mean_bias: dict
    mean_bias_feasible: dict
    reference_infeasible: dict
    resampled: int = 0

    def size_index(self, size):
        return self.sizes.index(size)
