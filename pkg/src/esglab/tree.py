"""Tree-structured projection built from a branching vector."""

import numpy as np

from ._rng import make_rng
from .exceptions import ValidationError
from .generation import _linear_returns
from .types import BranchingVector, ScenarioSet, ScenarioTree

MAX_NODES = 10 ** 6


def _as_branching(branching):
    if isinstance(branching, BranchingVector):
        return branching
    return BranchingVector(tuple(branching))


def count_nodes(branching):
    """Closed-form node count ``1 + sum_t prod_{u <= t} b(u)``.

    >>> count_nodes([5, 3, 3, 2])
    156
    """
    total, level = 1, 1
    for b in _as_branching(branching):
        level *= b
        total += level
    return total


def build_tree(model, branching, dt=1.0, seed=None, max_nodes=MAX_NODES):
    """Sample a tree whose children at level t are one-step Gaussian draws.

    Siblings get the uniform conditional probability ``1 / b(t)``. Nodes
    are laid out breadth-first; values at depth ``t`` are the returns over
    period ``t`` (the root carries zeros).

    Raises
    ------
    ValidationError
        If the tree would exceed ``max_nodes`` nodes.
    """
    branching = _as_branching(branching)
    n_nodes = count_nodes(branching)
    if n_nodes > max_nodes:
        raise ValidationError(
            f"branching {list(branching)} gives {n_nodes} nodes, above the limit of {max_nodes}"
        )
    if not dt > 0:
        raise ValidationError("dt must be positive")
    rng = make_rng(seed)
    n = model.n_assets

    parent = np.empty(n_nodes, dtype=np.int64)
    depth = np.empty(n_nodes, dtype=np.int64)
    prob = np.empty(n_nodes)
    values = np.empty((n_nodes, n))
    parent[0], depth[0], prob[0] = -1, 0, 1.0
    values[0] = 0.0

    level_start, level_size, cursor = 0, 1, 1
    for t, b in enumerate(branching, start=1):
        count = level_size * b
        sl = slice(cursor, cursor + count)
        parent[sl] = np.repeat(np.arange(level_start, level_start + level_size), b)
        depth[sl] = t
        prob[sl] = 1.0 / b
        r, _ = _linear_returns(model, count, 1, dt, rng)
        values[sl] = r[:, 0, :]
        level_start, level_size, cursor = cursor, count, cursor + count

    return ScenarioTree(parent, depth, values, prob, branching, dt=dt, names=model.names)


def tree_to_paths(tree):
    """Flatten a tree into one root-to-leaf path per leaf.

    Leaves are enumerated depth-first, left to right (for a breadth-first
    arena with uniform branching this is the order of the last level).

    Returns
    -------
    scenarios : ScenarioSet
        Shape ``(n_leaves, height, n_assets)``.
    probabilities : ndarray of shape (n_leaves,)
        Product of conditional probabilities along each path.
    """
    T = tree.height
    if T == 0:
        raise ValidationError("a tree of height 0 has no periods to flatten")
    leaves = tree.leaves()
    returns = np.empty((leaves.size, T, tree.values.shape[1]))
    probs = np.ones(leaves.size)
    node = leaves.copy()
    for t in range(T - 1, -1, -1):
        returns[:, t, :] = tree.values[node]
        probs *= tree.prob[node]
        node = tree.parent[node]
    return ScenarioSet(returns, dt=tree.dt, method="tree", names=tree.names), probs
