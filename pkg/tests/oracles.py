"""Independent reference implementations used as test oracles.

These deliberately avoid the package's vectorized code paths.
"""

import math
from itertools import combinations_with_replacement

import numpy as np


def grid_by_combinations(n_assets, n_steps):
    """Simplex grid via stars and bars, as sorted integer count tuples."""
    out = set()
    for combo in combinations_with_replacement(range(n_assets), n_steps):
        counts = [0] * n_assets
        for j in combo:
            counts[j] += 1
        out.add(tuple(counts))
    return sorted(out)


def double_loop_scan(returns, m0, n_steps=20, rtol=1e-12, atol=1e-15):
    """Exhaustive scan of a 3-asset, single-period problem with explicit loops.

    Returns ``(weights, objective)`` or ``(None, nan)`` when infeasible.
    """
    r = np.asarray(returns, dtype=float)
    N = r.shape[0]
    cands = []
    for i in range(n_steps + 1):
        for j in range(n_steps + 1 - i):
            k = n_steps - i - j
            w = (i / n_steps, j / n_steps, k / n_steps)
            rp = [w[0] * r[s, 0] + w[1] * r[s, 1] + w[2] * r[s, 2] for s in range(N)]
            mean = math.fsum(rp) / N
            std = math.sqrt(math.fsum((x - mean) ** 2 for x in rp) / (N - 1))
            if mean >= m0:
                cands.append((w, std))
    if not cands:
        return None, float("nan")
    best = min(c[1] for c in cands)
    tol = max(atol, rtol * best)
    for w, std in cands:  # loops run in lexicographic order
        if std <= best + tol:
            return w, std


def grid_by_recursion(n_assets, n_steps):
    """Simplex grid by explicit recursion on the first coordinate."""
    if n_assets == 1:
        return [(n_steps,)]
    out = []
    for first in range(n_steps + 1):
        for rest in grid_by_recursion(n_assets - 1, n_steps - first):
            out.append((first,) + rest)
    return out
