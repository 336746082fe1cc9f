"""Pure-Python (numpy) versions of the lattice kernels.

Same signatures and semantics as the compiled ``_kernels`` module. Results
agree with it to rounding; summation order differs.
"""

import numpy as np


def _popcounts(n):
    pop = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pop[1 << i : 1 << (i + 1)] = pop[: 1 << i] + 1
    return pop


def _without(n, i):
    """All coalition masks that do not contain player ``i``."""
    masks = np.arange(1 << n, dtype=np.int64)
    return masks[(masks >> i) & 1 == 0]


def shapley_table(values, weights):
    n = len(weights)
    pop = _popcounts(n)
    phi = np.empty(n, dtype=np.float64)
    for i in range(n):
        J = _without(n, i)
        phi[i] = np.dot(weights[pop[J]], values[J | (1 << i)] - values[J])
    return phi


def modularity_range(values, n):
    lo, hi = np.inf, -np.inf
    for i in range(n):
        for j in range(i + 1, n):
            J = _without(n, i)
            J = J[(J >> j) & 1 == 0]
            bi, bj = 1 << i, 1 << j
            d = values[J | bi | bj] - values[J | bi] - values[J | bj] + values[J]
            lo = min(lo, float(d.min()))
            hi = max(hi, float(d.max()))
    return lo, hi


def variance_table(cov):
    n = cov.shape[0]
    out = np.zeros(1 << n, dtype=np.float64)
    for i in range(n):
        half = 1 << i
        # cross[J] = sum_{j in J} cov[i, j] for J over the first i players
        cross = np.zeros(half, dtype=np.float64)
        for j in range(i):
            cross[1 << j : 1 << (j + 1)] = cross[: 1 << j] + cov[i, j]
        out[half : 2 * half] = out[:half] + cov[i, i] + 2.0 * cross
    return out


def sd_diag_shapley_batch(variances, weights):
    m, n = variances.shape
    var = np.zeros((m, 1 << n), dtype=np.float64)
    for i in range(n):
        half = 1 << i
        var[:, half : 2 * half] = var[:, :half] + variances[:, i : i + 1]
    sd = np.sqrt(np.maximum(var, 0.0))
    pop = _popcounts(n)
    out = np.empty((m, n), dtype=np.float64)
    for i in range(n):
        J = _without(n, i)
        out[:, i] = (sd[:, J | (1 << i)] - sd[:, J]) @ weights[pop[J]]
    return out


def permutation_marginal_sums(values, perms):
    m, n = perms.shape
    masks = np.cumsum(np.left_shift(1, perms), axis=1)
    after = values[masks]
    before = np.concatenate([np.full((m, 1), values[0]), after[:, :-1]], axis=1)
    acc = np.zeros(n, dtype=np.float64)
    np.add.at(acc, perms.ravel(), (after - before).ravel())
    return acc


def row_sums(cov):
    return cov.sum(axis=1)


def decomposed_shapley(n, members, tables):
    a, b = members[:, 0], members[:, 1]
    single = b < 0
    ta, tb, tab = tables[:, 1], tables[:, 2], tables[:, 3]
    phi = np.zeros(n, dtype=np.float64)
    phi += np.bincount(a[single], weights=ta[single], minlength=n)
    pair = ~single
    phi += np.bincount(a[pair], weights=0.5 * (ta + tab - tb)[pair], minlength=n)
    phi += np.bincount(b[pair], weights=0.5 * (tb + tab - ta)[pair], minlength=n)
    return phi
