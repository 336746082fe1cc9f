"""Games generated by a covariance matrix and their Shapley allocations.

For returns ``X_1..X_n`` with covariance ``cov``:

* variance game      ``nu(J)     = Var[sum_{i in J} X_i]``
* SD game            ``lambda(J) = sqrt(nu(J))``
* utility game       ``gamma(J)  = E[sum_{i in J} X_i] - theta * nu(J)``

The variance game has a closed-form Shapley value (row sums of ``cov``) and
a decomposition into issues of at most two players each; the SD game has
neither and is solved by enumeration.
"""

from dataclasses import dataclass

import numpy as np

from coalloc import _backend
from coalloc.games import MAX_PLAYERS, GuardError, TabularGame, additive_game, members, shapley_exact

PSD_TOL = 1e-8
NEGATIVE_VARIANCE_TOL = 1e-12
SAFE_TABLE_BOUND = 1e300


class CovarianceMatrix:
    """Symmetric positive semidefinite matrix, validated on construction.

    Input is symmetrized as ``(A + A.T) / 2``. The smallest eigenvalue must be
    at least ``-1e-8 * (1 + trace)``.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"covariance must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("covariance entries must be finite")
        a = np.ascontiguousarray((a + a.T) / 2.0)
        diag = np.diag(a)
        if np.any(diag < 0):
            i = int(np.argmin(diag))
            raise ValueError(f"negative variance {diag[i]!r} on the diagonal at index {i}")
        trace = float(diag.sum())
        lowest = float(np.linalg.eigvalsh(a)[0])
        if lowest < -PSD_TOL * (1.0 + trace):
            raise ValueError(f"covariance is not positive semidefinite (smallest eigenvalue {lowest:.3e})")
        a.flags.writeable = False
        self.entries = a
        # bounds |Var| of every sub-sum, so tables built from it need no rescan
        self.abs_total = float(np.abs(a).sum())

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.entries))

    @property
    def total_variance(self):
        """Var of the sum of all components."""
        return float(self.entries.sum())

    def fuse(self, players):
        """Covariance after replacing ``players`` by their sum, placed last."""
        players = sorted(set(int(p) for p in players))
        if not players:
            raise ValueError("cannot fuse an empty set of assets")
        if players[0] < 0 or players[-1] >= self.n:
            raise ValueError(f"asset index out of range for n={self.n}")
        rest = [p for p in range(self.n) if p not in players]
        agg = np.zeros((self.n, len(rest) + 1))
        agg[rest, np.arange(len(rest))] = 1.0
        agg[players, -1] = 1.0
        return CovarianceMatrix(agg.T @ self.entries @ agg)

    def __repr__(self):
        return f"CovarianceMatrix(n={self.n})"


def as_covariance(cov):
    return cov if isinstance(cov, CovarianceMatrix) else CovarianceMatrix(cov)


@dataclass(frozen=True)
class UtilityParams:
    """Risk aversion of the mean-variance score ``E[X] - theta * Var[X]``."""

    theta: float

    def __post_init__(self):
        theta = float(self.theta)
        if not np.isfinite(theta) or theta < 0:
            raise ValueError(f"theta must be finite and >= 0, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)


def _as_mean(mu, n):
    mu = np.asarray(mu, dtype=np.float64).ravel()
    if mu.shape[0] != n:
        raise ValueError(f"mean vector has length {mu.shape[0]}, covariance has dimension {n}")
    if not np.all(np.isfinite(mu)):
        raise ValueError("mean entries must be finite")
    return mu


def _guard(n):
    if n > MAX_PLAYERS:
        raise GuardError(f"tabular games need n <= {MAX_PLAYERS}, got n={n}")


def _table_game(cov, values):
    if cov.abs_total < SAFE_TABLE_BOUND:
        return TabularGame._adopt(cov.n, values)
    return TabularGame(cov.n, values)


def variance_game(cov, backend=None):
    cov = as_covariance(cov)
    _guard(cov.n)
    return _table_game(cov, _backend.get(backend).variance_table(cov.entries))


def variance_shapley(cov, backend=None):
    """phi_i = Cov[X_i, S_N], the i-th row sum of the covariance matrix."""
    return _backend.get(backend).row_sums(as_covariance(cov).entries)


def sd_game(cov, backend=None):
    cov = as_covariance(cov)
    _guard(cov.n)
    var = _backend.get(backend).variance_table(cov.entries)
    scale = 1.0 + float(np.max(np.abs(var)))
    worst = float(var.min())
    if worst < -NEGATIVE_VARIANCE_TOL * scale:
        J = members(int(np.argmin(var)))
        raise ValueError(f"coalition {J} has negative variance {worst:.3e}")
    return _table_game(cov, np.sqrt(np.maximum(var, 0.0)))


def sd_shapley(cov, backend=None):
    """Exact Shapley value of the SD game; exponential in n."""
    return shapley_exact(sd_game(cov, backend), backend)


def expectation_game(mu):
    return additive_game(mu)


def utility_game(mu, cov, params, backend=None):
    cov = as_covariance(cov)
    mu = _as_mean(mu, cov.n)
    theta = _theta(params)
    return expectation_game(mu) - theta * variance_game(cov, backend)


def _theta(params):
    return params.theta if isinstance(params, UtilityParams) else UtilityParams(params).theta


def utility_allocation(mu, cov, params, backend=None):
    """phi_i = E[X_i] - theta * Cov[X_i, S_N]."""
    cov = as_covariance(cov)
    mu = _as_mean(mu, cov.n)
    return mu - _theta(params) * variance_shapley(cov, backend)


class DecomposedGame:
    """Sum of issue games, each concerning one or two players.

    ``members[t] = (a, b)`` with ``b = -1`` for a single-player issue.
    ``tables[t, k]`` is the issue's value on local coalition ``k`` where bit 0
    stands for ``a`` and bit 1 for ``b``; ``tables[t, 0]`` is always 0.
    """

    def __init__(self, n, members, tables):
        n = int(n)
        members = np.ascontiguousarray(members, dtype=np.int64).reshape(-1, 2)
        tables = np.ascontiguousarray(tables, dtype=np.float64).reshape(-1, 4)
        if n < 1:
            raise ValueError(f"need at least one player, got n={n}")
        if members.shape[0] != tables.shape[0]:
            raise ValueError("members and tables must describe the same number of issues")
        a, b = members[:, 0], members[:, 1]
        if np.any((a < 0) | (a >= n)) or np.any((b < -1) | (b >= n)) or np.any(a == b):
            raise ValueError("issue members out of range or repeated")
        if np.any(tables[:, 0] != 0.0):
            raise ValueError("every issue must be worth 0 on the empty coalition")
        single = b < 0
        if np.any(tables[single, 2:] != 0.0):
            raise ValueError("single-player issues cannot have values for a second member")
        if not np.all(np.isfinite(tables)):
            raise ValueError("issue values must be finite")
        members.flags.writeable = False
        tables.flags.writeable = False
        self.n = n
        self.members = members
        self.tables = tables

    @classmethod
    def from_issues(cls, n, issues):
        """Build from ``(players, table)`` pairs.

        ``table`` lists the issue's values over the local coalitions of
        ``players`` in bitmask order: two entries for one player, four for two.
        """
        mem, tab = [], []
        for players, table in issues:
            players = tuple(int(p) for p in players)
            table = [float(v) for v in table]
            if not 1 <= len(players) <= 2:
                raise ValueError(f"issues concern one or two players, got {players}")
            if len(table) != 1 << len(players):
                raise ValueError(f"issue {players} needs {1 << len(players)} table entries, got {len(table)}")
            if len(players) == 1:
                mem.append((players[0], -1))
                tab.append(table + [0.0, 0.0])
            else:
                mem.append(players)
                tab.append(table)
        return cls(n, np.array(mem, dtype=np.int64).reshape(-1, 2), np.array(tab).reshape(-1, 4))

    def __len__(self):
        return self.members.shape[0]

    def issues(self):
        for (a, b), table in zip(self.members.tolist(), self.tables.tolist()):
            if b < 0:
                yield (a,), table[:2]
            else:
                yield (a, b), table

    def _local(self, masks):
        masks = np.asarray(masks, dtype=np.int64)[..., None]
        a, b = self.members[:, 0], self.members[:, 1]
        in_a = (masks >> a) & 1
        in_b = np.where(b >= 0, (masks >> np.maximum(b, 0)) & 1, 0)
        return in_a + 2 * in_b

    def value(self, J):
        """sum_t nu_t(J n C_t)"""
        local = self._local(int(J))
        return float(self.tables[np.arange(len(self)), local].sum())

    def to_tabular(self):
        _guard(self.n)
        masks = np.arange(1 << self.n, dtype=np.int64)
        local = self._local(masks)
        return TabularGame(self.n, self.tables[np.arange(len(self)), local].sum(axis=1))


def decompose_variance_game(cov):
    """One issue per variance, one per nonzero covariance pair (worth 2*cov when both present)."""
    a = as_covariance(cov).entries
    n = a.shape[0]
    i, j = np.triu_indices(n, k=1)
    keep = a[i, j] != 0.0
    i, j = i[keep], j[keep]
    members = np.empty((n + i.size, 2), dtype=np.int64)
    members[:n, 0] = np.arange(n)
    members[:n, 1] = -1
    members[n:, 0] = i
    members[n:, 1] = j
    tables = np.zeros((n + i.size, 4))
    tables[:n, 1] = np.diag(a)
    tables[n:, 3] = 2.0 * a[i, j]
    return DecomposedGame(n, members, tables)


def decomposed_shapley(game, backend=None):
    """Shapley value as the sum of each issue's own two-player Shapley value."""
    return _backend.get(backend).decomposed_shapley(game.n, game.members, game.tables)
