"""Finite cooperative games over bitmask coalitions.

Player ``i`` is bit ``i`` of a coalition mask, players are numbered from 0.
A game stores its characteristic function as a flat table of ``2**n`` values
indexed by mask, with ``values[0] == 0``.

Tolerances are relative to ``game.scale = 1 + max|values|``.
"""

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from coalloc import _backend
from coalloc._parallel import block_rng, map_blocks

MAX_PLAYERS = 24
MAX_MODULARITY_PLAYERS = 16

EFFICIENCY_TOL = 1e-9
INEQUALITY_TOL = 1e-12


class GuardError(ValueError):
    """An enumeration size guard was exceeded."""


def coalition(players, n=None):
    """Bitmask for an iterable of 0-based player indices."""
    mask = 0
    for p in players:
        p = int(p)
        if p < 0 or (n is not None and p >= n):
            raise ValueError(f"player index {p} out of range for n={n}")
        mask |= 1 << p
    return mask


def members(mask):
    """Sorted tuple of players in ``mask``."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _as_mask(J, n):
    if isinstance(J, (int, np.integer)):
        J = int(J)
        if J < 0 or J >> n:
            raise ValueError(f"coalition mask {J:#x} has bits outside {n} players")
        return J
    return coalition(J, n)


def shapley_weights(n):
    """w[s] = s!(n-s-1)!/n! for s = 0..n-1, by multiplicative recurrence."""
    w = np.empty(n, dtype=np.float64)
    w[0] = 1.0 / n
    for s in range(n - 1):
        w[s + 1] = w[s] * (s + 1) / (n - s - 1)
    return w


def subset_sums(x):
    """Table of sum_{i in J} x_i over every mask J."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(1 << len(x), dtype=np.float64)
    for i, xi in enumerate(x):
        out[1 << i : 1 << (i + 1)] = out[: 1 << i] + xi
    return out


@dataclass(frozen=True, eq=False)
class TabularGame:
    """Characteristic function stored as a full table over ``2**n`` coalitions."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if not 1 <= n <= MAX_PLAYERS:
            raise GuardError(f"tabular games need 1 <= n <= {MAX_PLAYERS}, got n={n}")
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.shape[0] != 1 << n:
            raise ValueError(f"expected {1 << n} values for n={n}, got {values.shape[0]}")
        if values[0] != 0.0:
            raise ValueError(f"value of the empty coalition must be 0, got {values[0]!r}")
        if not np.isfinite(values).all():
            raise ValueError("game values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", values)

    @classmethod
    def _adopt(cls, n, values):
        """Wrap a table freshly built by a kernel, without copying or rescanning it.

        The caller guarantees a float64 array of length ``2**n`` with
        ``values[0] == 0`` and only finite entries.
        """
        game = object.__new__(cls)
        values.flags.writeable = False
        object.__setattr__(game, "n", int(n))
        object.__setattr__(game, "values", values)
        return game

    @property
    def scale(self):
        return 1.0 + float(np.max(np.abs(self.values)))

    @property
    def grand(self):
        return float(self.values[-1])

    def __call__(self, J):
        return float(self.values[_as_mask(J, self.n)])

    def __add__(self, other):
        if not isinstance(other, TabularGame):
            return NotImplemented
        self._check_compatible(other)
        return TabularGame(self.n, self.values + other.values)

    def __sub__(self, other):
        if not isinstance(other, TabularGame):
            return NotImplemented
        self._check_compatible(other)
        return TabularGame(self.n, self.values - other.values)

    def __mul__(self, alpha):
        return TabularGame(self.n, float(alpha) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return TabularGame(self.n, -self.values)

    def _check_compatible(self, other):
        if other.n != self.n:
            raise ValueError(f"games have different player counts ({self.n} vs {other.n})")

    def to_dict(self):
        return {"n": self.n, "values": self.values.tolist()}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["n"]), data["values"])
        except KeyError as exc:
            raise ValueError(f"game JSON is missing field {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_function(cls, n, fn):
        """Tabulate ``fn(players_tuple)`` over all coalitions."""
        if not 1 <= n <= MAX_PLAYERS:
            raise GuardError(f"tabular games need 1 <= n <= {MAX_PLAYERS}, got n={n}")
        return cls(n, [fn(members(J)) if J else 0.0 for J in range(1 << n)])


def additive_game(weights):
    """xi(J) = sum of ``weights`` over J."""
    weights = np.asarray(weights, dtype=np.float64)
    if not 1 <= len(weights) <= MAX_PLAYERS:
        raise GuardError(f"tabular games need 1 <= n <= {MAX_PLAYERS}, got n={len(weights)}")
    return TabularGame(len(weights), subset_sums(weights))


def shapley_exact(game, backend=None):
    """Exact Shapley value by the weighted sum over coalitions not containing each player."""
    kernels = _backend.get(backend)
    return kernels.shapley_table(game.values, shapley_weights(game.n))


def shapley_permutations(game):
    """Exact Shapley value as the average marginal contribution over all ``n!`` orders.

    Cost is ``n * n!``; meant as an independent check of :func:`shapley_exact`
    on small games.
    """
    n = game.n
    if n > 9:
        raise GuardError(f"permutation enumeration is limited to n <= 9, got n={n}")
    v = game.values
    totals = [0.0] * n
    count = 0
    for order in itertools.permutations(range(n)):
        mask = 0
        for p in order:
            before = v[mask]
            mask |= 1 << p
            totals[p] += v[mask] - before
        count += 1
    return np.array(totals) / count


@dataclass(frozen=True)
class PermutationSampleConfig:
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        if int(self.sample_count) < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def shapley_sampled(game, cfg, threads=None, backend=None):
    """Monte-Carlo Shapley estimate from ``cfg.sample_count`` random player orders.

    Order ``k`` is drawn from the stream of its block (see ``_parallel``), so
    the estimate depends only on ``(seed, sample_count)``, never on ``threads``.
    """
    kernels = _backend.get(backend)
    n = game.n

    def run(block, start, stop):
        rng = block_rng(cfg.seed, block)
        perms = np.argsort(rng.random((stop - start, n)), axis=1, kind="stable")
        return kernels.permutation_marginal_sums(game.values, np.ascontiguousarray(perms, dtype=np.int64))

    total = np.zeros(n, dtype=np.float64)
    for part in map_blocks(run, cfg.sample_count, threads):
        total += part
    return total / cfg.sample_count


def _modularity_range(game, backend=None):
    if game.n > MAX_MODULARITY_PLAYERS:
        raise GuardError(
            f"modularity classification is limited to n <= {MAX_MODULARITY_PLAYERS}, got n={game.n}"
        )
    if game.n < 2:
        return math.inf, -math.inf
    return _backend.get(backend).modularity_range(game.values, game.n)


def is_supermodular(game, backend=None):
    """v(I u J) + v(I n J) >= v(I) + v(J) for all I, J, via increasing marginals."""
    lo, _ = _modularity_range(game, backend)
    return lo >= -INEQUALITY_TOL * game.scale


def is_submodular(game, backend=None):
    _, hi = _modularity_range(game, backend)
    return hi <= INEQUALITY_TOL * game.scale


def _check_allocation(game, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (game.n,):
        raise ValueError(f"allocation has shape {x.shape}, game has {game.n} players")
    return x


def _efficient(game, sums):
    return abs(sums[-1] - game.grand) <= EFFICIENCY_TOL * game.scale


def in_core(game, x):
    """x sums to v(N) and v(J) <= x(J) for every coalition."""
    x = _check_allocation(game, x)
    sums = subset_sums(x)
    tol = INEQUALITY_TOL * game.scale
    return bool(_efficient(game, sums) and np.all(game.values[:-1] <= sums[:-1] + tol))


def in_anticore(game, x):
    """x sums to v(N) and v(J) >= x(J) for every coalition."""
    x = _check_allocation(game, x)
    sums = subset_sums(x)
    tol = INEQUALITY_TOL * game.scale
    return bool(_efficient(game, sums) and np.all(game.values[:-1] >= sums[:-1] - tol))


def fuse(game, J):
    """Merge the players of ``J`` into one player, placed last.

    The remaining players keep their relative order at indices
    ``0 .. n-|J|-1``; the fused player gets index ``n-|J|``.
    """
    mask = _as_mask(J, game.n)
    if mask == 0:
        raise ValueError("cannot fuse an empty coalition")
    rest = [p for p in range(game.n) if not (mask >> p) & 1]
    new_bits = [1 << p for p in rest] + [mask]
    unfold = np.zeros(1 << len(new_bits), dtype=np.int64)
    for k, bits in enumerate(new_bits):
        unfold[1 << k : 1 << (k + 1)] = unfold[: 1 << k] | bits
    return TabularGame(len(new_bits), game.values[unfold])


def fusion_gap(game, J, backend=None):
    """phi of the fused player minus the summed phi of its members."""
    mask = _as_mask(J, game.n)
    phi = shapley_exact(game, backend)
    fused = shapley_exact(fuse(game, mask), backend)
    return float(fused[-1] - phi[list(members(mask))].sum())


def satisfies_fusion_property(game, J, backend=None):
    return abs(fusion_gap(game, J, backend)) <= EFFICIENCY_TOL * game.scale


def find_dummies(game):
    """Players whose marginal contribution is zero for every coalition."""
    v = game.values
    tol = INEQUALITY_TOL * game.scale
    masks = np.arange(1 << game.n, dtype=np.int64)
    out = set()
    for i in range(game.n):
        J = masks[(masks >> i) & 1 == 0]
        if np.all(np.abs(v[J | (1 << i)] - v[J]) <= tol):
            out.add(i)
    return out


def symmetric_pairs(game):
    """Pairs (i, j), i < j, with v(J + i) == v(J + j) for all J excluding both."""
    v = game.values
    tol = INEQUALITY_TOL * game.scale
    masks = np.arange(1 << game.n, dtype=np.int64)
    out = set()
    for i in range(game.n):
        for j in range(i + 1, game.n):
            J = masks[((masks >> i) & 1 == 0) & ((masks >> j) & 1 == 0)]
            if np.all(np.abs(v[J | (1 << i)] - v[J | (1 << j)]) <= tol):
                out.add((i, j))
    return out
