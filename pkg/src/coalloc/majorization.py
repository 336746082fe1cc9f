"""Majorization between normalized variance and SD Shapley allocations.

The open question checked here: for any covariance matrix, the SD-game
Shapley value, normalized to sum to one, is majorized by the normalized
variance-game Shapley value. ``x`` is majorized by ``y`` when the sums agree
and, for every ``m < n``, the ``m`` largest entries of ``x`` sum to at most
the ``m`` largest entries of ``y``.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from coalloc import _backend
from coalloc._parallel import block_rng, map_blocks
from coalloc.games import GuardError, shapley_weights
from coalloc.variance import as_covariance, sd_shapley, variance_shapley

log = logging.getLogger(__name__)

MAJORIZATION_TOL = 1e-12
VIOLATION_THRESHOLD = -1e-9
DEGENERATE_GENERAL = 1e-10
MAX_DIAGONAL_N = 12
MAX_GENERAL_N = 10
MAX_LOGGED_COUNTEREXAMPLES = 100


class DegenerateVarianceError(ValueError):
    """Total variance is (numerically) zero, so allocations cannot be normalized."""


def _top_sums(a):
    """Sums of the 1, 2, ..., n-1 largest entries along the last axis."""
    s = np.sort(a, axis=-1)[..., ::-1]
    return np.cumsum(s, axis=-1)[..., :-1]


def majorization_slack(y, x):
    """Smallest gap ``top_m(y) - top_m(x)`` over m = 1..n-1 (batched on the last axis).

    Non-negative slack plus equal totals means ``x`` is majorized by ``y``.
    Returns ``inf`` when n = 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] == 1:
        return np.full(x.shape[:-1], np.inf) if x.ndim > 1 else math.inf
    gap = (_top_sums(y) - _top_sums(x)).min(axis=-1)
    return gap if gap.ndim else float(gap)


def majorizes(y, x):
    """True when ``x`` is majorized by ``y``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size == 0:
        raise ValueError(f"vectors must have equal non-zero length, got {x.size} and {y.size}")
    tol = MAJORIZATION_TOL * (1.0 + max(np.abs(x).max(), np.abs(y).max()))
    if abs(x.sum() - y.sum()) > tol:
        return False
    return majorization_slack(y, x) >= -tol


def normalized_allocations(cov, backend=None):
    """Variance and SD Shapley values, each divided by its game's grand value."""
    cov = as_covariance(cov)
    total = cov.total_variance
    if total <= 1e-12 * (1.0 + cov.trace):
        raise DegenerateVarianceError(f"total variance {total:.3e} is zero; allocations are all zero")
    v = variance_shapley(cov, backend) / total
    s = sd_shapley(cov, backend) / math.sqrt(total)
    return v, s


def n2_margin(sigma1, sigma2, rho):
    """(s1 - s2) * sqrt(s1^2 + s2^2 + 2 rho s1 s2) + s2^2 + rho s1 s2, for s1 <= s2.

    Non-negative on the whole domain and nondecreasing in ``rho``. Works
    elementwise on arrays.
    """
    s1 = np.asarray(sigma1, dtype=np.float64)
    s2 = np.asarray(sigma2, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    if np.any(s1 < 0) or np.any(s2 < s1) or np.any(np.abs(r) > 1):
        raise ValueError("need 0 <= sigma1 <= sigma2 and -1 <= rho <= 1")
    root = np.sqrt(np.maximum(s1 * s1 + s2 * s2 + 2.0 * r * s1 * s2, 0.0))
    out = (s1 - s2) * root + s2 * s2 + r * s1 * s2
    return out if out.ndim else float(out)


def _sorted_sphere(z, rng):
    """Map standard-normal rows to nondecreasing points of the unit sphere's positive part."""
    a = np.abs(z)
    norms = np.sqrt((a * a).sum(axis=1))
    for k in np.flatnonzero(norms == 0.0):
        while norms[k] == 0.0:
            a[k] = np.abs(rng.standard_normal(a.shape[1]))
            norms[k] = np.sqrt((a[k] * a[k]).sum())
    return np.sort(a / norms[:, None], axis=1)


def sample_sorted_sphere(n, rng):
    """One point uniformly distributed on {sigma >= 0, |sigma| = 1, sorted ascending}."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return _sorted_sphere(rng.standard_normal((1, n)), rng)[0]


@dataclass
class ConjectureReport:
    n: int
    samples: int
    seed: int
    mode: str = "diagonal"
    violations: int = 0
    near_misses: int = 0
    skipped_degenerate: int = 0
    worst_margin: float = math.inf
    elapsed: float = 0.0
    counterexamples: list = field(default_factory=list, repr=False)

    def to_dict(self):
        """JSON-ready fields; an empty run's infinite margin becomes ``None``."""
        d = asdict(self)
        d.pop("counterexamples")
        d["elapsed_seconds"] = d.pop("elapsed")
        if not math.isfinite(d["worst_margin"]):
            d["worst_margin"] = None
        return d


def _merge(report, parts):
    for violations, near, skipped, worst, examples in parts:
        report.violations += violations
        report.near_misses += near
        report.skipped_degenerate += skipped
        report.worst_margin = min(report.worst_margin, worst)
        room = MAX_LOGGED_COUNTEREXAMPLES - len(report.counterexamples)
        report.counterexamples.extend(examples[:room])
    if report.near_misses:
        log.info("%d samples had slack in (%g, 0)", report.near_misses, VIOLATION_THRESHOLD)
    if report.violations:
        log.warning("%d samples violate the majorization (worst slack %.3e)", report.violations, report.worst_margin)
    for idx, margin, matrix in report.counterexamples:
        log.info("counterexample at sample %d (slack %.3e):\n%s", idx, margin, matrix)
    return report


def _tally(slack, start, matrices):
    bad = np.flatnonzero(slack < VIOLATION_THRESHOLD)
    near = int(np.count_nonzero((slack < 0) & (slack >= VIOLATION_THRESHOLD)))
    worst = float(slack.min()) if slack.size else math.inf
    examples = [(start + int(k), float(slack[k]), matrices(int(k))) for k in bad[:MAX_LOGGED_COUNTEREXAMPLES]]
    return bad.size, near, worst, examples


def verify_conjecture_diagonal(n, samples, seed, threads=None, backend=None):
    """Check the majorization on ``samples`` diagonal matrices diag(sigma^2), sigma uniform on the sorted sphere."""
    if not 2 <= n <= MAX_DIAGONAL_N:
        raise GuardError(f"diagonal verification needs 2 <= n <= {MAX_DIAGONAL_N}, got n={n}")
    if samples < 0:
        raise ValueError(f"samples must be >= 0, got {samples}")
    kernels = _backend.get(backend)
    weights = shapley_weights(n)
    t0 = time.perf_counter()

    def run(block, start, stop):
        rng = block_rng(seed, block)
        sigma = _sorted_sphere(rng.standard_normal((stop - start, n)), rng)
        var = np.ascontiguousarray(sigma * sigma)
        total = var.sum(axis=1, keepdims=True)
        v_norm = var / total
        s_norm = kernels.sd_diag_shapley_batch(var, weights) / np.sqrt(total)
        slack = majorization_slack(v_norm, s_norm)
        bad, near, worst, examples = _tally(slack, start, lambda k: np.diag(var[k]))
        return bad, near, 0, worst, examples

    report = ConjectureReport(n=n, samples=samples, seed=seed, mode="diagonal")
    _merge(report, map_blocks(run, samples, threads))
    report.elapsed = time.perf_counter() - t0
    return report


def random_unit_trace_psd(rng, count, n):
    """Gram matrices A A^T of standard-normal factors, scaled to unit trace."""
    a = rng.standard_normal((count, n, n))
    g = a @ np.swapaxes(a, 1, 2)
    g = (g + np.swapaxes(g, 1, 2)) / 2.0
    return g / np.trace(g, axis1=1, axis2=2)[:, None, None]


def verify_conjecture_general(n, samples, seed, threads=None, backend=None):
    """Same check on random dense covariance matrices; near-zero total variance draws are skipped."""
    if not 2 <= n <= MAX_GENERAL_N:
        raise GuardError(f"general verification needs 2 <= n <= {MAX_GENERAL_N}, got n={n}")
    if samples < 0:
        raise ValueError(f"samples must be >= 0, got {samples}")
    kernels = _backend.get(backend)
    weights = shapley_weights(n)
    t0 = time.perf_counter()

    def run(block, start, stop):
        rng = block_rng(seed, block)
        mats = random_unit_trace_psd(rng, stop - start, n)
        totals = mats.sum(axis=(1, 2))
        keep = np.flatnonzero(totals > DEGENERATE_GENERAL)
        v_norm = np.empty((keep.size, n))
        s_norm = np.empty((keep.size, n))
        for row, k in enumerate(keep):
            m = np.ascontiguousarray(mats[k])
            v_norm[row] = kernels.row_sums(m) / totals[k]
            sd = np.sqrt(np.maximum(kernels.variance_table(m), 0.0))
            s_norm[row] = kernels.shapley_table(sd, weights) / math.sqrt(totals[k])
        slack = majorization_slack(v_norm, s_norm) if keep.size else np.empty(0)
        bad, near, worst, examples = _tally(slack, start, lambda r: mats[keep[r]].copy())
        examples = [(start + int(keep[idx - start]), margin, m) for idx, margin, m in examples]
        return bad, near, (stop - start) - keep.size, worst, examples

    report = ConjectureReport(n=n, samples=samples, seed=seed, mode="general")
    _merge(report, map_blocks(run, samples, threads))
    report.elapsed = time.perf_counter() - t0
    return report
