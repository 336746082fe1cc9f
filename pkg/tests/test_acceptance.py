"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runs on the active backend (compiled by default, numpy with
COALLOC_PURE_PYTHON=1). Run standalone with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
import timeit

import numpy as np
import pytest

from coalloc import _backend
from coalloc.games import (
    PermutationSampleConfig,
    TabularGame,
    find_dummies,
    fuse,
    in_anticore,
    in_core,
    is_submodular,
    is_supermodular,
    satisfies_fusion_property,
    shapley_exact,
    shapley_permutations,
    shapley_sampled,
    symmetric_pairs,
)
from coalloc.majorization import n2_margin, verify_conjecture_diagonal, verify_conjecture_general
from coalloc.variance import (
    CovarianceMatrix,
    decompose_variance_game,
    decomposed_shapley,
    sd_game,
    sd_shapley,
    variance_game,
    variance_shapley,
)

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from conftest import (  # noqa: E402
    DIAG_149,
    EX_2x2,
    EXCHANGEABLE_4x4,
    HEDGED_4x4,
    hedged_psd,
    nonnegative_psd,
    nonpositive_offdiag_psd,
    random_game_values,
    random_psd,
)

r = math.sqrt
_capture = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _capture["sys"] = capsys
    yield
    _capture.clear()


def report(criterion, ok, detail):
    line = f"[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail}; backend {_backend.NAME})"
    with _capture["sys"].disabled():
        print("\n" + line)
    assert ok, line


def timed(fn, repeats=5):
    fn()
    ts = []
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t)
    return out, float(np.median(ts))


def test_criterion_1_closed_form_golden_values():
    cases = [
        (EX_2x2, [-1.0, 2.0]),
        (HEDGED_4x4, [-2.0, 2.0, 2.0, 2.0]),
        (EXCHANGEABLE_4x4, [2.0, 2.0, 0.0, 0.0]),
    ]
    ok, worst = True, 0.0
    for cov, expected in cases:
        phi, t = timed(lambda: variance_shapley(cov))
        ok &= phi.tolist() == expected and t < 1e-3
        worst = max(worst, t)
    report(1, ok, f"exact match on 3 examples, slowest {worst * 1e6:.0f} us")


def test_criterion_2_sd_golden_values():
    def work():
        phi = sd_shapley(DIAG_149)
        lam = sd_game(DIAG_149)
        fused = shapley_exact(fuse(lam, [1, 2]))
        return phi, fused, satisfies_fusion_property(lam, [1, 2])

    (phi, fused, holds), t = timed(work)
    expected = [
        (2 * r(14) + r(10) + r(5) - 3 - 2 * r(13)) / 6,
        (2 * r(14) + r(13) + r(5) - 2 * r(10)) / 6,
        (2 * r(14) + r(13) + r(10) + 3 - 2 * r(5)) / 6,
    ]
    fused_expected = [(1 + r(14) - r(13)) / 2, (r(14) + r(13) - 1) / 2]
    gap = max(np.abs(phi - expected).max(), np.abs(fused - fused_expected).max())
    ok = gap <= 1e-12 and not holds and t < 1e-2
    report(2, ok, f"max gap {gap:.1e}, fusion violated={not holds}, {t * 1e3:.2f} ms")


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(200):
        n = 2 + k % 9
        cov = CovarianceMatrix(random_psd(rng, n, int(rng.integers(1, n + 1))))
        nu = variance_game(cov)
        a = shapley_exact(nu)
        b = variance_shapley(cov)
        c = decomposed_shapley(decompose_variance_game(cov))
        gap = max(np.abs(a - b).max(), np.abs(a - c).max(), np.abs(b - c).max())
        worst = max(worst, gap / nu.scale)
    elapsed = time.perf_counter() - t0
    report(3, worst <= 1e-9 and elapsed < 60, f"max gap {worst:.1e} scale units, {elapsed:.1f} s")


def _slope(ns, times):
    return float(np.polyfit(np.log(ns), np.log(times), 1)[0])


def _median_time(fn, repeats):
    fn()
    ts = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return float(np.median(ts))


@pytest.mark.slow
def test_criterion_4_complexity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    ns = [64, 128, 256, 512, 1024]
    tv, td = [], []
    for n in ns:
        a = rng.standard_normal((n, n))
        cov = CovarianceMatrix(a @ a.T / n)
        game = decompose_variance_game(cov)
        tv.append(_median_time(lambda: variance_shapley(cov), 31))
        td.append(_median_time(lambda: decomposed_shapley(game), 15))
    sv, sd = _slope(ns, tv), _slope(ns, td)
    small = CovarianceMatrix(random_psd(rng, 10))
    large = CovarianceMatrix(random_psd(rng, 20))
    # microsecond-scale call: batched timing, min over repeats for both sizes
    t10 = min(timeit.repeat(lambda: variance_game(small), number=500, repeat=21)) / 500
    t20 = min(timeit.repeat(lambda: variance_game(large), number=1, repeat=21))
    ratio = t20 / t10
    elapsed = time.perf_counter() - t0
    ok = abs(sv - 2) <= 0.3 and abs(sd - 2) <= 0.3 and ratio > 1000 and elapsed < 300
    report(4, ok, f"slopes {sv:.2f} (closed form), {sd:.2f} (decomposed); tabular n=20/n=10 cost {ratio:.0f}x")


def test_criterion_5_sign_and_zero_total_suites():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    zero_worst, super_fail, sub_fail = 0.0, 0, 0
    for k in range(100):
        n = 2 + k % 9
        cov = hedged_psd(rng, n)
        nu = variance_game(cov)
        zero_worst = max(zero_worst, np.abs(variance_shapley(cov)).max() / nu.scale)
        cov = nonnegative_psd(rng, n)
        nu = variance_game(cov)
        super_fail += not (is_supermodular(nu) and in_core(nu, variance_shapley(cov)))
        cov = nonpositive_offdiag_psd(rng, n)
        nu = variance_game(cov)
        sub_fail += not (is_submodular(nu) and in_anticore(nu, variance_shapley(cov)))
    elapsed = time.perf_counter() - t0
    ok = zero_worst <= 1e-9 and super_fail == 0 and sub_fail == 0 and elapsed < 30
    report(5, ok, f"zero-total max {zero_worst:.1e}, failures {super_fail}+{sub_fail} of 200, {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_6_conjecture_desk_scale():
    t0 = time.perf_counter()
    parts, ok = [], True
    for n in (3, 4, 5):
        rep = verify_conjecture_diagonal(n, 10**6, seed=2024 + n)
        ok &= rep.violations == 0 and rep.worst_margin > -1e-9
        parts.append(f"n={n}: {rep.violations} violations, worst {rep.worst_margin:.2e}")
    rep = verify_conjecture_general(2, 10**4, seed=2)
    ok &= rep.violations == 0
    parts.append(f"general n=2: {rep.violations} violations")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 900
    report(6, ok, "; ".join(parts) + f"; {elapsed:.0f} s")


def test_criterion_7_n2_margin_grid():
    t0 = time.perf_counter()
    s = np.linspace(0.0, 1.0, 500)
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    keep = s1 <= s2
    rho = np.linspace(-1.0, 1.0, 41)
    m = n2_margin(s1[keep][:, None], s2[keep][:, None], rho[None, :])
    low = float(m.min())
    drop = float(np.diff(m, axis=1).min())
    elapsed = time.perf_counter() - t0
    ok = low >= -1e-12 and drop >= 0.0 and elapsed < 10
    report(7, ok, f"{m.size} points, min {low:.1e}, min step in rho {drop:.1e}, {elapsed:.2f} s")


def _swap(J, i, j):
    if ((J >> i) & 1) != ((J >> j) & 1):
        J ^= (1 << i) | (1 << j)
    return J


def test_criterion_8_axioms():
    rng = np.random.default_rng(8)
    worst = {"efficiency": 0.0, "dummy": 0.0, "symmetry": 0.0, "linearity": 0.0, "permutations": 0.0}
    for k in range(100):
        n = 1 + k % 8
        g = TabularGame(n, random_game_values(rng, n))
        h = TabularGame(n, random_game_values(rng, n))
        phi = shapley_exact(g)
        worst["efficiency"] = max(worst["efficiency"], abs(phi.sum() - g.grand) / g.scale)
        alpha, beta = rng.uniform(-10, 10, 2)
        combo = alpha * g + beta * h
        lin = np.abs(shapley_exact(combo) - alpha * phi - beta * shapley_exact(h)).max()
        worst["linearity"] = max(worst["linearity"], lin / max(combo.scale, g.scale, h.scale))
        worst["permutations"] = max(worst["permutations"], np.abs(phi - shapley_permutations(g)).max())
        if n >= 2:
            d = int(rng.integers(n))
            keep = ((1 << n) - 1) ^ (1 << d)
            dummy = TabularGame(n, g.values[np.arange(1 << n) & keep])
            assert d in find_dummies(dummy)
            worst["dummy"] = max(worst["dummy"], abs(shapley_exact(dummy)[d]) / dummy.scale)
            i, j = sorted(rng.choice(n, 2, replace=False))
            sym = TabularGame(n, (g.values + g.values[[_swap(J, i, j) for J in range(1 << n)]]) / 2)
            assert (i, j) in symmetric_pairs(sym)
            p = shapley_exact(sym)
            worst["symmetry"] = max(worst["symmetry"], abs(p[i] - p[j]) / sym.scale)
    ok = max(worst[k] for k in ("efficiency", "dummy", "symmetry", "linearity")) <= 1e-8
    ok &= worst["permutations"] <= 1e-10
    report(8, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_9_determinism():
    g = TabularGame(6, random_game_values(np.random.default_rng(9), 6))
    cfg = PermutationSampleConfig(50000, seed=77)

    def outputs(threads):
        a = shapley_sampled(g, cfg, threads=threads).tobytes()
        reps = []
        for verify in (verify_conjecture_diagonal, verify_conjecture_general):
            d = verify(3, 30000, seed=91, threads=threads).to_dict()
            d.pop("elapsed_seconds")
            reps.append(repr(d))
        return a, reps

    base = outputs(1)
    same = [outputs(k) == base for k in (2, 8)]
    report(9, all(same), f"threads 2 and 8 identical to 1: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
