"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_backends.py [--quick] [--json out.json]

Prints one row per (kernel, size) with the best-of-repeats time for each
backend and the speedup. Outputs are also checked for agreement.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from coalloc import _backend
from coalloc.games import shapley_weights
from coalloc.variance import CovarianceMatrix, decompose_variance_game


def psd(rng, n):
    a = rng.standard_normal((n, n))
    return np.ascontiguousarray(a @ a.T / n)


def game_values(rng, n):
    v = rng.standard_normal(1 << n)
    v[0] = 0.0
    return v


def cases(rng, quick):
    tab = (10, 14) if quick else (10, 14, 18)
    for n in tab:
        cov = psd(rng, n)
        yield "variance_table", n, lambda k, c=cov: k.variance_table(c)
        v, w = game_values(rng, n), shapley_weights(n)
        yield "shapley_table", n, lambda k, v=v, w=w: k.shapley_table(v, w)
    for n in (6, 10):
        v = game_values(rng, n)
        yield "modularity_range", n, lambda k, v=v, n=n: k.modularity_range(v, n)
    for n in (3, 5):
        var = np.ascontiguousarray(rng.random((8192, n)))
        w = shapley_weights(n)
        yield "sd_diag_shapley_batch[8192]", n, lambda k, var=var, w=w: k.sd_diag_shapley_batch(var, w)
    v = game_values(rng, 8)
    perms = np.argsort(rng.random((8192, 8)), axis=1).astype(np.int64)
    yield "permutation_marginal_sums[8192]", 8, lambda k: k.permutation_marginal_sums(v, perms)
    for n in (256,) if quick else (256, 1024):
        cov = psd(rng, n)
        yield "row_sums", n, lambda k, c=cov: k.row_sums(c)
        d = decompose_variance_game(CovarianceMatrix(cov))
        yield "decomposed_shapley", n, lambda k, d=d, n=n: k.decomposed_shapley(n, d.members, d.tables)


def best(fn, budget=0.2):
    t = timeit.Timer(fn)
    number, _ = t.autorange()
    number = max(1, int(number * budget / 0.2))
    return min(t.repeat(repeat=5, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    ap.add_argument("--json", help="also write results here")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if "cython" not in _backend.BACKENDS:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    cy, py = _backend.get("cython"), _backend.get("python")
    rng = np.random.default_rng(args.seed)
    rows = []
    print(f"{'kernel':34s} {'n':>5s} {'cython':>11s} {'python':>11s} {'speedup':>8s}")
    for name, n, run in cases(rng, args.quick):
        a, b = np.asarray(run(cy)), np.asarray(run(py))
        agree = bool(np.allclose(a, b, rtol=1e-9, atol=1e-9))
        tc, tp = best(lambda: run(cy)), best(lambda: run(py))
        rows.append({"kernel": name, "n": n, "cython_s": tc, "python_s": tp, "agree": agree})
        flag = "" if agree else "  MISMATCH"
        print(f"{name:34s} {n:5d} {tc * 1e3:9.3f}ms {tp * 1e3:9.3f}ms {tp / tc:7.1f}x{flag}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
