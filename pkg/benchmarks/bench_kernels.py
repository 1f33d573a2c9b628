"""Compiled kernels vs the numpy fallback.

Times the three hot loops on inputs sized like a full-scale LOOCV run and
checks that both backends return the same numbers.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import sys
import timeit

import numpy as np

from eegpnn import _kernels_py, kernels


def _cases(rng):
    segments = rng.normal(size=(48, 8192))
    q, r = 48 * 4, 34
    x = rng.normal(size=(q, r))
    weights = np.ones((q, r)) / x.var(axis=0)
    labels = rng.integers(0, 2, q)
    exclude = np.arange(q, dtype=np.int64)
    gamma = np.log(2) / 0.1 ** 2
    return {
        "higuchi_lengths (48 x 8192, k_max=5)":
            lambda impl: kernels.higuchi_lengths(segments, 5, impl=impl),
        "sign_changes (48 x 8192)":
            lambda impl: kernels.sign_changes(segments, impl=impl),
        f"log_class_scores (LOOCV, Q={q}, R={r})":
            lambda impl: kernels.log_class_scores(x, x, weights, labels, 2, gamma,
                                                  exclude, impl=impl),
    }


def run(repeat: int = 5, seed: int = 0) -> list:
    compiled = kernels.compiled()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rows = []
    for name, fn in _cases(np.random.default_rng(seed)).items():
        a, b = fn(compiled), fn(_kernels_py)
        max_rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=repeat))
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=repeat))
        rows.append({"kernel": name, "cython_s": t_c, "numpy_s": t_py,
                     "speedup": t_py / t_c, "max_rel_diff": max_rel})
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="best-of repeats per timing")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", help="also write the rows to this file")
    args = parser.parse_args(argv)

    rows = run(args.repeat, args.seed)
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'cython':>10}  {'numpy':>10}  {'speedup':>8}  {'max rel diff':>12}")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['cython_s'] * 1e3:>8.2f}ms  {r['numpy_s'] * 1e3:>8.2f}ms"
              f"  {r['speedup']:>7.1f}x  {r['max_rel_diff']:>12.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
