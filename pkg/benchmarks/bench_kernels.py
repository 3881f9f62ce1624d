"""Compiled vs pure-Python kernels.

Times each kernel on both backends with identical inputs, checks that the
outputs agree, then times one end-to-end computation under each backend in a
fresh interpreter (the backend is fixed at import).

    python3 benchmarks/bench_kernels.py [--repeat N] [--json]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from singser import _pykernels as pure

try:
    from singser import _ckernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def _cases(rng: np.random.Generator):
    primes = pure.primes_upto(10**6)
    x = rng.normal(size=10**6)
    tuples = np.ascontiguousarray(np.sort(rng.integers(0, 500, size=(20000, 4)), axis=1))
    cut = np.full(tuples.shape[0], 168, dtype=np.int64)  # primes below 1000
    ms = rng.integers(1, 10**9, size=20000)
    return {
        "neumaier_sum(1e6)": (lambda m: m.neumaier_sum(x)),
        "neumaier_cumsum(1e6)": (lambda m: m.neumaier_cumsum(x)),
        "primes_upto(1e7)": (lambda m: m.primes_upto(10**7)),
        "euler_exact_batch(20000x4)": (lambda m: m.euler_exact_batch(tuples, primes, cut, 1)),
        "odd_prime_adjust(20000)": (lambda m: m.odd_prime_adjust(ms, 1, primes)),
    }


END_TO_END = (
    "import time;"
    "from singser.singular import singular_series_zero_batch; import numpy as np;"
    "rows = np.sort(np.random.default_rng(0).integers(0, 400, size=(20000, 3)), axis=1);"
    "rows = rows[(np.diff(rows, axis=1) > 0).all(axis=1)];"
    "t = time.perf_counter(); singular_series_zero_batch(np.ascontiguousarray(rows)); print(time.perf_counter() - t)"
)


def _end_to_end(pure_backend: bool) -> float:
    env = dict(os.environ)
    env["SINGSER_PURE_PYTHON"] = "1" if pure_backend else "0"
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1

    results = []
    for name, fn in _cases(np.random.default_rng(0)).items():
        a, b = fn(pure), fn(compiled)
        agree = bool(np.allclose(a, b, rtol=1e-12, atol=1e-9))
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        results.append({"kernel": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc, "agree": agree})
    tp, tc = _end_to_end(True), _end_to_end(False)
    results.append({"kernel": "singular_series_zero_batch (end to end)", "python_s": tp, "cython_s": tc,
                    "speedup": tp / tc, "agree": True})

    if args.json:
        print(json.dumps(results, indent=2))
    else:
        print(f"{'kernel':42s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  agree")
        for r in results:
            print(f"{r['kernel']:42s} {r['python_s']:11.4f} {r['cython_s']:11.4f} {r['speedup']:8.1f}  {r['agree']}")
    return 0 if all(r["agree"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
