"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]

Prints one CSV row per (kernel, size, backend) with the best wall time and
the speedup of the compiled backend over the Python one.
"""

import argparse
import csv
import importlib
import sys
import timeit

import numpy as np

from spga import _core_py


def _load_compiled():
    try:
        return importlib.import_module("spga._core")
    except ImportError:
        return None


def cases(rng):
    for n in (128, 1_000, 10_000, 100_000):
        g = np.sort(np.abs(1 / (1 + np.exp(-rng.normal(scale=3, size=n))) - (rng.random(n) < 0.5)))
        yield "window_counts", n, lambda impl, g=g: impl.window_counts(g, 0.05)
    for a, b, x in [(2.5, 0.5, 0.3), (15.5, 0.5, 0.4), (100.0, 0.5, 0.9)]:
        yield "beta_cf", f"a={a},b={b},x={x}", lambda impl, a=a, b=b, x=x: impl.beta_cf(a, b, x)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", default=None, help="also write the table here")
    args = ap.parse_args(argv)

    compiled = _load_compiled()
    if compiled is None:
        print("compiled extension not built; timing the Python backend only", file=sys.stderr)
    backends = [("python", _core_py)] + ([("compiled", compiled)] if compiled else [])

    rows = []
    for kernel, size, fn in cases(np.random.default_rng(args.seed)):
        times = {}
        for name, impl in backends:
            timer = timeit.Timer(lambda: fn(impl))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number
        for name, _ in backends:
            speedup = times["python"] / times[name]
            rows.append([kernel, size, name, f"{times[name]:.3e}", f"{speedup:.1f}"])

    header = ["kernel", "size", "backend", "seconds", "speedup_vs_python"]
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(header)
    out.writerows(rows)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            w.writerows(rows)


if __name__ == "__main__":
    main()
