"""Time the compiled and pure-Python FastMCD kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends must return identical subsets; the script exits non-zero if
they disagree.
"""
import argparse
import sys
import timeit

import numpy as np

from skewguard import _kernels
from skewguard.mcd import _start_permutations, h_subset_size
from skewguard.numkit import RngStream

CASES = [  # (n, p, starts): minority sizes seen in the simulation grid and beyond
    (70, 5, 500),
    (70, 10, 500),
    (300, 10, 500),
    (1000, 20, 200),
]


def make_case(n, p, starts, seed=0):
    X = np.random.default_rng(seed).standard_normal((n, p))
    X[: n // 10] += 8.0
    perms = _start_permutations(n, p, starts, RngStream(seed))
    return X, perms, h_subset_size(n, p)


def run(repeat):
    backends = [("python", _kernels.python_backend)]
    if _kernels.compiled_backend is None:
        print("compiled backend unavailable; timing the python kernels only")
    else:
        backends.append(("compiled", _kernels.compiled_backend))
    print(f"{'n':>5} {'p':>3} {'starts':>6} " + "".join(f"{name:>12}" for name, _ in backends)
          + f"{'speedup':>10}")
    ok = True
    for n, p, starts in CASES:
        X, perms, h = make_case(n, p, starts)
        times, outputs = [], []
        for _, b in backends:
            outputs.append(b.elemental_stage(X, perms, h, 2))
            t = min(timeit.repeat(lambda: b.elemental_stage(X, perms, h, 2), number=1, repeat=repeat))
            times.append(t)
        if len(outputs) == 2:
            same = np.array_equal(outputs[0][0], outputs[1][0])
            ok &= same
        line = f"{n:>5} {p:>3} {starts:>6} " + "".join(f"{t:>11.4f}s" for t in times)
        line += f"{times[0] / times[-1]:>9.1f}x" if len(times) == 2 else f"{'-':>10}"
        if len(outputs) == 2 and not same:
            line += "  MISMATCH"
        print(line)
    return ok


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    args = ap.parse_args(argv)
    return 0 if run(args.repeat) else 1


if __name__ == "__main__":
    sys.exit(main())
