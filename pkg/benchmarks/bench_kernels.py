"""Compare the compiled and NumPy backends on the hot evaluation kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time per kernel and backend and the max abs difference
between the two results.
"""

import argparse
import timeit

import numpy as np

from distsolve._ext import _kernels_py
from distsolve.operators import DifferentialOperator
from distsolve.oracle import kernel_from_symbol

try:
    from distsolve._ext import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases():
    kernel = kernel_from_symbol(DifferentialOperator((1.0, 0.0, -2.0, 0.0, 1.0)), DifferentialOperator((-4.0, 0.0, 1.0)))
    right, left = kernel.right.table, kernel.left.table
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(-5.0, 5.0, 200_000))
    nodes = np.linspace(0.0, 1.0, 1200)
    return [
        ("eval_terms", lambda m: m.eval_terms(x, *right)),
        ("eval_two_sided", lambda m: m.eval_two_sided(x, right, left)),
        ("kernel_matrix 1200^2", lambda m: m.kernel_matrix(nodes, nodes, right, left)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    if _kernels_c is None:
        print("compiled extension not built; timing the NumPy backend only")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}{'max diff':>12}")
    for label, fn in cases():
        times, outs = [], []
        for _, mod in backends:
            outs.append(fn(mod))
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        row = f"{label:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x{np.max(np.abs(outs[0] - outs[1])):>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
