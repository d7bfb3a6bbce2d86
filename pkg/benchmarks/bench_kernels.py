"""Compare the compiled and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n 32 64] [--M 64] [--repeat 5]

Each kernel runs on identical random input with both backends. The script
reports the best wall time, the speedup, and the max relative difference
between the outputs.
"""
import argparse
import timeit

import numpy as np

from hallmhd import kernels
from hallmhd.grid import GridSpec, packed_modes


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _rel_diff(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def bench(n, M, repeat, rng):
    pm = packed_modes(GridSpec(n))
    size = pm["kmag"].size
    tensor = rng.standard_normal((3, 3, size)) + 1j * rng.standard_normal((3, 3, size))
    sources = rng.standard_normal((M + 1, 3, size)) + 1j * rng.standard_normal((M + 1, 3, size))
    decay = np.exp(-0.01 * pm["kmag"] ** 2)
    cases = {
        "project_divergence": lambda b: kernels.project_divergence(
            tensor, pm["kd1"], pm["kd2"], pm["kd3"], pm["inv_ksq"], False, backend=b),
        "project_divergence+curl": lambda b: kernels.project_divergence(
            tensor, pm["kd1"], pm["kd2"], pm["kd3"], pm["inv_ksq"], True, backend=b),
        f"duhamel_trapezoid(M={M})": lambda b: kernels.duhamel_trapezoid(
            sources, decay, 0.01, backend=b),
    }
    rows = []
    for name, call in cases.items():
        py = _best(lambda: call("python"), repeat)
        row = {"kernel": name, "n": n, "python_s": py}
        if "cython" in kernels.available_backends():
            cy = _best(lambda: call("cython"), repeat)
            row.update(cython_s=cy, speedup=py / cy,
                       rel_diff=_rel_diff(call("python"), call("cython")))
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64])
    ap.add_argument("--M", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}; available: {kernels.available_backends()}")
    print(f"{'kernel':<28}{'n':>4}{'python [ms]':>14}{'cython [ms]':>14}"
          f"{'speedup':>9}{'rel diff':>11}")
    for n in args.n:
        for r in bench(n, args.M, args.repeat, rng):
            cy = f"{1e3 * r['cython_s']:14.2f}{r['speedup']:9.2f}{r['rel_diff']:11.1e}" \
                if "cython_s" in r else f"{'n/a':>14}"
            print(f"{r['kernel']:<28}{r['n']:>4}{1e3 * r['python_s']:14.2f}{cy}")


if __name__ == "__main__":
    main()
