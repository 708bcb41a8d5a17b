"""Time the hot kernels under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py --sizes 129 257 513 --repeat 5

The first numba call of each kernel (JIT compilation) is excluded.
"""
import argparse
import json
import timeit

import numpy as np

from superliouville import _backend, kernels


def cases(n, rng):
    u = rng.standard_normal((n, n))
    f = u + 1j * rng.standard_normal((n, n))
    g = rng.standard_normal((n, n)) + 1j * u
    h = 1.0 / n
    px = rng.uniform(0, (n - 1) * h, n * n)
    py = rng.uniform(0, (n - 1) * h, n * n)
    m = min(n, 65)  # O(N^2) sum: keep it short
    w = np.full((m, m), h * h)
    tx = rng.uniform(0, 1, m * m)
    ty = rng.uniform(0, 1, m * m)
    return {
        "laplacian": lambda: kernels.laplacian(u, h),
        "gradient": lambda: kernels.gradient(u, h),
        "dirac": lambda: kernels.dirac(f, g, h),
        "interp_cubic": lambda: kernels.interp_cubic(u, 0.0, 0.0, h, px, py),
        f"cauchy_direct[{m}^2]": lambda: kernels.cauchy_direct(f[:m, :m], g[:m, :m], w, 0.0, 0.0, h, tx, ty),
    }


def run(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    backends = ["numba", "numpy"] if _backend.HAVE_NUMBA else ["numpy"]
    for n in sizes:
        work = cases(n, rng)
        for name, fn in work.items():
            row = {"n": n, "kernel": name}
            for b in backends:
                prev = _backend.set_backend(b)
                try:
                    fn()  # warm-up / compile
                    row[b] = min(timeit.repeat(fn, number=1, repeat=repeat))
                finally:
                    _backend.set_backend(prev)
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[129, 257, 513])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None, help="numba thread cap")
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args(argv)
    _backend.set_threads(args.threads)
    rows = run(args.sizes, args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':<22}{'n':>6}{'numba [ms]':>13}{'numpy [ms]':>13}{'speed-up':>10}")
    for r in rows:
        nb = r.get("numba", float("nan")) * 1e3
        npy = r["numpy"] * 1e3
        print(f"{r['kernel']:<22}{r['n']:>6}{nb:>13.3f}{npy:>13.3f}{npy / nb:>10.2f}")


if __name__ == "__main__":
    main()
