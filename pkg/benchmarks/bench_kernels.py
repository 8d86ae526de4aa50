"""Time the hot kernels under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--n 64] [--repeat 5] [--json out.json]

The first numba call (compilation, or loading the on-disk cache) is timed
separately as ``warmup``; the reported figure is the best of ``--repeat``
subsequent calls.
"""

import argparse
import json
import sys
import time
import timeit

import numpy as np

from nclab.core import ThetaData
from nclab.doi import bs_decompose, scalar_function
from nclab.kernels import doi_kernel, radial_table
from nclab.sampling import random_hermitian, random_symbol
from nclab.symbol import Grid, dequantize, quantize, twisted_convolution

BACKENDS = ("numba", "numpy")


def cases(n, M):
    th = ThetaData(1.0)
    grid = Grid(8.0, M, th)
    rng = np.random.default_rng(0)
    f = random_symbol(grid, rng, support=8.0, gauss=0.8, spread=2.0, hermitian=False)
    a = random_symbol(grid, rng, support=3.6, spread=1.5)
    b = random_symbol(grid, rng, support=3.6, spread=1.5)
    U = quantize(f, n)
    radii = np.abs(grid.radius).ravel()[: 4 * M]
    quad = bs_decompose(scalar_function("sin").with_window(3.0), 1e-8)
    lam = np.linalg.eigvalsh(random_hermitian(th, n, rng).entries)
    mu = np.linalg.eigvalsh(random_hermitian(th, n, rng).entries)
    return {
        "radial_table": lambda be: radial_table(radii, n, backend=be),
        "quantize": lambda be: quantize(f, n, backend=be),
        "dequantize": lambda be: dequantize(U, grid, backend=be),
        "twisted_convolution": lambda be: twisted_convolution(a, b, backend=be),
        "doi_kernel": lambda be: doi_kernel(lam, mu, quad.a, quad.b, quad.weights, backend=be),
    }


def run(n, M, repeat):
    rows = []
    for name, fn in cases(n, M).items():
        row = {"kernel": name}
        for be in BACKENDS:
            t0 = time.perf_counter()
            fn(be)
            row[f"{be}_warmup_s"] = time.perf_counter() - t0
            row[f"{be}_s"] = min(timeit.repeat(lambda: fn(be), number=1, repeat=repeat))
        row["speedup"] = row["numpy_s"] / row["numba_s"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64, help="operator truncation N")
    ap.add_argument("--M", type=int, default=64, help="symbol grid size")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", metavar="PATH", help="also write the table as JSON")
    args = ap.parse_args(argv)
    rows = run(args.n, args.M, args.repeat)
    print(f"N={args.n} M={args.M} best of {args.repeat}")
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'warmup [s]':>12}")
    for r in rows:
        print(f"{r['kernel']:<22}{1e3 * r['numba_s']:>12.2f}{1e3 * r['numpy_s']:>12.2f}"
              f"{r['speedup']:>10.1f}{r['numba_warmup_s']:>12.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"n": args.n, "M": args.M, "repeat": args.repeat, "rows": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
