"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--bins 64] [--card-v 4] [--repeat 3]

Times a fixed number of fixed-point updates on a discretized Gaussian
cascade and a batch triple evaluation on the binary cascade, and checks that
both backends agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from sibkit.kernels import available_backends
from sibkit.models import (BinaryCascadeParams, GaussianCascadeParams, binary_cascade,
                           gaussian_cascade_discretized)
from sibkit.oracle import _channel_block, simplex_rows
from sibkit.sibsolver import SIBProblem


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bins", type=int, default=64)
    ap.add_argument("--card-v", type=int, default=4)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    g = SIBProblem.from_model(gaussian_cascade_discretized(
        GaussianCascadeParams(1.0, 0.5, 1.0), args.bins))
    b = SIBProblem.from_model(binary_cascade(BinaryCascadeParams(0.1, 0.2)))
    w0 = np.random.default_rng(0).dirichlet(np.ones(args.card_v), size=g.nx)
    rows = simplex_rows(2, args.resolution)
    ws = _channel_block(rows, b.nx, 0, rows.shape[0] ** b.nx)

    results = {}
    print(f"{'backend':8s} {'kernel':12s} {'seconds':>10s}")
    for name, mod in backends.items():
        t_it, out_it = best_of(lambda: mod.sib_iterate(
            w0, g.pxy, g.pyp, g.pys, 4.0, 0.5, 0.0, args.iters, 1e-12), args.repeat)
        t_tr, out_tr = best_of(lambda: mod.triples(ws, b.pxy, b.pyp, b.pys), args.repeat)
        results[name] = (t_it, t_tr, out_it[0], out_tr)
        print(f"{name:8s} {'sib_iterate':12s} {t_it:10.4f}   ({args.iters} updates, "
              f"|X|={g.nx}, |V|={args.card_v})")
        print(f"{name:8s} {'triples':12s} {t_tr:10.4f}   ({ws.shape[0]} channels)")

    if {"python", "cython"} <= results.keys():
        py, cy = results["python"], results["cython"]
        print(f"speedup sib_iterate x{py[0] / cy[0]:.1f}, triples x{py[1] / cy[1]:.1f}")
        print(f"max |diff| channel {np.abs(py[2] - cy[2]).max():.2e}, "
              f"triples {np.abs(py[3] - cy[3]).max():.2e}")
    else:
        print("compiled backend not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
