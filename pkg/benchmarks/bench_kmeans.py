"""Compare the compiled and numpy k-means kernels on planted correlation matrices.

    python benchmarks/bench_kmeans.py --restarts 1000 --repeat 3

Both backends run the same seeds; the script checks that they agree on the
best inertia and labels before reporting timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from epicorr import kernels
from epicorr.clustering import kmeans_multi
from epicorr.synth import planted_labels, planted_matrices


def time_backend(x, k, restarts, repeat, backend, jobs):
    best = None
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = kmeans_multi(x, k, n_restarts=restarts, n_jobs=jobs, backend=backend)
        times.append(time.perf_counter() - t0)
        best = res
    return min(times), best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--matrices", type=int, default=62)
    ap.add_argument("--n", type=int, default=32, help="matrix size")
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--restarts", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    labels = planted_labels(args.matrices, seed=0)
    x = planted_matrices(labels, n=args.n, noise=0.02, seed=0)
    backends = ["python"] + (["cython"] if kernels.compiled_available() else [])
    results = {}
    print(f"{args.matrices} matrices of {args.n}x{args.n}, k={args.k}, {args.restarts} restarts, jobs={args.jobs}")
    for name in backends:
        secs, res = time_backend(x, args.k, args.restarts, args.repeat, name, args.jobs)
        results[name] = (secs, res)
        print(f"  {name:>7}: {secs:8.3f} s  best inertia {res.inertia:.10g}  restart {res.restart_index_of_best}")
    if len(results) == 2:
        (tp, rp), (tc, rc) = results["python"], results["cython"]
        same = np.array_equal(rp.labels, rc.labels) and np.isclose(rp.inertia, rc.inertia, rtol=1e-12)
        print(f"  speedup {tp / tc:.1f}x, identical result: {same}")
    else:
        print("  compiled kernels not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
