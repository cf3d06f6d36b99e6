"""Time the compiled kernels against the pure-Python fallback.

Each kernel runs on the same inputs under both backends; the table shows the
median wall time and the speed-up.

    python3 benchmarks/bench_kernels.py [--n 200] [--repeat 5]
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from lkcand import kernels
from lkcand.candidates import nearest_candidates
from lkcand.instance import gen_random_uniform


def _descent_inputs(inst, k, seed):
    n = inst.n
    D = np.ascontiguousarray(inst.matrix)
    neigh = np.ascontiguousarray(nearest_candidates(inst, k).neighbor_array)
    order = np.random.default_rng(seed).permutation(n).astype(np.int64)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    return D, order, pos, neigh, np.zeros(n, dtype=bool), np.full((n, 2), -1, dtype=np.int64)


def cases(n: int):
    inst = gen_random_uniform(n, 1)
    D = np.ascontiguousarray(inst.matrix)
    pi = np.random.default_rng(0).normal(0, 10, n)

    def mst(mod):
        mod.prim_mst(D, pi, -1)

    def path_max(mod):
        parent, order, _ = mod.prim_mst(D, pi, -1)
        mod.path_max(D, pi, parent, order)

    def two_opt(mod):
        D_, order, pos, neigh, dl, fixed = _descent_inputs(inst, 8, 3)
        mod.two_opt_descent(D_, order, pos, neigh, True, dl, fixed, 1e-10)

    def three_opt(mod):
        D_, order, pos, neigh, dl, fixed = _descent_inputs(inst, 8, 3)
        mod.three_opt_descent(D_, order, pos, neigh, True, 5, dl, fixed, 1e-10)

    small = np.ascontiguousarray(gen_random_uniform(11, 2).matrix)

    def held_karp(mod):
        mod.held_karp(small)

    return {"prim_mst": mst, "path_max": path_max, "two_opt_descent": two_opt,
            "three_opt_descent": three_opt, "held_karp(n=11)": held_karp}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the Python backend is available")
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for name, fn in cases(args.n).items():
        times = {}
        for b, mod in backends.items():
            runs = []
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                fn(mod)
                runs.append(time.perf_counter() - t0)
            times[b] = statistics.median(runs)
        line = f"{name:<20}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(times) > 1:
            line += f"{times['python'] / times['cython']:>12.0f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
