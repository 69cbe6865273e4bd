"""Compare the numba and numpy integration kernels.

Runs batches of kill-matrix-shaped workloads (tests x mutants) through both
implementations, checks the outputs are bit-identical and prints timings.

    python benchmarks/bench_kernels.py [--batches 1 16 256 1024] [--repeat 3]
"""

import argparse
import time

import numpy as np

from semiconcrete.mutation import apply_mutant, generate_mutants
from semiconcrete.sim import kernels
from semiconcrete.sim.core import nominal_scenarios


def workload(n_runs):
    setups = nominal_scenarios()
    ctrls = [apply_mutant(m) for m in generate_mutants(50, seed=0)]
    scen = np.stack([setups[i % len(setups)].row() for i in range(n_runs)])
    ctrl = np.stack([ctrls[i % len(ctrls)].row() for i in range(n_runs)])
    return scen, ctrl, setups[0].dt, setups[0].n_steps


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batches", type=int, nargs="+", default=[1, 16, 256, 1024])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")

    scen, ctrl, dt, n = workload(2)
    t0 = time.perf_counter()
    kernels.integrate_numba(scen, ctrl, dt, n)
    print(f"numba first call (compile or cache load): {time.perf_counter() - t0:.3f} s")
    print(f"{'runs':>6} {'steps':>6} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  identical")
    for b in args.batches:
        scen, ctrl, dt, n = workload(b)
        a = kernels.integrate_numba(scen, ctrl, dt, n)
        c = kernels.integrate_numpy(scen, ctrl, dt, n)
        same = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(a, c))
        t_nb = best_of(lambda: kernels.integrate_numba(scen, ctrl, dt, n), args.repeat)
        t_np = best_of(lambda: kernels.integrate_numpy(scen, ctrl, dt, n), args.repeat)
        print(f"{b:>6} {n:>6} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
