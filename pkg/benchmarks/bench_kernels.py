"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat R] [--sizes 200 400 800]

Times volterra_inner (the O(N^2) hot loop) and a full ex2 solve on each
backend, and checks both backends agree.
"""

import argparse
import time

import numpy as np

from vidnbc import _backend, builtin_example
from vidnbc.gridfn import Grid, GridFunction
from vidnbc.picard import SolveOptions, solve
from vidnbc.quadrature import volterra_inner


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 400, 800])
    args = ap.parse_args()

    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    p = builtin_example("ex2")
    print(f"{'kernel':<10}{'N':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for N in args.sizes:
        f = GridFunction.from_callables(Grid(p.T, N), np.sin, np.cos)
        rows = {"volterra": {}, "solve": {}}
        outputs = {}
        for b in backends:
            prev = _backend.use_backend(b)
            try:
                rows["volterra"][b] = best_of(lambda: volterra_inner(p.G, f), args.repeat)
                rows["solve"][b] = best_of(lambda: solve(p, SolveOptions(N=N)), args.repeat)
                outputs[b] = solve(p, SolveOptions(N=N)).solution.w
            finally:
                _backend.use_backend(prev)
        for kernel, timing in rows.items():
            line = f"{kernel:<10}{N:>6}" + "".join(f"{timing[b] * 1e3:>10.2f}ms" for b in backends)
            if len(backends) == 2:
                line += f"{timing['python'] / timing['compiled']:>9.2f}x"
            print(line)
        if len(backends) == 2:
            diff = np.max(np.abs(outputs["compiled"] - outputs["python"]))
            print(f"{'':<10}{N:>6}  max |w_compiled - w_python| = {diff:.1e}")


if __name__ == "__main__":
    main()
