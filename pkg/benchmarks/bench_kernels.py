"""Timing comparison of the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Both backends consume the
same Philox streams in the same order, so besides timing this also reasserts
bit-identical output.
"""

import time

import numpy as np

from bngop import TimeGrid, backend, rng
from bngop.model import activity_time, reference_params, transformed_time_increment

N_PATHS = 20_000
REPEATS = 3


def euler_inputs(params, grid):
    t_left = grid.times[:-1]
    dt = grid.dt
    ae = params.activity * np.exp(activity_time(params, t_left))
    lam = np.broadcast_to(
        np.asarray(params.net_risk_adjusted_return(t_left)), t_left.shape
    ).copy()
    return dt, np.sqrt(dt), lam, 4.0 * ae, ae


def run_euler(kernel, grid, inputs):
    dt, sqrt_dt, lam, ae4, ae = inputs
    s = np.empty((N_PATHS, grid.times.size))
    db = np.empty((N_PATHS, grid.n_steps))
    gen = rng.chunk_generator(7, rng.PURPOSE_MARKET, 0)
    kernel.euler_chunk(gen, 1.0, dt, sqrt_dt, lam, ae4, ae, s, db)
    return s


def run_exact(kernel, deltas, n_times):
    s = np.empty((N_PATHS, n_times))
    gen = rng.chunk_generator(7, rng.PURPOSE_MARKET, 0)
    kernel.exact_chunk(gen, 1.0, deltas, s)
    return s


def best_of(fn, *args):
    results, times = [], []
    for _ in range(REPEATS):
        start = time.perf_counter()
        results.append(fn(*args))
        times.append(time.perf_counter() - start)
    return results[0], min(times)


def main() -> None:
    params = reference_params()
    names = ["numpy"]
    if backend.HAVE_COMPILED:
        names.append("compiled")
    else:
        print("compiled kernels not built; benchmarking numpy fallback only")

    grid = TimeGrid.regular(10.0, 1.0 / 250.0)
    inputs = euler_inputs(params, grid)
    print(f"euler: {N_PATHS} paths x {grid.n_steps} steps (best of {REPEATS})")
    outputs = {}
    for name in names:
        kernel = backend.get_backend(name)
        outputs[name], elapsed = best_of(run_euler, kernel, grid, inputs)
        print(f"  {name:>8}: {elapsed:.3f}s")
    if len(names) == 2:
        assert np.array_equal(outputs["numpy"], outputs["compiled"])
        print("  outputs bit-identical")

    grid = TimeGrid.regular(30.0, 1.0)
    deltas = np.array(
        [
            transformed_time_increment(params, grid.times[k], grid.times[k + 1])
            for k in range(grid.n_steps)
        ]
    )
    print(f"exact: {N_PATHS} paths x {grid.n_steps} transitions (best of {REPEATS})")
    outputs = {}
    for name in names:
        kernel = backend.get_backend(name)
        outputs[name], elapsed = best_of(run_exact, kernel, deltas, grid.times.size)
        print(f"  {name:>8}: {elapsed:.3f}s")
    if len(names) == 2:
        assert np.array_equal(outputs["numpy"], outputs["compiled"])
        print("  outputs bit-identical")


if __name__ == "__main__":
    main()
