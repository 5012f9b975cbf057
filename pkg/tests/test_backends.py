"""The compiled kernels must be draw-for-draw identical to the numpy fallback."""

import numpy as np
import pytest

from bngop import TimeGrid, backend, rng
from bngop.model import activity_time, reference_params, transformed_time_increment

pytestmark = pytest.mark.skipif(
    not backend.HAVE_COMPILED, reason="compiled kernels not built"
)


def _euler_inputs(params, grid):
    t_left = grid.times[:-1]
    dt = grid.dt
    ae = params.activity * np.exp(activity_time(params, t_left))
    lam = np.broadcast_to(
        np.asarray(params.net_risk_adjusted_return(t_left)), t_left.shape
    ).copy()
    return dt, np.sqrt(dt), lam, 4.0 * ae, ae


def test_euler_kernels_bit_identical():
    params = reference_params()
    grid = TimeGrid.regular(5.0, 1.0 / 100.0)
    dt, sqrt_dt, lam, ae4, ae = _euler_inputs(params, grid)
    results = []
    for name in ("numpy", "compiled"):
        kernel = backend.get_backend(name)
        gen = rng.chunk_generator(2024, rng.PURPOSE_MARKET, 0)
        s = np.empty((700, grid.times.size))
        db = np.empty((700, grid.n_steps))
        kernel.euler_chunk(gen, 1.0, dt, sqrt_dt, lam, ae4, ae, s, db)
        results.append((s, db))
    assert np.array_equal(results[0][0], results[1][0])
    assert np.array_equal(results[0][1], results[1][1])


def test_exact_kernels_bit_identical():
    params = reference_params()
    grid = TimeGrid.regular(30.0, 1.0)
    deltas = np.array(
        [
            transformed_time_increment(params, grid.times[k], grid.times[k + 1])
            for k in range(grid.n_steps)
        ]
    )
    results = []
    for name in ("numpy", "compiled"):
        kernel = backend.get_backend(name)
        gen = rng.chunk_generator(99, rng.PURPOSE_MARKET, 0)
        s = np.empty((700, grid.times.size))
        kernel.exact_chunk(gen, 1.0, deltas, s)
        results.append(s)
    assert np.array_equal(results[0], results[1])


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        backend.get_backend("fortran")
