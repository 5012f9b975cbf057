"""Path simulation for the stock GOP and the PathSet container.

Simulation is chunked across paths (see :mod:`bngop.rng`); chunks can be
dispatched to a thread pool without changing any output value.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend, rng
from .errors import ConfigError, ContractError
from .model import ModelParams, TimeGrid, activity_time, transformed_time_increment

#: Values below this are clipped when storing paths; full-truncation Euler can
#: produce tiny negative excursions that must not violate positivity.
POSITIVITY_FLOOR = 1e-12

#: Largest Euler step accepted before the scheme is considered unstable.
MAX_EULER_STEP = 0.1


@dataclass(frozen=True)
class PathSet:
    """A batch of simulated stock-GOP trajectories on a shared grid.

    ``s_star`` has shape (n_paths, n_times); ``x0 = 1 / s_star`` is the
    savings account denominated in the stock GOP.  ``aux_brownians`` holds the
    per-step Brownian increments when the simulator stored them (needed for
    the measure-change density).
    """

    grid: TimeGrid
    s_star: np.ndarray
    measure: str
    seed: int
    stream_ids: np.ndarray
    lambda_density: np.ndarray | None = None
    aux_brownians: np.ndarray | None = None

    def __post_init__(self):
        if self.measure not in ("P", "Q*"):
            raise ContractError("measure must be 'P' or 'Q*'")
        if self.s_star.shape[1] != self.grid.times.size:
            raise ContractError("s_star shape does not match grid")
        if np.any(self.s_star <= 0):
            raise ContractError("s_star must be strictly positive")
        if self.lambda_density is not None:
            if np.any(self.lambda_density <= 0):
                raise ContractError("lambda_density must be strictly positive")
            if np.any(self.lambda_density[:, 0] != 1.0):
                raise ContractError("lambda_density must start at 1")

    @property
    def n_paths(self) -> int:
        return self.s_star.shape[0]

    @property
    def x0(self) -> np.ndarray:
        return 1.0 / self.s_star

    @property
    def s_terminal(self) -> np.ndarray:
        return self.s_star[:, -1]


def _run_chunks(tasks, threads: int = 1):
    """Run chunk closures, optionally on a thread pool; outputs are written
    into preallocated arrays so the degree of parallelism cannot matter."""
    if threads <= 1:
        for task in tasks:
            task()
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda f: f(), tasks))


def _euler_step_data(params: ModelParams, grid: TimeGrid, measure: str):
    t_left = grid.times[:-1]
    dt = grid.dt
    ae = params.activity * np.exp(activity_time(params, t_left))
    ae4 = 4.0 * ae
    if measure == "P":
        lam = np.asarray(params.net_risk_adjusted_return(t_left), dtype=float)
        lam = np.broadcast_to(lam, t_left.shape).copy()
    else:
        lam = np.zeros_like(t_left)
    return dt, np.sqrt(dt), lam, ae4, ae


def iter_euler_chunks(
    params: ModelParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    measure: str = "P",
    chunk: int = rng.CHUNK,
):
    """Yield ``(start, stop, s_chunk, db_chunk)`` for chunked consumers.

    Stream assignment depends only on (seed, chunk index), so consuming the
    iterator yields the same numbers as a monolithic simulation.
    """
    if measure not in ("P", "Q*"):
        raise ContractError("measure must be 'P' or 'Q*'")
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1")
    if float(np.max(grid.dt)) > MAX_EULER_STEP:
        raise ConfigError(
            f"Euler step {np.max(grid.dt):.4g} exceeds stability cap {MAX_EULER_STEP}"
        )
    dt, sqrt_dt, lam, ae4, ae = _euler_step_data(params, grid, measure)
    n_times = grid.times.size
    for start, stop, index in rng.chunk_ranges(n_paths, chunk):
        gen = rng.chunk_generator(seed, rng.PURPOSE_MARKET, index)
        s = np.empty((stop - start, n_times))
        db = np.empty((stop - start, n_times - 1))
        backend.euler_chunk(gen, params.s_star_0, dt, sqrt_dt, lam, ae4, ae, s, db)
        yield start, stop, s, db


def simulate_sgop_euler(
    params: ModelParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    measure: str = "P",
    store_increments: bool = True,
    threads: int = 1,
) -> PathSet:
    """Full-truncation Euler simulation of the stock GOP under P or Q*."""
    if measure not in ("P", "Q*"):
        raise ContractError("measure must be 'P' or 'Q*'")
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1")
    if float(np.max(grid.dt)) > MAX_EULER_STEP:
        raise ConfigError(
            f"Euler step {np.max(grid.dt):.4g} exceeds stability cap {MAX_EULER_STEP}"
        )
    dt, sqrt_dt, lam, ae4, ae = _euler_step_data(params, grid, measure)
    n_times = grid.times.size
    s = np.empty((n_paths, n_times))
    db = np.empty((n_paths, n_times - 1)) if store_increments else None

    def make_task(start, stop, index):
        def task():
            gen = rng.chunk_generator(seed, rng.PURPOSE_MARKET, index)
            if store_increments:
                db_view = db[start:stop]
            else:
                db_view = np.empty((stop - start, n_times - 1))
            backend.euler_chunk(
                gen, params.s_star_0, dt, sqrt_dt, lam, ae4, ae, s[start:stop], db_view
            )

        return task

    _run_chunks(
        [make_task(a, b, i) for a, b, i in rng.chunk_ranges(n_paths)], threads
    )
    np.maximum(s, POSITIVITY_FLOOR, out=s)
    return PathSet(
        grid=grid,
        s_star=s,
        measure=measure,
        seed=seed,
        stream_ids=rng.stream_ids(n_paths),
        aux_brownians=db,
    )


def simulate_sgop_exact(
    params: ModelParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> PathSet:
    """Exact transition sampling of the stock GOP under the pricing measure.

    Each transition is drawn from the dimension-four squared Bessel law on the
    clock increment of the step, so the grid can be arbitrarily coarse.
    """
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1")
    times = grid.times
    deltas = np.array(
        [transformed_time_increment(params, times[k], times[k + 1]) for k in range(grid.n_steps)]
    )
    s = np.empty((n_paths, times.size))

    def make_task(start, stop, index):
        def task():
            gen = rng.chunk_generator(seed, rng.PURPOSE_MARKET, index)
            backend.exact_chunk(gen, params.s_star_0, deltas, s[start:stop])

        return task

    _run_chunks(
        [make_task(a, b, i) for a, b, i in rng.chunk_ranges(n_paths)], threads
    )
    np.maximum(s, POSITIVITY_FLOOR, out=s)
    return PathSet(
        grid=grid,
        s_star=s,
        measure="Q*",
        seed=seed,
        stream_ids=rng.stream_ids(n_paths),
    )


def params_hash(params: ModelParams, grid: TimeGrid) -> bytes:
    """Stable 32-byte digest of (params, grid) for file headers."""
    h = hashlib.sha256()
    lam = params.net_risk_adjusted_return
    h.update(
        repr(
            (
                params.activity,
                params.initial_activity_time,
                params.s_star_0,
                lam.breakpoints,
                lam.values,
                params.horizon,
            )
        ).encode()
    )
    h.update(grid.times.tobytes())
    return h.digest()


def pathset_to_csv(paths: PathSet, file) -> None:
    """Write one row per (path, time) sample: path_id, t, s_star, lambda, x0."""
    lam = paths.lambda_density
    times = paths.grid.times
    file.write("path_id,t,s_star,lambda,x0\n")
    for i in range(paths.n_paths):
        for k in range(times.size):
            lam_val = lam[i, k] if lam is not None else 1.0
            file.write(
                f"{i},{times[k]:.17g},{paths.s_star[i, k]:.17g},"
                f"{lam_val:.17g},{paths.x0[i, k]:.17g}\n"
            )


_BIN_MAGIC = b"BNGP"
_BIN_VERSION = 1


def pathset_to_binary(paths: PathSet, file, params: ModelParams | None = None) -> None:
    """Compact little-endian dump: header (seed, params hash), times, values."""
    digest = params_hash(params, paths.grid) if params is not None else b"\0" * 32
    header = struct.pack(
        "<4sIq32sQQ",
        _BIN_MAGIC,
        _BIN_VERSION,
        paths.seed,
        digest,
        paths.n_paths,
        paths.grid.times.size,
    )
    file.write(header)
    file.write(paths.grid.times.astype("<f8").tobytes())
    file.write(paths.s_star.astype("<f8").tobytes())


def pathset_from_binary(file) -> tuple[int, bytes, TimeGrid, np.ndarray]:
    """Read a binary dump back; returns (seed, params hash, grid, s_star)."""
    header = file.read(struct.calcsize("<4sIq32sQQ"))
    magic, version, seed, digest, n_paths, n_times = struct.unpack("<4sIq32sQQ", header)
    if magic != _BIN_MAGIC or version != _BIN_VERSION:
        raise ContractError("not a bngop path dump")
    times = np.frombuffer(file.read(8 * n_times), dtype="<f8")
    s = np.frombuffer(file.read(8 * n_paths * n_times), dtype="<f8").reshape(
        n_paths, n_times
    )
    return seed, digest, TimeGrid(times.copy()), s.copy()
