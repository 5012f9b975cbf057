"""Radon-Nikodym density simulation and change-of-measure utilities.

The density process satisfies dL/L = -mu* dW with market price of risk
mu* = lambda*/theta, and is evolved in log space so it can never cross zero.
Expectations under the pricing measure can then be computed from real-world
paths by reweighting with the terminal density.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ContractError, DataError
from .model import ModelParams, TimeGrid, activity_time
from .paths import POSITIVITY_FLOOR, PathSet, iter_euler_chunks

logger = logging.getLogger(__name__)

#: Cap on |mu*| per path-step; theta > 0 for finite S* so this should never
#: bind, but pathological paths are clipped (and logged) rather than poisoning
#: the whole batch.
MU_STAR_CAP = 1e6


@dataclass(frozen=True)
class DensityPath:
    """Density process Lambda and the market price of risk along each path.

    ``lam`` has shape (n_paths, n_times) with ``lam[:, 0] == 1``; ``mu_star``
    holds the left-endpoint market price of risk per step, shape
    (n_paths, n_steps).
    """

    grid: TimeGrid
    lam: np.ndarray
    mu_star: np.ndarray

    def __post_init__(self):
        if self.lam.shape[1] != self.grid.times.size:
            raise ContractError("lam shape does not match grid")
        if np.any(self.lam <= 0):
            raise ContractError("density must be strictly positive")
        if np.any(self.lam[:, 0] != 1.0):
            raise ContractError("density must start at 1")

    @property
    def terminal(self) -> np.ndarray:
        return self.lam[:, -1]


def _mu_star_steps(params: ModelParams, grid: TimeGrid, s_left: np.ndarray,
                   mu_cap: float = MU_STAR_CAP) -> np.ndarray:
    """Left-endpoint mu* = lambda*/theta for every (path, step).

    theta = sqrt(4 a e^tau / s), so mu* = lambda* sqrt(s / (4 a e^tau)).
    """
    t_left = grid.times[:-1]
    lam_vals = np.broadcast_to(
        np.asarray(params.net_risk_adjusted_return(t_left), dtype=float), t_left.shape
    )
    scale = np.sqrt(4.0 * params.activity * np.exp(activity_time(params, t_left)))
    mu = np.sqrt(np.maximum(s_left, POSITIVITY_FLOOR))
    mu *= lam_vals / scale
    n_capped = int(np.count_nonzero(np.abs(mu) > mu_cap))
    if n_capped:
        logger.warning("mu* cap %.3g triggered on %d path-steps", mu_cap, n_capped)
        np.clip(mu, -mu_cap, mu_cap, out=mu)
    return mu


def simulate_density(params: ModelParams, paths: PathSet,
                     mu_cap: float = MU_STAR_CAP) -> DensityPath:
    """Evolve Lambda along real-world paths by exact log-Euler.

    Per step: Lambda_{k+1} = Lambda_k * exp(-mu* dB - mu*^2 dt / 2) with mu*
    evaluated at the left endpoint.  Requires paths simulated under P with
    stored Brownian increments.
    """
    if paths.measure != "P":
        raise ContractError("density is defined along P paths")
    if paths.aux_brownians is None:
        raise ContractError("PathSet lacks stored Brownian increments")
    grid = paths.grid
    mu = _mu_star_steps(params, grid, paths.s_star[:, :-1], mu_cap)
    incr = -mu * paths.aux_brownians - 0.5 * mu * mu * grid.dt
    lam = np.empty_like(paths.s_star)
    lam[:, 0] = 1.0
    np.exp(np.cumsum(incr, axis=1), out=lam[:, 1:])
    return DensityPath(grid=grid, lam=lam, mu_star=mu)


@dataclass(frozen=True)
class CheckpointStat:
    time: float
    mean: float
    se: float
    z: float


@dataclass(frozen=True)
class MartingaleReport:
    rows: tuple[CheckpointStat, ...]

    @property
    def max_z(self) -> float:
        return max(row.z for row in self.rows)

    def to_csv(self, file) -> None:
        file.write("checkpoint,mean,se,z\n")
        for row in self.rows:
            file.write(
                f"{row.time:.17g},{row.mean:.17g},{row.se:.17g},{row.z:.17g}\n"
            )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _z_against_one(mean: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if mean == 1.0 else float("inf")
    return abs(mean - 1.0) / se


def martingale_diagnostic(density: DensityPath, checkpoints) -> MartingaleReport:
    """MC estimate of E[Lambda_t] with standard error at each checkpoint.

    A z-score above ~3 flags a violation of the martingale property (or a
    simulation bug).
    """
    rows = []
    for t in checkpoints:
        col = density.lam[:, density.grid.index_of(t)]
        mean, se = _mean_se(col)
        rows.append(CheckpointStat(float(t), mean, se, _z_against_one(mean, se)))
    return MartingaleReport(rows=tuple(rows))


def reweight_expectation(paths: PathSet, density: DensityPath, payoff) -> tuple[float, float]:
    """Estimate the pricing-measure expectation of ``payoff`` from P paths.

    ``payoff`` is called with the PathSet and must return one value per path;
    the estimator is the sample mean of Lambda_T * payoff with its SE.
    """
    values = np.asarray(payoff(paths), dtype=float)
    if values.shape != (paths.n_paths,):
        raise DataError("payoff must return one value per path")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DataError(f"non-finite payoff on paths {bad[:20].tolist()}")
    return _mean_se(density.terminal * values)


def p_measure_snapshots(
    params: ModelParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    checkpoints,
    mu_cap: float = MU_STAR_CAP,
    chunk: int = rng.CHUNK,
) -> tuple[np.ndarray, np.ndarray]:
    """Chunked real-world simulation keeping only checkpoint columns.

    Returns ``(s_snap, lam_snap)`` of shape (n_paths, n_checkpoints): the
    stock GOP and the density at the requested grid times.  Memory stays
    bounded by one chunk regardless of n_paths, which is what makes
    desk-scale density and real-world-pricing runs feasible.
    """
    cols = np.array([grid.index_of(t) for t in checkpoints], dtype=np.intp)
    dt = grid.dt
    s_snap = np.empty((n_paths, cols.size))
    lam_snap = np.empty((n_paths, cols.size))
    for start, stop, s, db in iter_euler_chunks(
        params, grid, n_paths, seed, measure="P", chunk=chunk
    ):
        mu = _mu_star_steps(params, grid, s[:, :-1], mu_cap)
        # in-place: db <- -mu*dB - mu^2 dt/2 (the log-density increments)
        db *= mu
        db *= -1.0
        mu *= mu
        mu *= 0.5 * dt
        db -= mu
        loglam = np.cumsum(db, axis=1)
        s_snap[start:stop] = np.maximum(s[:, cols], POSITIVITY_FLOOR)
        for j, c in enumerate(cols):
            lam_snap[start:stop, j] = 1.0 if c == 0 else np.exp(loglam[:, c - 1])
    return s_snap, lam_snap
