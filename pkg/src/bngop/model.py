"""Model parameters, time grids and the multi-asset GOP weight solver.

The single-stock model used throughout the simulation engine is parametrized
by an activity rate ``a``, an initial activity time ``tau_0``, the initial
stock-GOP level and a deterministic piecewise-constant net risk-adjusted
return.  Under the pricing measure the stock GOP is a squared Bessel process
of dimension four run on the deterministic clock
``delta(t, T) = exp(tau_0) * (exp(a T) - exp(a t))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous piecewise-constant function of time.

    ``values[i]`` applies on ``[breakpoints[i-1], breakpoints[i])`` with the
    convention that ``values[0]`` applies before the first breakpoint.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need len(values) == len(breakpoints) + 1")
        if len(self.breakpoints) > 1 and np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls(breakpoints=(), values=(float(value),))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
        out = np.asarray(self.values)[idx]
        return out if out.ndim else float(out)

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral over [t0, t1] (t0 <= t1)."""
        if t1 < t0:
            raise DomainError("integral requires t0 <= t1")
        edges = np.concatenate(([t0], np.clip(self.breakpoints, t0, t1), [t1]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        return float(np.sum(np.diff(edges) * self(mids)))

    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))


def _as_piecewise(x) -> PiecewiseConstant:
    if isinstance(x, PiecewiseConstant):
        return x
    return PiecewiseConstant.constant(float(x))


@dataclass(frozen=True)
class ModelParams:
    """Scalars and functions defining the single-stock market model.

    activity:
        activity rate ``a`` per unit calendar time, > 0.
    initial_activity_time:
        dimensionless offset ``tau_0``.
    s_star_0:
        initial stock-GOP level in savings-account units, > 0.
    net_risk_adjusted_return:
        deterministic piecewise-constant drift parameter (per unit time);
        plain floats are promoted to a constant function.
    horizon:
        terminal time ``T*`` in years, > 0.
    """

    activity: float
    initial_activity_time: float
    s_star_0: float
    net_risk_adjusted_return: PiecewiseConstant = field(
        default_factory=lambda: PiecewiseConstant.constant(0.0)
    )
    horizon: float = 30.0

    def __post_init__(self):
        if not self.activity > 0:
            raise DomainError("activity must be > 0")
        if not self.s_star_0 > 0:
            raise DomainError("s_star_0 must be > 0")
        if not self.horizon > 0:
            raise DomainError("horizon must be > 0")
        object.__setattr__(
            self,
            "net_risk_adjusted_return",
            _as_piecewise(self.net_risk_adjusted_return),
        )


def activity_time(params: ModelParams, t):
    """Activity time ``tau_t = tau_0 + a * t`` for t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    out = params.initial_activity_time + params.activity * t
    return out if out.ndim else float(out)


def transformed_time_increment(params: ModelParams, t: float, T: float) -> float:
    """Clock increment ``delta(t, T) = exp(tau_0) * (exp(aT) - exp(at))``.

    This is the increment of the dimension-four squared Bessel clock between
    calendar times t < T.
    """
    if not (0 <= t < T):
        raise DomainError("need 0 <= t < T")
    a = params.activity
    return float(np.exp(params.initial_activity_time) * (np.exp(a * T) - np.exp(a * t)))


def volatility_theta(params: ModelParams, t, s_star):
    """Stock-GOP volatility ``theta = sqrt(4 a exp(tau_t) / s_star)``.

    Accepts scalars or broadcastable arrays; every s_star must be > 0.
    """
    s_star = np.asarray(s_star, dtype=float)
    if np.any(s_star <= 0):
        raise DomainError("s_star must be > 0")
    tau = activity_time(params, t)
    out = np.sqrt(4.0 * params.activity * np.exp(tau) / s_star)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing grid of times starting at 0."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two grid times")
        if times[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def regular(cls, horizon: float, step: float) -> "TimeGrid":
        if not (horizon > 0 and step > 0):
            raise ValueError("horizon and step must be > 0")
        n = int(round(horizon / step))
        if n < 1:
            raise ValueError("step larger than horizon")
        return cls(np.linspace(0.0, horizon, n + 1))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of the grid time closest to t; t must lie on the grid."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise ValueError(f"time {t} is not on the grid")
        return i


@dataclass(frozen=True)
class MarketCoefficients:
    """Drift vector and nonsingular diffusion matrix of the risky accounts."""

    drift: np.ndarray
    diffusion: np.ndarray

    def __post_init__(self):
        drift = np.atleast_1d(np.asarray(self.drift, dtype=float))
        diffusion = np.atleast_2d(np.asarray(self.diffusion, dtype=float))
        n = drift.size
        if n < 1 or diffusion.shape != (n, n):
            raise ValueError("diffusion must be an n x n matrix matching drift")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)

    @property
    def n(self) -> int:
        return self.drift.size


@dataclass(frozen=True)
class GopSolution:
    """Solved stock-GOP weights and volatilities for given coefficients."""

    pi_star: np.ndarray
    lambda_star: float
    sigma_star: np.ndarray
    sigma_star_star: np.ndarray
    residual: float
    condition_number: float


def solve_gop_weights(
    coeffs: MarketCoefficients, cond_cap: float = 1e12
) -> GopSolution:
    """Solve for the stock-GOP weights and the net risk-adjusted return.

    Solves the bordered linear system ``M (pi, lambda)^T = (drift, 1)^T`` with
    ``M = [[b b^T, 1], [1^T, 0]]`` and derives the volatility vectors
    ``sigma* = b^T pi`` and ``sigma** = lambda b^{-1} 1 + sigma*``.
    """
    b = coeffs.diffusion
    n = coeffs.n
    cond = float(np.linalg.cond(b))
    if not np.isfinite(cond) or cond > cond_cap:
        raise NumericalError(
            f"diffusion matrix is singular or ill-conditioned (cond={cond:.3e}, "
            f"cap={cond_cap:.3e})"
        )
    m = np.zeros((n + 1, n + 1))
    m[:n, :n] = b @ b.T
    m[:n, n] = 1.0
    m[n, :n] = 1.0
    rhs = np.concatenate([coeffs.drift, [1.0]])
    sol = np.linalg.solve(m, rhs)
    pi = sol[:n]
    lam = float(sol[n])
    sigma_star = b.T @ pi
    sigma_star_star = lam * np.linalg.solve(b, np.ones(n)) + sigma_star
    residual = float(np.max(np.abs(m @ sol - rhs)))
    return GopSolution(
        pi_star=pi,
        lambda_star=lam,
        sigma_star=sigma_star,
        sigma_star_star=sigma_star_star,
        residual=residual,
        condition_number=cond,
    )


def reference_params(lambda_star: float = 0.05) -> ModelParams:
    """The reference parameter set used across examples and experiments."""
    return ModelParams(
        activity=0.05,
        initial_activity_time=float(np.log(0.2)),
        s_star_0=1.0,
        net_risk_adjusted_return=PiecewiseConstant.constant(lambda_star),
        horizon=30.0,
    )
