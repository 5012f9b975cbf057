"""Risk-minimizing hedge construction and diagnostics in stock-GOP units.

All quantities are denominated in the stock GOP, where the traded accounts
are X0 = 1/S* (savings) and X1 = S*/S* = 1.  A claim's price Hhat = H*/S*
decomposes into a stochastic integral against X0 plus an orthogonal
monitoring martingale eta; the savings position is
zeta0 = -dHhat/ds * S*^2 and the stock-GOP position balances the book so
that the portfolio value equals Hhat at every rebalance date.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalError
from .model import ModelParams, TimeGrid, volatility_theta
from .paths import PathSet
from .pricing import Claim

#: Default relative bump for delta computation.
DEFAULT_BUMP = 1e-4


@dataclass(frozen=True)
class HedgeDecomposition:
    """Per-path hedge data on a shared grid.

    ``price_hat`` has shape (n_paths, n_times); positions ``zeta0``/``zeta1``
    and loadings ``phi_star``/``phi_prime`` live on left endpoints, shape
    (n_paths, n_steps); ``eta`` is the monitoring process with ``eta_0 = 0``.
    """

    grid: TimeGrid
    price_hat: np.ndarray
    zeta0: np.ndarray
    zeta1: np.ndarray
    eta: np.ndarray
    phi_star: np.ndarray
    phi_prime: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.eta[:, 0] != 0.0):
            raise ContractError("monitoring process must start at 0")
        if self.price_hat.shape[1] != self.grid.times.size:
            raise ContractError("price_hat shape does not match grid")


@dataclass(frozen=True)
class DeliveryReport:
    terminal_error: np.ndarray
    mean_error: float
    se: float
    rmse: float
    max_abs: float


@dataclass(frozen=True)
class OrthogonalityReport:
    mean: float
    se: float
    z: float


def delta_bump_reprice(pricing_fn, t: float, s_star, bump: float = DEFAULT_BUMP):
    """Central-difference delta of a price function of (t, s).

    The bump is relative for large s and absolute for small s:
    h = bump * max(1, s).  Vectorized in s.
    """
    s = np.asarray(s_star, dtype=float)
    h = bump * np.maximum(1.0, s)
    up = np.asarray(pricing_fn(t, s + h), dtype=float)
    down = np.asarray(pricing_fn(t, s - h), dtype=float)
    if not (np.all(np.isfinite(up)) and np.all(np.isfinite(down))):
        raise NumericalError("pricing function returned non-finite values")
    out = (up - down) / (2.0 * h)
    return out if out.ndim else float(out)


def bnrm_strategy_path(
    params: ModelParams,
    claim: Claim,
    paths: PathSet,
    events: np.ndarray | None = None,
    event_vol: float | None = None,
    bump: float = DEFAULT_BUMP,
) -> HedgeDecomposition:
    """Build the risk-minimizing hedge along simulated pricing-measure paths.

    Supported families: ``zcb``, ``numeraire``, ``terminal`` claims carrying a
    price function, and ``binary_event`` claims, for which ``events`` must
    hold the [0,1]-valued event-probability martingale per path (shape
    n_paths x n_times); its increments feed the monitoring process
    eta_t = sum_k Hhat_zcb(t_k, s_k) * dP^i_k.
    """
    if paths.measure != "Q*":
        raise ContractError("hedges are computed along pricing-measure paths")
    if claim.kind not in ("zcb", "numeraire", "terminal", "binary_event"):
        raise ContractError(f"unsupported claim family {claim.kind!r}")
    if claim.price_hat is None:
        raise ContractError(
            f"claim family {claim.kind!r} carries no price function"
        )
    grid = paths.grid
    times = grid.times
    if abs(times[-1] - claim.maturity) > 1e-9:
        raise ContractError("grid horizon must equal the claim maturity")
    s = paths.s_star
    n_paths, n_times = s.shape
    n_steps = n_times - 1

    if claim.kind == "binary_event":
        if events is None:
            raise ContractError("binary_event claims need the event martingale path")
        if events.shape != s.shape:
            raise ContractError("events shape does not match paths")

    # market-factor price and delta at left endpoints (for binary claims this
    # is the zero-coupon factor, scaled by the event martingale below)
    def hat_fn(t, sv):
        return claim.price_hat(params, t, sv)

    hat = np.empty_like(s)
    dhat = np.empty((n_paths, n_steps))
    theta = np.empty((n_paths, n_steps))
    for k in range(n_steps):
        hat[:, k] = hat_fn(times[k], s[:, k])
        dhat[:, k] = delta_bump_reprice(hat_fn, times[k], s[:, k], bump)
        theta[:, k] = volatility_theta(params, times[k], s[:, k])

    eta = np.zeros((n_paths, n_times))
    phi_prime = None
    if claim.kind == "binary_event":
        hz = hat[:, :-1].copy()  # zero-coupon factor before event scaling
        dp = np.diff(events, axis=1)
        np.cumsum(hz * dp, axis=1, out=eta[:, 1:])
        if event_vol is not None:
            phi_prime = hz * event_vol * events[:, :-1] * (1.0 - events[:, :-1])
        hat[:, :-1] *= events[:, :-1]
        dhat *= events[:, :-1]
        hat[:, -1] = events[:, -1] / s[:, -1]
    elif claim.kind == "numeraire":
        hat[:, -1] = 1.0
    elif claim.kind == "zcb":
        hat[:, -1] = 1.0 / s[:, -1]
    else:
        hat[:, -1] = np.asarray(claim.payoff(s[:, -1]), dtype=float) / s[:, -1]

    phi_star = dhat * theta * s[:, :-1]
    zeta0 = -dhat * s[:, :-1] ** 2
    zeta1 = hat[:, :-1] - zeta0 * paths.x0[:, :-1]
    return HedgeDecomposition(
        grid=grid,
        price_hat=hat,
        zeta0=zeta0,
        zeta1=zeta1,
        eta=eta,
        phi_star=phi_star,
        phi_prime=phi_prime,
    )


def portfolio_value_terminal(decomp: HedgeDecomposition, paths: PathSet) -> np.ndarray:
    """V_T = Hhat_0 + sum_k zeta0_k dX0_k + eta_T per path.

    The stock-GOP account is constant (X1 = 1) in this denomination, so only
    the savings leg and the monitoring process move the value.
    """
    dx0 = np.diff(paths.x0, axis=1)
    return decomp.price_hat[:, 0] + np.sum(decomp.zeta0 * dx0, axis=1) + decomp.eta[:, -1]


def delivery_check(decomp: HedgeDecomposition, claim: Claim, paths: PathSet) -> DeliveryReport:
    """Terminal error of the hedge against the claim in stock-GOP units."""
    if decomp.grid.times.shape != paths.grid.times.shape or np.any(
        decomp.grid.times != paths.grid.times
    ):
        raise ContractError("decomposition and paths live on different grids")
    v_T = portfolio_value_terminal(decomp, paths)
    target = decomp.price_hat[:, -1]
    err = v_T - target
    n = err.size
    se = float(np.std(err, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return DeliveryReport(
        terminal_error=err,
        mean_error=float(np.mean(err)),
        se=se,
        rmse=float(np.sqrt(np.mean(err**2))),
        max_abs=float(np.max(np.abs(err))),
    )


def orthogonality_check(decomp: HedgeDecomposition, paths: PathSet) -> OrthogonalityReport:
    """Realized covariation [eta, X0]_T across paths; should center on 0."""
    deta = np.diff(decomp.eta, axis=1)
    dx0 = np.diff(paths.x0, axis=1)
    cov = np.sum(deta * dx0, axis=1)
    mean = float(np.mean(cov))
    se = float(np.std(cov, ddof=1) / np.sqrt(cov.size)) if cov.size > 1 else 0.0
    z = abs(mean) / se if se > 0 else (0.0 if mean == 0.0 else float("inf"))
    return OrthogonalityReport(mean=mean, se=se, z=z)


def merge_monitoring_into_position(
    decomp: HedgeDecomposition,
    paths: PathSet,
    zeta_star: tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold the monitoring process into positions: delta = zeta + eta zeta*.

    ``zeta_star`` is the self-financing strategy holding the stock GOP itself,
    which in this single-stock denomination is (0, 1): its value
    zeta*^T X = 1 identically.  Returns (delta0, delta1) on left endpoints and
    verifies delta^T X = zeta^T X + eta pathwise.
    """
    zs0, zs1 = zeta_star
    x0_left = paths.x0[:, :-1]
    unit = zs0 * x0_left + zs1
    if np.max(np.abs(unit - 1.0)) > tol:
        raise ContractError("zeta_star is not a unit-value stock-GOP strategy")
    eta_left = decomp.eta[:, :-1]
    delta0 = decomp.zeta0 + eta_left * zs0
    delta1 = decomp.zeta1 + eta_left * zs1
    lhs = delta0 * x0_left + delta1
    rhs = decomp.zeta0 * x0_left + decomp.zeta1 + eta_left
    if np.max(np.abs(lhs - rhs)) > tol:
        raise ContractError("position merge violated the value identity")
    return delta0, delta1
