"""Benchmark-neutral pricing: Monte Carlo, closed forms, risk-neutral gap.

The BN price of a claim paying H_T is S*_0 * E*[H_T / S*_T].  Under the
squared-Bessel model the fair zero-coupon bond has the closed form
P(t, T) = 1 - exp(-S*_t / (2 Delta(t, T))), strictly below the risk-neutral
price of 1 because 1/S* is a strict local martingale under any putative
risk-neutral measure.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from . import rng
from .errors import ContractError, DataError, DomainError
from .measure import p_measure_snapshots
from .model import ModelParams, TimeGrid, transformed_time_increment
from .paths import simulate_sgop_euler, simulate_sgop_exact

#: Default Euler step when a pricing run needs a discretized grid.
DEFAULT_EULER_STEP = 1.0 / 250.0


@dataclass(frozen=True)
class Claim:
    """A nonnegative payoff at a fixed maturity.

    ``payoff`` maps terminal stock-GOP values (and, when
    ``requires_insurance_driver`` is set, a 0/1 event indicator array) to
    payoff values in savings-account units.  ``kind`` tags the claim family
    for the hedging engine; ``price_hat`` (when present) evaluates
    Hhat(t, s) = E*[H_T / S*_T | S*_t = s] for the market part of the claim.
    """

    maturity: float
    payoff: Callable
    kind: str = "terminal"
    requires_insurance_driver: bool = False
    event_prob: float | None = None
    price_hat: Callable | None = None
    label: str = ""

    def __post_init__(self):
        if not self.maturity > 0:
            raise DomainError("maturity must be > 0")
        if self.requires_insurance_driver:
            p = self.event_prob
            if p is None or not (0.0 <= p <= 1.0):
                raise DomainError("event_prob must lie in [0, 1]")


def zcb_claim(T: float) -> Claim:
    return Claim(
        maturity=T,
        payoff=lambda s: np.ones_like(s),
        kind="zcb",
        price_hat=lambda params, t, s: zcb_price_hat(params, t, s, T),
        label="zcb",
    )


def numeraire_claim(T: float) -> Claim:
    return Claim(
        maturity=T,
        payoff=lambda s: s,
        kind="numeraire",
        price_hat=lambda params, t, s: np.ones_like(np.asarray(s, dtype=float)),
        label="numeraire",
    )


def digital_claim(T: float, strike: float) -> Claim:
    if not strike > 0:
        raise DomainError("strike must be > 0")
    return Claim(
        maturity=T,
        payoff=lambda s: (s > strike).astype(float),
        kind="terminal",
        price_hat=lambda params, t, s: digital_price_hat(params, t, s, T, strike),
        label=f"digital_{strike:g}",
    )


def capped_claim(T: float, cap: float) -> Claim:
    if not cap > 0:
        raise DomainError("cap must be > 0")
    return Claim(
        maturity=T,
        payoff=lambda s: np.minimum(s, cap),
        kind="terminal",
        price_hat=lambda params, t, s: capped_price_hat(params, t, s, T, cap),
        label=f"capped_{cap:g}",
    )


def european_claim(T: float, f: Callable, label: str = "european") -> Claim:
    """Claim paying f(S*_T); priced pointwise by quadrature when hedged."""
    return Claim(
        maturity=T,
        payoff=f,
        kind="terminal",
        price_hat=lambda params, t, s: european_price_hat(params, t, s, T, f),
        label=label,
    )


def binary_event_claim(T: float, event_prob: float) -> Claim:
    """Pays the indicator of an event independent of the market drivers."""
    return Claim(
        maturity=T,
        payoff=lambda s, ind: ind.astype(float),
        kind="binary_event",
        requires_insurance_driver=True,
        event_prob=event_prob,
        price_hat=lambda params, t, s: zcb_price_hat(params, t, s, T),
        label=f"binary_{event_prob:g}",
    )


@dataclass(frozen=True)
class PriceReport:
    bn_price: float
    se: float
    n_paths: int
    seed: int
    closed_form: float | None = None
    rn_price: float | None = None

    def __post_init__(self):
        if self.bn_price < 0 or self.se < 0:
            raise ContractError("price and SE must be nonnegative")


@dataclass(frozen=True)
class RnComparison:
    fair: float
    risk_neutral: float
    gap: float


def zcb_fair_closed_form(params: ModelParams, t: float, s_star_t: float, T: float) -> float:
    """Fair zero-coupon bond P(t, T) = 1 - exp(-s / (2 Delta(t, T)))."""
    if not s_star_t > 0:
        raise DomainError("s_star_t must be > 0")
    delta = transformed_time_increment(params, t, T)
    return float(1.0 - np.exp(-s_star_t / (2.0 * delta)))


def zcb_price_hat(params: ModelParams, t: float, s, T: float):
    """Hhat(t, s) = P(t, T) / s for the zero-coupon bond; vectorized in s."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("s must be > 0")
    delta = transformed_time_increment(params, t, T)
    out = -np.expm1(-s / (2.0 * delta)) / s
    return out if out.ndim else float(out)


def _poisson_truncation(h_max: float) -> int:
    return int(np.ceil(h_max + 12.0 * np.sqrt(h_max + 1.0) + 25.0))


def digital_price_hat(params: ModelParams, t: float, s, T: float, strike: float):
    """Hhat(t, s) = E*[1_{S_T > K} / S_T | S_t = s], vectorized in s.

    Uses the Poisson-Gamma mixture of the noncentral chi-squared transition:
    conditioning on the Poisson count N, 1/S_T integrates against a
    Gamma(1+N) tail, giving a rapidly converging series in N.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("s must be > 0")
    delta = transformed_time_increment(params, t, T)
    h = np.atleast_1d(s / (2.0 * delta))
    c = strike / (2.0 * delta)
    n = np.arange(_poisson_truncation(float(np.max(h))) + 1)
    log_pois = -h[..., None] + n * np.log(h[..., None]) - special.gammaln(n + 1.0)
    terms = np.exp(log_pois) * special.gammaincc(n + 1.0, c) / (n + 1.0)
    out = terms.sum(axis=-1) / (2.0 * delta)
    out = out.reshape(np.shape(s)) if np.ndim(s) else float(out[0])
    return out


def capped_price_hat(params: ModelParams, t: float, s, T: float, cap: float):
    """Hhat for min(S_T, K): E[1_{S_T <= K}] + K E[1_{S_T > K} / S_T]."""
    s = np.asarray(s, dtype=float)
    delta = transformed_time_increment(params, t, T)
    below = stats.ncx2.cdf(cap / delta, df=4, nc=s / delta)
    out = below + cap * np.asarray(digital_price_hat(params, t, s, T, cap))
    return out if out.ndim else float(out)


def european_price_hat(params: ModelParams, t: float, s, T: float, f: Callable):
    """Hhat(t, s) = E*[f(S_T)/S_T | S_t = s] by quadrature; pointwise, slow."""
    delta = transformed_time_increment(params, t, T)

    def one(si: float) -> float:
        nc = si / delta
        val, _ = integrate.quad(
            lambda y: float(f(np.asarray(delta * y))) / (delta * y)
            * stats.ncx2.pdf(y, df=4, nc=nc),
            0.0,
            np.inf,
            limit=200,
        )
        return val

    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.array([one(si) for si in s_arr])
    return out.reshape(np.shape(s)) if np.ndim(s) else float(out[0])


def _claim_values(claim: Claim, params: ModelParams, s_terminal: np.ndarray,
                  seed: int) -> np.ndarray:
    """Payoff / S_T per path, with event indicators drawn when needed."""
    if claim.requires_insurance_driver:
        n = s_terminal.size
        ind = np.empty(n)
        for start, stop, index in rng.chunk_ranges(n):
            gen = rng.chunk_generator(seed, rng.PURPOSE_EVENTS, index)
            ind[start:stop] = gen.random(stop - start) < claim.event_prob
        h = np.asarray(claim.payoff(s_terminal, ind), dtype=float)
    else:
        h = np.asarray(claim.payoff(s_terminal), dtype=float)
    bad = np.flatnonzero(~np.isfinite(h))
    if bad.size:
        raise DataError(f"non-finite payoff on paths {bad[:20].tolist()}")
    if np.any(h < 0):
        raise DataError("claim payoff must be nonnegative")
    return h / s_terminal


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def _antithetic_terminal(params: ModelParams, T: float, n_paths: int, seed: int):
    """Paired terminal draws via the inverse noncentral chi-squared CDF."""
    delta = transformed_time_increment(params, 0.0, T)
    nc = params.s_star_0 / delta
    s1 = np.empty(n_paths)
    s2 = np.empty(n_paths)
    for start, stop, index in rng.chunk_ranges(n_paths):
        gen = rng.chunk_generator(seed, rng.PURPOSE_MARKET, index)
        u = gen.random(stop - start)
        u = np.clip(u, 1e-16, 1.0 - 1e-16)
        s1[start:stop] = delta * stats.ncx2.ppf(u, df=4, nc=nc)
        s2[start:stop] = delta * stats.ncx2.ppf(1.0 - u, df=4, nc=nc)
    return s1, s2


def bn_price_mc(
    params: ModelParams,
    claim: Claim,
    n_paths: int,
    seed: int,
    sampler: str = "exact",
    step: float = DEFAULT_EULER_STEP,
    antithetic: bool = False,
    threads: int = 1,
) -> PriceReport:
    """BN price S*_0 * E*[H_T / S*_T] by Monte Carlo under Q*.

    ``sampler='exact'`` draws the terminal value in one exact squared-Bessel
    transition; ``'euler'`` runs the discretized scheme on a regular grid
    (useful for path-by-path comparisons against real-world pricing).
    """
    if n_paths < 2:
        raise ContractError("n_paths must be >= 2")
    T = claim.maturity
    if antithetic:
        if sampler != "exact":
            raise ContractError("antithetic sampling requires the exact sampler")
        s1, s2 = _antithetic_terminal(params, T, n_paths, seed)
        vals = 0.5 * (
            _claim_values(claim, params, s1, seed)
            + _claim_values(claim, params, s2, seed)
        )
    else:
        if sampler == "exact":
            grid = TimeGrid(np.array([0.0, T]))
            paths = simulate_sgop_exact(params, grid, n_paths, seed, threads=threads)
        elif sampler == "euler":
            grid = TimeGrid.regular(T, step)
            paths = simulate_sgop_euler(
                params, grid, n_paths, seed, measure="Q*",
                store_increments=False, threads=threads,
            )
        else:
            raise ContractError(f"unknown sampler {sampler!r}")
        vals = _claim_values(claim, params, paths.s_terminal, seed)
    mean, se = _mean_se(vals)
    closed = None
    rn = None
    if claim.kind == "zcb":
        closed = zcb_fair_closed_form(params, 0.0, params.s_star_0, T)
        rn = 1.0
    elif claim.kind == "numeraire":
        closed = params.s_star_0
    elif claim.kind == "binary_event":
        closed = binary_claim_price(params, claim.event_prob, T)
    return PriceReport(
        bn_price=params.s_star_0 * mean,
        se=params.s_star_0 * se,
        n_paths=n_paths,
        seed=seed,
        closed_form=closed,
        rn_price=rn,
    )


def real_world_price_mc(
    params: ModelParams,
    claim: Claim,
    n_paths: int,
    seed: int,
    step: float = DEFAULT_EULER_STEP,
    terminal: tuple[np.ndarray, np.ndarray] | None = None,
) -> PriceReport:
    """Real-world price S**_0 * E_P[H_T / S**_T] (with S**_0 = 1).

    Since S**_T = (S*_T / S*_0) / Lambda_T, the estimator reduces to
    S*_0 * mean(Lambda_T * H_T / S*_T) along real-world paths; ``terminal``
    may supply precomputed ``(s_T, lambda_T)`` arrays to reuse a simulation.
    """
    if terminal is None:
        grid = TimeGrid.regular(claim.maturity, step)
        s_snap, lam_snap = p_measure_snapshots(
            params, grid, n_paths, seed, [claim.maturity]
        )
        s_T, lam_T = s_snap[:, 0], lam_snap[:, 0]
    else:
        s_T, lam_T = terminal
        n_paths = s_T.size
    vals = lam_T * _claim_values(claim, params, s_T, seed)
    mean, se = _mean_se(vals)
    return PriceReport(
        bn_price=params.s_star_0 * mean,
        se=params.s_star_0 * se,
        n_paths=n_paths,
        seed=seed,
    )


def rn_comparison(params: ModelParams, T: float) -> RnComparison:
    """Fair vs risk-neutral ZCB price; gap = exp(-S*_0 / (2 Delta(0, T)))."""
    if not 0 < T <= params.horizon:
        raise DomainError("need 0 < T <= horizon")
    fair = zcb_fair_closed_form(params, 0.0, params.s_star_0, T)
    delta = transformed_time_increment(params, 0.0, T)
    gap = float(np.exp(-params.s_star_0 / (2.0 * delta)))
    return RnComparison(fair=fair, risk_neutral=1.0, gap=gap)


def binary_claim_price(params: ModelParams, event_prob: float, T: float) -> float:
    """Fair price of 1_A paid at T for a market-independent event."""
    if not 0.0 <= event_prob <= 1.0:
        raise DomainError("event_prob must lie in [0, 1]")
    return zcb_fair_closed_form(params, 0.0, params.s_star_0, T) * event_prob
