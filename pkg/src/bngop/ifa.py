"""Premium bounds and insurance-finance-arbitrage diagnostics.

A single premium p for a benefit beta paid at T admits no
insurance-finance arbitrage of the first kind when p is at most the
benchmark-neutral price S*_0 * E*[beta / S*_T].  The check deflates the
insurer's terminal position with Z_T = 1/S**_T (extended-market GOP as
deflator) and verifies the supermartingale inequality by Monte Carlo.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ContractError, DataError, DomainError
from .measure import p_measure_snapshots
from .model import ModelParams, TimeGrid
from .paths import simulate_sgop_exact
from .pricing import DEFAULT_EULER_STEP

PROBE_STRATEGIES = ("savings", "gop", "bangbang")


@dataclass(frozen=True)
class InsuranceContractSpec:
    """One contract: benefit functional, premium, maturity.

    ``benefit`` maps (terminal stock GOP, 0/1 event indicator) to a
    nonnegative payoff in savings-account units; contracts built from the
    factories below share the benefit law with independent event drivers,
    which is what makes books of them conditionally i.i.d. given the market.
    """

    maturity: float
    premium: float
    benefit: Callable
    event_prob: float | None = None
    label: str = ""

    def __post_init__(self):
        if not self.maturity > 0:
            raise DomainError("maturity must be > 0")
        if self.event_prob is not None and not 0.0 <= self.event_prob <= 1.0:
            raise DomainError("event_prob must lie in [0, 1]")


def event_contract(T: float, event_prob: float, premium: float) -> InsuranceContractSpec:
    return InsuranceContractSpec(
        maturity=T,
        premium=premium,
        benefit=lambda s, ind: ind.astype(float),
        event_prob=event_prob,
        label=f"event_{event_prob:g}",
    )


def fixed_contract(T: float, amount: float, premium: float) -> InsuranceContractSpec:
    if amount < 0:
        raise DomainError("benefit amount must be >= 0")
    return InsuranceContractSpec(
        maturity=T,
        premium=premium,
        benefit=lambda s, ind: np.full_like(np.asarray(s, dtype=float), amount),
        label=f"fixed_{amount:g}",
    )


def numeraire_contract(T: float, premium: float) -> InsuranceContractSpec:
    return InsuranceContractSpec(
        maturity=T,
        premium=premium,
        benefit=lambda s, ind: np.asarray(s, dtype=float),
        label="numeraire",
    )


@dataclass(frozen=True)
class PremiumBoundReport:
    bound: float
    se: float
    premium: float
    compliant: bool
    tolerance_band: float
    deflated_value: float | None = None
    deflated_se: float | None = None


@dataclass(frozen=True)
class ProbeStrategyRow:
    strategy: str
    allocation: float
    min_terminal: float
    frac_negative: float
    frac_positive: float


@dataclass(frozen=True)
class ProbeReport:
    """Falsification probe over a declared finite strategy family.

    ``violation_found`` means some probed combination produced a nonnegative,
    nontrivial terminal position from zero initial capital on every sampled
    path; absence of a violation is evidence, not proof.
    """

    multiplier: float
    bound: float
    violation_found: bool
    rows: tuple[ProbeStrategyRow, ...]


def _event_indicators(n_paths: int, seed: int, prob: float) -> np.ndarray:
    ind = np.empty(n_paths)
    for start, stop, index in rng.chunk_ranges(n_paths):
        gen = rng.chunk_generator(seed, rng.PURPOSE_BENEFITS, index)
        ind[start:stop] = gen.random(stop - start) < prob
    return ind


def _benefit_values(contract: InsuranceContractSpec, s_T: np.ndarray, seed: int) -> np.ndarray:
    ind = (
        _event_indicators(s_T.size, seed, contract.event_prob)
        if contract.event_prob is not None
        else np.zeros(s_T.size)
    )
    beta = np.asarray(contract.benefit(s_T, ind), dtype=float)
    bad = np.flatnonzero(~np.isfinite(beta))
    if bad.size:
        raise DataError(f"non-finite benefit on paths {bad[:20].tolist()}")
    if np.any(beta < 0):
        raise DataError("benefit must be nonnegative")
    return beta


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def premium_bound(
    params: ModelParams, contract: InsuranceContractSpec, n_paths: int, seed: int
) -> tuple[float, float]:
    """MC estimate of the no-arbitrage premium bound S*_0 * E*[beta / S*_T]."""
    T = contract.maturity
    if T > params.horizon:
        raise DomainError("maturity exceeds the model horizon")
    grid = TimeGrid(np.array([0.0, T]))
    paths = simulate_sgop_exact(params, grid, n_paths, seed)
    beta = _benefit_values(contract, paths.s_terminal, seed)
    mean, se = _mean_se(beta / paths.s_terminal)
    return params.s_star_0 * mean, params.s_star_0 * se


def _strategy_terminal_value(
    strategy: str,
    hedge_initial: float,
    s_T: np.ndarray,
    lam_T: np.ndarray,
    s_mid: np.ndarray | None,
    lam_mid: np.ndarray | None,
    s0: float,
) -> np.ndarray:
    """Terminal value (savings units) of x invested self-financing at 0.

    The extended-market GOP is reconstructed as S**_t = (S*_t/S*_0)/Lambda_t
    with S**_0 = 1.
    """
    if strategy == "savings":
        return np.full_like(s_T, hedge_initial)
    sss_T = (s_T / s0) / lam_T
    if strategy == "gop":
        return hedge_initial * sss_T
    if strategy == "bangbang":
        if s_mid is None or lam_mid is None:
            raise ContractError("bang-bang strategy needs mid-horizon values")
        sss_mid = (s_mid / s0) / lam_mid
        return hedge_initial * sss_T / sss_mid
    raise ContractError(f"unknown strategy {strategy!r}")


def deflated_value_check(
    params: ModelParams,
    contract: InsuranceContractSpec,
    allocation: float,
    hedge_initial: float,
    n_paths: int,
    seed: int,
    strategy: str = "savings",
    step: float = DEFAULT_EULER_STEP,
    terminal: tuple[np.ndarray, np.ndarray] | None = None,
) -> PremiumBoundReport:
    """Deflated terminal position of the insurer under real-world dynamics.

    Computes E_P[Z_T (U_T + v_T)] with Z_T = 1/S**_T, insurance book
    U_T = allocation * (p S*_T - beta), and v_T the terminal value of
    ``hedge_initial`` run through the chosen permissible strategy.  At the
    premium bound with zero hedge capital this centers on 0; below the bound
    it is negative.  ``terminal`` may supply precomputed (s_T, lambda_T).
    """
    if allocation < 0:
        raise DomainError("allocation must be >= 0")
    if hedge_initial < 0:
        raise DomainError("hedge_initial must be >= 0")
    T = contract.maturity
    s0 = params.s_star_0
    need_mid = strategy == "bangbang"
    if terminal is None:
        grid = TimeGrid.regular(T, step)
        checkpoints = [T / 2.0, T] if need_mid else [T]
        s_snap, lam_snap = p_measure_snapshots(params, grid, n_paths, seed, checkpoints)
        s_T, lam_T = s_snap[:, -1], lam_snap[:, -1]
        s_mid = s_snap[:, 0] if need_mid else None
        lam_mid = lam_snap[:, 0] if need_mid else None
    else:
        s_T, lam_T = terminal
        n_paths = s_T.size
        s_mid = lam_mid = None
        if need_mid:
            raise ContractError("bang-bang strategy cannot reuse terminal-only data")

    beta = _benefit_values(contract, s_T, seed)
    bound_vals = lam_T * (s0 / s_T) * beta  # two-route bound estimate under P
    bound, bound_se = _mean_se(bound_vals)
    p = contract.premium
    u = allocation * (p * s_T - beta)
    v = _strategy_terminal_value(strategy, hedge_initial, s_T, lam_T, s_mid, lam_mid, s0)
    z = lam_T * (s0 / s_T)  # 1/S**_T with S**_0 = 1
    deflated, deflated_se = _mean_se(z * (u + v))
    band = 3.0 * bound_se
    return PremiumBoundReport(
        bound=bound,
        se=bound_se,
        premium=p,
        compliant=p <= bound + band,
        tolerance_band=band,
        deflated_value=deflated,
        deflated_se=deflated_se,
    )


def arbitrage_probe(
    params: ModelParams,
    contract: InsuranceContractSpec,
    premium_multiplier: float,
    n_paths: int,
    seed: int,
    step: float = DEFAULT_EULER_STEP,
    terminal: tuple[np.ndarray, np.ndarray] | None = None,
    allocations=(0.5, 1.0, 2.0),
) -> ProbeReport:
    """Search the declared strategy family for a first-kind arbitrage.

    With premium p = multiplier * bound, evaluates the terminal position
    U + V from zero initial capital for each (strategy, allocation) and
    reports violation statistics.  Permissibility (V >= 0 from zero capital)
    forces V = 0, so the position is the insurance book alone; the strategy
    axis is kept to make the probed family explicit in reports.
    """
    if premium_multiplier <= 0:
        raise DomainError("premium_multiplier must be > 0")
    T = contract.maturity
    bound, _ = premium_bound(params, contract, n_paths, seed)
    if terminal is None:
        grid = TimeGrid.regular(T, step)
        s_snap, lam_snap = p_measure_snapshots(params, grid, n_paths, seed, [T])
        s_T = s_snap[:, 0]
    else:
        s_T, _lam = terminal
        n_paths = s_T.size
    beta = _benefit_values(contract, s_T, seed)
    p = premium_multiplier * bound
    rows = []
    violation = False
    for strategy in PROBE_STRATEGIES:
        for psi in allocations:
            w = psi * (p * s_T - beta)
            min_w = float(np.min(w))
            frac_neg = float(np.mean(w < 0))
            frac_pos = float(np.mean(w > 0))
            if min_w >= 0.0 and frac_pos > 0.0:
                violation = True
            rows.append(
                ProbeStrategyRow(
                    strategy=strategy,
                    allocation=float(psi),
                    min_terminal=min_w,
                    frac_negative=frac_neg,
                    frac_positive=frac_pos,
                )
            )
    return ProbeReport(
        multiplier=premium_multiplier,
        bound=bound,
        violation_found=violation,
        rows=tuple(rows),
    )
