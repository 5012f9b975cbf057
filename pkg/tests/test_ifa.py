"""Premium bounds, deflated-position checks, and arbitrage probes."""

import numpy as np
import pytest

from bngop.errors import ContractError, DataError, DomainError
from bngop.ifa import (
    InsuranceContractSpec,
    arbitrage_probe,
    deflated_value_check,
    event_contract,
    fixed_contract,
    numeraire_contract,
    premium_bound,
)
from bngop.measure import p_measure_snapshots
from bngop.model import TimeGrid
from bngop.pricing import zcb_fair_closed_form

T = 10.0
N = 20_000
STEP = 1.0 / 100.0


@pytest.fixture(scope="module")
def terminal(params):
    s_snap, lam_snap = p_measure_snapshots(
        params, TimeGrid.regular(T, STEP), N, 314, [T]
    )
    return s_snap[:, 0], lam_snap[:, 0]


class TestPremiumBound:
    def test_zero_benefit_costs_nothing(self, params):
        bound, se = premium_bound(params, fixed_contract(T, 0.0, 0.0), 500, 1)
        assert bound == 0.0 and se == 0.0

    def test_numeraire_benefit_costs_initial_value(self, params):
        bound, se = premium_bound(params, numeraire_contract(T, 0.0), 500, 1)
        assert bound == params.s_star_0 and se == 0.0

    def test_fixed_benefit_is_zcb_multiple(self, params):
        bound, se = premium_bound(params, fixed_contract(T, 2.0, 0.0), N, 2)
        target = 2.0 * zcb_fair_closed_form(params, 0.0, params.s_star_0, T)
        assert abs(bound - target) < 3.0 * se

    def test_event_benefit_factorizes(self, params):
        prob = 0.3
        bound, se = premium_bound(params, event_contract(T, prob, 0.0), N, 3)
        target = prob * zcb_fair_closed_form(params, 0.0, params.s_star_0, T)
        assert abs(bound - target) < 3.0 * se

    def test_maturity_beyond_horizon_rejected(self, params):
        with pytest.raises(DomainError):
            premium_bound(params, fixed_contract(60.0, 1.0, 0.0), 10, 1)

    def test_negative_benefit_rejected(self, params):
        bad = InsuranceContractSpec(
            maturity=T, premium=0.0, benefit=lambda s, ind: -np.ones_like(s)
        )
        with pytest.raises(DataError):
            premium_bound(params, bad, 100, 1)


class TestDeflatedValue:
    def test_zero_allocation_zero_hedge_is_exactly_zero(self, params, terminal):
        contract = fixed_contract(T, 1.0, 0.2)
        report = deflated_value_check(
            params, contract, 0.0, 0.0, N, 314, terminal=terminal
        )
        assert report.deflated_value == 0.0
        assert report.deflated_se == 0.0

    def test_centered_at_the_bound(self, params, terminal):
        probe = deflated_value_check(
            params, fixed_contract(T, 1.0, 0.0), 1.0, 0.0, N, 314, terminal=terminal
        )
        contract = fixed_contract(T, 1.0, probe.bound)
        report = deflated_value_check(
            params, contract, 1.0, 0.0, N, 314, terminal=terminal
        )
        # premium = two-route bound estimate on the same paths: the deflated
        # position is p * E[Z S*] - bound, small but not exactly zero because
        # E[Z S*] is itself estimated; allow 3 combined SEs
        tol = 3.0 * (report.deflated_se + report.se)
        assert abs(report.deflated_value) < tol
        assert report.compliant

    def test_negative_below_the_bound(self, params, terminal):
        probe = deflated_value_check(
            params, fixed_contract(T, 1.0, 0.0), 1.0, 0.0, N, 314, terminal=terminal
        )
        cheap = fixed_contract(T, 1.0, 0.5 * probe.bound)
        report = deflated_value_check(
            params, cheap, 1.0, 0.0, N, 314, terminal=terminal
        )
        assert report.deflated_value < -3.0 * report.deflated_se
        assert report.compliant  # undercharging is safe, not an arbitrage

    def test_overcharging_flagged(self, params, terminal):
        probe = deflated_value_check(
            params, fixed_contract(T, 1.0, 0.0), 1.0, 0.0, N, 314, terminal=terminal
        )
        rich = fixed_contract(T, 1.0, 1.5 * probe.bound)
        report = deflated_value_check(
            params, rich, 1.0, 0.0, N, 314, terminal=terminal
        )
        assert not report.compliant
        assert report.deflated_value > 0.0

    @pytest.mark.parametrize("strategy", ["savings", "gop"])
    def test_hedge_capital_is_supermartingale(self, params, terminal, strategy):
        # x units run through a permissible strategy: E[Z v_T] <= x
        contract = fixed_contract(T, 0.0, 0.0)
        x = 1.0
        report = deflated_value_check(
            params, contract, 0.0, x, N, 314, strategy=strategy, terminal=terminal
        )
        assert report.deflated_value <= x + 3.0 * report.deflated_se

    def test_bangbang_supermartingale(self, params):
        report = deflated_value_check(
            params, fixed_contract(T, 0.0, 0.0), 0.0, 1.0, 5000, 9,
            strategy="bangbang", step=STEP,
        )
        assert report.deflated_value <= 1.0 + 3.0 * report.deflated_se

    def test_bangbang_refuses_terminal_only_data(self, params, terminal):
        with pytest.raises(ContractError):
            deflated_value_check(
                params, fixed_contract(T, 0.0, 0.0), 0.0, 1.0, N, 314,
                strategy="bangbang", terminal=terminal,
            )

    def test_unknown_strategy_rejected(self, params, terminal):
        with pytest.raises(ContractError):
            deflated_value_check(
                params, fixed_contract(T, 0.0, 0.0), 0.0, 1.0, N, 314,
                strategy="barrier", terminal=terminal,
            )

    def test_negative_inputs_rejected(self, params, terminal):
        with pytest.raises(DomainError):
            deflated_value_check(
                params, fixed_contract(T, 1.0, 0.1), -1.0, 0.0, N, 314,
                terminal=terminal,
            )
        with pytest.raises(DomainError):
            deflated_value_check(
                params, fixed_contract(T, 1.0, 0.1), 1.0, -1.0, N, 314,
                terminal=terminal,
            )


class TestArbitrageProbe:
    def test_fair_premium_no_violation(self, params, terminal):
        report = arbitrage_probe(
            params, event_contract(T, 0.3, 0.0), 1.0, N, 314, terminal=terminal
        )
        assert not report.violation_found
        assert len(report.rows) == 3 * 3  # strategies x allocations
        for row in report.rows:
            assert row.min_terminal < 0.0

    def test_cheap_premium_no_violation(self, params, terminal):
        report = arbitrage_probe(
            params, event_contract(T, 0.3, 0.0), 0.5, N, 314, terminal=terminal
        )
        assert not report.violation_found

    def test_excessive_premium_is_a_violation(self, params, terminal):
        # with an event benefit, a premium above max(beta / S*_T) makes the
        # insurer's book nonnegative on every path: a first-kind arbitrage
        s_T, _ = terminal
        huge = 10.0 / float(np.min(s_T))
        report = arbitrage_probe(
            params, event_contract(T, 0.3, 0.0), huge, N, 314, terminal=terminal
        )
        assert report.violation_found

    def test_multiplier_validation(self, params, terminal):
        with pytest.raises(DomainError):
            arbitrage_probe(
                params, event_contract(T, 0.3, 0.0), 0.0, N, 314, terminal=terminal
            )
