"""Density process, martingale diagnostics, and measure-change reweighting."""

import io

import numpy as np
import pytest

from bngop import TimeGrid, reference_params
from bngop.errors import ContractError, DataError
from bngop.measure import (
    martingale_diagnostic,
    p_measure_snapshots,
    reweight_expectation,
    simulate_density,
)
from bngop.model import ModelParams
from bngop.paths import PathSet, simulate_sgop_euler, simulate_sgop_exact
from bngop.pricing import zcb_fair_closed_form

N = 20_000
STEP = 1.0 / 100.0


@pytest.fixture(scope="module")
def p_paths():
    params = reference_params()
    return params, simulate_sgop_euler(params, TimeGrid.regular(10.0, STEP), N, 17, "P")


@pytest.fixture(scope="module")
def density(p_paths):
    params, paths = p_paths
    return simulate_density(params, paths)


class TestSimulateDensity:
    def test_identity_when_lambda_zero(self, params_lam0):
        paths = simulate_sgop_euler(
            params_lam0, TimeGrid.regular(5.0, STEP), 500, 3, "P"
        )
        dens = simulate_density(params_lam0, paths)
        assert np.all(dens.lam == 1.0)

    def test_mean_near_one(self, density):
        mean = np.mean(density.terminal)
        se = np.std(density.terminal, ddof=1) / np.sqrt(density.terminal.size)
        assert abs(mean - 1.0) < 3.0 * se

    def test_forced_zero_increments_give_pure_drift(self, params):
        grid = TimeGrid.regular(10.0, STEP)
        flat = np.ones((1, grid.times.size))
        paths = PathSet(
            grid=grid,
            s_star=flat,
            measure="P",
            seed=0,
            stream_ids=np.zeros(1, dtype=np.int64),
            aux_brownians=np.zeros((1, grid.n_steps)),
        )
        dens = simulate_density(params, paths)
        mu = dens.mu_star[0]
        expected = np.exp(-0.5 * np.sum(mu**2 * grid.dt))
        assert dens.terminal[0] == pytest.approx(expected, rel=1e-12)
        assert dens.terminal[0] < 1.0

    def test_requires_p_paths_with_increments(self, params):
        q = simulate_sgop_exact(params, TimeGrid.regular(1.0, 0.05), 10, 1)
        with pytest.raises(ContractError):
            simulate_density(params, q)
        p_wo = simulate_sgop_euler(
            params, TimeGrid.regular(1.0, 0.05), 10, 1, "P", store_increments=False
        )
        with pytest.raises(ContractError):
            simulate_density(params, p_wo)


class TestMartingaleDiagnostic:
    def test_zero_lambda_gives_zero_z(self, params_lam0):
        paths = simulate_sgop_euler(
            params_lam0, TimeGrid.regular(4.0, STEP), 200, 3, "P"
        )
        report = martingale_diagnostic(
            simulate_density(params_lam0, paths), [1.0, 4.0]
        )
        assert all(row.z == 0.0 for row in report.rows)

    def test_reference_params_checkpoints(self, density):
        report = martingale_diagnostic(density, [2.0, 5.0, 10.0])
        assert report.max_z < 3.0

    def test_broken_drift_is_caught(self, p_paths):
        # omit the -mu^2/2 compensator: E[exp(-mu dB)] > 1 per step, so the
        # diagnostic must flag the resulting upward bias
        params, paths = p_paths
        dens = simulate_density(params, paths)
        broken = np.exp(
            np.cumsum(-dens.mu_star * paths.aux_brownians, axis=1)
        )
        lam = np.concatenate([np.ones((paths.n_paths, 1)), broken], axis=1)
        fake = type(dens)(grid=paths.grid, lam=lam, mu_star=dens.mu_star)
        report = martingale_diagnostic(fake, [10.0])
        assert report.rows[0].z > 3.0

    def test_csv_emission(self, density):
        report = martingale_diagnostic(density, [5.0])
        buf = io.StringIO()
        report.to_csv(buf)
        assert buf.getvalue().startswith("checkpoint,mean,se,z\n")


class TestReweightExpectation:
    def test_unit_payoff_normalizes(self, p_paths, density):
        _, paths = p_paths
        est, se = reweight_expectation(
            paths, density, lambda p: np.ones(p.n_paths)
        )
        assert abs(est - 1.0) < 3.0 * se

    def test_inverse_terminal_matches_closed_form(self, p_paths, density):
        params, paths = p_paths
        est, se = reweight_expectation(paths, density, lambda p: 1.0 / p.s_terminal)
        target = zcb_fair_closed_form(params, 0.0, 1.0, 10.0)
        assert abs(est - target) < max(3.0 * se, 5e-3)

    def test_lambda_zero_reduces_to_plain_mean(self, params_lam0):
        paths = simulate_sgop_euler(
            params_lam0, TimeGrid.regular(4.0, STEP), 2000, 5, "P"
        )
        dens = simulate_density(params_lam0, paths)
        est, _ = reweight_expectation(paths, dens, lambda p: p.s_terminal)
        assert est == pytest.approx(float(np.mean(paths.s_terminal)), rel=1e-14)

    def test_nonfinite_payoff_rejected(self, p_paths, density):
        _, paths = p_paths

        def bad(p):
            out = np.ones(p.n_paths)
            out[3] = np.nan
            return out

        with pytest.raises(DataError, match="3"):
            reweight_expectation(paths, density, bad)


class TestTwoRouteConsistency:
    def test_payoff_suite(self, p_paths, density):
        params, paths = p_paths
        exact = simulate_sgop_exact(
            params, TimeGrid(np.array([0.0, 10.0])), N, 4
        )
        payoffs = {
            "one": lambda s: np.ones_like(s),
            "inverse": lambda s: 1.0 / s,
            "capped": lambda s: np.minimum(s, 2.0),
            "digital": lambda s: (s > 2.0).astype(float),
        }
        for name, f in payoffs.items():
            est_p, se_p = reweight_expectation(
                paths, density, lambda p, f=f: f(p.s_terminal)
            )
            direct = f(exact.s_terminal)
            est_q = float(np.mean(direct))
            se_q = float(np.std(direct, ddof=1) / np.sqrt(direct.size))
            tol = 3.0 * float(np.hypot(se_p, se_q)) + 5e-3  # + Euler bias margin
            assert abs(est_p - est_q) < tol, name


class TestSnapshots:
    def test_matches_full_simulation(self, p_paths, density):
        params, paths = p_paths
        s_snap, lam_snap = p_measure_snapshots(
            params, paths.grid, N, 17, [5.0, 10.0]
        )
        i5 = paths.grid.index_of(5.0)
        assert np.array_equal(s_snap[:, 0], paths.s_star[:, i5])
        assert np.allclose(lam_snap[:, 1], density.terminal, rtol=1e-12)
