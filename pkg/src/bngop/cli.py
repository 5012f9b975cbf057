"""Config-driven experiment runner with deterministic CSV outputs.

Every run writes its CSV artifacts plus a ``manifest.json`` capturing the
parameters, seed, and library versions needed to reproduce each number.
Outputs are byte-identical across reruns and thread counts; nothing is
seeded from the wall clock and no timestamps are written.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, backend
from .config import (
    EXPERIMENTS,
    ExperimentConfig,
    build_claim,
    build_contract,
    build_gbm,
    build_lob,
    grid_spec,
    load_config,
)
from .errors import BngopError, ConfigError
from .hedging import bnrm_strategy_path, delivery_check, orthogonality_check
from .ifa import arbitrage_probe, deflated_value_check, premium_bound
from .lob import (
    LobConfig,
    WrightFisher,
    diversification_experiment,
    expected_refinancing_cost,
    simulate_event_martingales,
    simulate_gbm_refinancing,
    working_capital_path,
)
from .measure import martingale_diagnostic, simulate_density
from .model import TimeGrid
from .paths import params_hash, pathset_to_csv, simulate_sgop_euler, simulate_sgop_exact
from .pricing import bn_price_mc, rn_comparison


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_manifest(out: Path, cfg: ExperimentConfig, warnings: list[str]) -> None:
    grid_block = cfg.block("grid")
    manifest = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "n_paths": cfg.n_paths,
        "model": {
            "activity": cfg.model.activity,
            "initial_activity_time": cfg.model.initial_activity_time,
            "s_star_0": cfg.model.s_star_0,
            "net_risk_adjusted_return": {
                "breakpoints": list(cfg.model.net_risk_adjusted_return.breakpoints),
                "values": list(cfg.model.net_risk_adjusted_return.values),
            },
            "horizon": cfg.model.horizon,
        },
        "grid": grid_block,
        "versions": {
            "bngop": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "compiled_kernels": backend.HAVE_COMPILED,
        },
        "warnings": warnings,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_simulate(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    block = cfg.block("simulate")
    sampler = block.get("sampler", "euler")
    measure = block.get("measure", "P")
    step, horizon = grid_spec(cfg.block("grid"), cfg.model.horizon)
    grid = TimeGrid.regular(horizon, step)
    if sampler == "exact":
        paths = simulate_sgop_exact(cfg.model, grid, cfg.n_paths, cfg.seed, threads=threads)
    elif sampler == "euler":
        paths = simulate_sgop_euler(
            cfg.model, grid, cfg.n_paths, cfg.seed, measure=measure, threads=threads
        )
    else:
        raise ConfigError(f"unknown sampler {sampler!r}")
    if measure == "P" and sampler == "euler":
        density = simulate_density(cfg.model, paths)
        paths = type(paths)(
            grid=paths.grid,
            s_star=paths.s_star,
            measure=paths.measure,
            seed=paths.seed,
            stream_ids=paths.stream_ids,
            lambda_density=density.lam,
            aux_brownians=paths.aux_brownians,
        )
        checkpoints = _on_grid(grid, (horizon / 4, horizon / 2, horizon))
        report = martingale_diagnostic(density, checkpoints)
        with open(out / "density_diagnostic.csv", "w") as fh:
            report.to_csv(fh)
    with open(out / "paths.csv", "w") as fh:
        pathset_to_csv(paths, fh)
    return []


def _on_grid(grid: TimeGrid, checkpoints) -> list[float]:
    """Snap requested checkpoint times to the nearest grid times."""
    out = []
    for t in checkpoints:
        i = int(np.argmin(np.abs(grid.times - t)))
        out.append(float(grid.times[i]))
    return out


def _run_price(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    block = cfg.block("claim")
    claim = build_claim(block)
    price_block = cfg.block("price")
    report = bn_price_mc(
        cfg.model,
        claim,
        cfg.n_paths,
        cfg.seed,
        sampler=price_block.get("sampler", "exact"),
        antithetic=bool(price_block.get("antithetic", False)),
        threads=threads,
    )
    comparison = rn_comparison(cfg.model, claim.maturity)
    with open(out / "price.csv", "w") as fh:
        fh.write("claim_id,bn_price,se,closed_form,rn_price,gap,n_paths,seed\n")
        closed = "" if report.closed_form is None else _fmt(report.closed_form)
        rn = "" if report.rn_price is None else _fmt(report.rn_price)
        fh.write(
            f"{claim.label},{_fmt(report.bn_price)},{_fmt(report.se)},"
            f"{closed},{rn},{_fmt(comparison.gap)},{report.n_paths},{report.seed}\n"
        )
    return []


def _run_hedge(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    claim = build_claim(cfg.block("claim"))
    step, _ = grid_spec(cfg.block("grid"), claim.maturity)
    grid = TimeGrid.regular(claim.maturity, step)
    paths = simulate_sgop_exact(cfg.model, grid, cfg.n_paths, cfg.seed, threads=threads)
    events = None
    if claim.kind == "binary_event":
        lob_cfg = LobConfig(
            n_claims=1,
            claim_maturity=claim.maturity,
            event_model=WrightFisher(
                vol=float(cfg.block("claim").get("event_vol", 1.0)),
                p0=claim.event_prob,
            ),
            initial_working_capital=2.0,
            critical_level=1.0,
            refinancing_ratio=1.5,
        )
        events = simulate_event_martingales(lob_cfg, grid, cfg.n_paths, cfg.seed).p[:, 0, :]
    decomp = bnrm_strategy_path(cfg.model, claim, paths, events=events)
    delivery = delivery_check(decomp, claim, paths)
    orth = orthogonality_check(decomp, paths)
    checkpoints = _on_grid(grid, [claim.maturity / 4, claim.maturity / 2, claim.maturity])
    with open(out / "hedge_checkpoints.csv", "w") as fh:
        fh.write("t,mean_price_hat,mean_eta,cov_mean,cov_se\n")
        for t in checkpoints:
            i = grid.index_of(t)
            fh.write(
                f"{_fmt(t)},{_fmt(np.mean(decomp.price_hat[:, i]))},"
                f"{_fmt(np.mean(decomp.eta[:, i]))},{_fmt(orth.mean)},{_fmt(orth.se)}\n"
            )
    edges = np.histogram_bin_edges(delivery.terminal_error, bins=40)
    counts, _ = np.histogram(delivery.terminal_error, bins=edges)
    with open(out / "hedge_terminal_errors.csv", "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for left, right, count in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{_fmt(left)},{_fmt(right)},{int(count)}\n")
    return []


def _run_lob_sim(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    lob_cfg = build_lob(cfg.block("lob"))
    step, _ = grid_spec(cfg.block("grid"), lob_cfg.claim_maturity)
    grid = TimeGrid.regular(lob_cfg.claim_maturity, step)
    paths = simulate_sgop_exact(cfg.model, grid, cfg.n_paths, cfg.seed, threads=threads)
    events = simulate_event_martingales(lob_cfg, grid, cfg.n_paths, cfg.seed)
    traj = working_capital_path(lob_cfg, cfg.model, paths, events)
    with open(out / "refinancing_schedule.csv", "w") as fh:
        fh.write("path,k,rho_k\n")
        for i, rho in enumerate(traj.rho_times):
            for k, t in enumerate(rho, start=1):
                fh.write(f"{i},{k},{_fmt(t)}\n")
    with open(out / "lob_summary.csv", "w") as fh:
        fh.write("mean_c_prime_T,mean_refinancing_T,mean_liability_T,decomposition_gap\n")
        fh.write(
            f"{_fmt(np.mean(traj.c_prime[:, -1]))},"
            f"{_fmt(np.mean(traj.refinancing[:, -1]))},"
            f"{_fmt(np.mean(traj.liability_fair[:, -1]))},"
            f"{_fmt(traj.decomposition_gap)}\n"
        )
    return []


def _run_refinance_cost(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    lob_cfg = build_lob(cfg.block("lob"))
    gbm = build_gbm(cfg.block("gbm"))
    block = cfg.block("gbm")
    horizon = float(block.get("horizon", lob_cfg.claim_maturity))
    k_max = int(block.get("k_max", 10))
    report = expected_refinancing_cost(lob_cfg, gbm, horizon, k_max)
    mc_mean = mc_se = ""
    if block.get("mc", False):
        step = float(block.get("step", 1e-3))
        r_T = simulate_gbm_refinancing(
            lob_cfg, gbm, horizon, cfg.n_paths, cfg.seed, step
        )
        mc_mean = _fmt(np.mean(r_T))
        mc_se = _fmt(np.std(r_T, ddof=1) / np.sqrt(r_T.size))
    with open(out / "refinance_cost.csv", "w") as fh:
        fh.write("cost,truncation_bound,mc_mean,mc_se,k_max\n")
        fh.write(
            f"{_fmt(report.cost)},{_fmt(report.truncation_bound)},{mc_mean},{mc_se},{k_max}\n"
        )
        fh.write("\n")
        fh.write("k,p_rho_k_le_T\n")
        for k, p in enumerate(report.per_k, start=1):
            fh.write(f"{k},{_fmt(p)}\n")
    return list(report.warnings)


def _run_diversify(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    lob_cfg = build_lob(cfg.block("lob"))
    step, _ = grid_spec(cfg.block("grid"), lob_cfg.claim_maturity)
    grid = TimeGrid.regular(lob_cfg.claim_maturity, step)
    m_values = cfg.block("diversify").get("m_values", [1, 2, 4, 8])
    rows = diversification_experiment(
        cfg.model, lob_cfg, m_values, cfg.n_paths, cfg.seed, grid=grid
    )
    with open(out / "diversification.csv", "w") as fh:
        fh.write("m,qv_mean,qv_se\n")
        for m, qv_mean, qv_se in rows:
            fh.write(f"{m},{_fmt(qv_mean)},{_fmt(qv_se)}\n")
    return []


def _run_ifa_check(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    block = cfg.block("ifa")
    contract = build_contract(block)
    bound, se = premium_bound(cfg.model, contract, cfg.n_paths, cfg.seed)
    report = deflated_value_check(
        cfg.model,
        contract,
        allocation=float(block.get("allocation", 1.0)),
        hedge_initial=float(block.get("hedge_initial", 0.0)),
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        strategy=block.get("strategy", "savings"),
    )
    probe = arbitrage_probe(
        cfg.model, contract, float(block.get("multiplier", 1.0)), cfg.n_paths, cfg.seed
    )
    with open(out / "ifa_report.csv", "w") as fh:
        fh.write("bound,se,premium,compliant,deflated_value,deflated_se,violation_found\n")
        fh.write(
            f"{_fmt(bound)},{_fmt(se)},{_fmt(contract.premium)},"
            f"{int(report.compliant)},{_fmt(report.deflated_value)},"
            f"{_fmt(report.deflated_se)},{int(probe.violation_found)}\n"
        )
    return []


def _run_rn_compare(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    maturities = cfg.block("rn").get("maturities", [10.0, 30.0])
    with open(out / "rn_comparison.csv", "w") as fh:
        fh.write("T,fair,risk_neutral,gap\n")
        for T in maturities:
            row = rn_comparison(cfg.model, float(T))
            fh.write(
                f"{_fmt(T)},{_fmt(row.fair)},{_fmt(row.risk_neutral)},{_fmt(row.gap)}\n"
            )
    return []


_RUNNERS = {
    "simulate": _run_simulate,
    "price": _run_price,
    "hedge": _run_hedge,
    "lob-sim": _run_lob_sim,
    "refinance-cost": _run_refinance_cost,
    "diversify": _run_diversify,
    "ifa-check": _run_ifa_check,
    "rn-compare": _run_rn_compare,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bngop",
        description="Benchmark-neutral pricing, hedging and LOB simulation",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.experiment)
    except ConfigError as exc:
        errors = getattr(exc, "errors", [{"field": "", "message": str(exc)}])
        json.dump({"errors": errors}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        warnings = _RUNNERS[args.experiment](cfg, out, args.threads)
    except BngopError as exc:
        json.dump({"errors": [{"field": "", "message": str(exc)}]}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    _write_manifest(out, cfg, warnings)
    if args.verbose:
        digest = params_hash(cfg.model, TimeGrid(np.array([0.0, cfg.model.horizon])))
        print(f"{args.experiment}: done (params {digest.hex()[:12]}, seed {cfg.seed})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
