"""Regenerate tests/golden/golden.json.

Every derived reference number used by the test suite is produced here from
an independent route (closed form, high-precision quadrature, or a large
confirmation Monte Carlo) and frozen.  Rerun after any change to the RNG
layout or the analytic formulas, and review the diff.
"""

import json
from pathlib import Path

import numpy as np

from bngop import TimeGrid, reference_params
from bngop.hedging import delta_bump_reprice
from bngop.lob import (
    GbmParams,
    LobConfig,
    WrightFisher,
    expected_refinancing_cost,
    gbm_first_passage_cdf,
    simulate_gbm_refinancing,
)
from bngop.model import transformed_time_increment
from bngop.paths import simulate_sgop_exact
from bngop.pricing import zcb_fair_closed_form, zcb_price_hat


def main() -> None:
    params = reference_params()
    golden = {}

    golden["clock_increment"] = {
        "T10": transformed_time_increment(params, 0.0, 10.0),
        "T30": transformed_time_increment(params, 0.0, 30.0),
    }
    golden["zcb_fair"] = {
        "T10": zcb_fair_closed_form(params, 0.0, 1.0, 10.0),
        "T30": zcb_fair_closed_form(params, 0.0, 1.0, 30.0),
    }

    # confirmation MC for the closed forms (exact transition sampler)
    conf = {"n_paths": 1_000_000, "seed": 101}
    for tag, T in (("T10", 10.0), ("T30", 30.0)):
        ps = simulate_sgop_exact(
            params, TimeGrid(np.array([0.0, T])), conf["n_paths"], conf["seed"]
        )
        v = 1.0 / ps.s_terminal
        conf[tag] = {
            "mean": float(np.mean(v)),
            "se": float(np.std(v, ddof=1) / np.sqrt(v.size)),
        }
    golden["zcb_fair_mc_confirmation"] = conf

    # analytic d/ds of the ZCB price-hat at (t=0, s=1, T=30):
    # d/ds[(1-e^{-cs})/s] = (e^{-cs}(cs+1)-1)/s^2 with c = 1/(2*Delta(0,30))
    c = 1.0 / (2.0 * golden["clock_increment"]["T30"])
    golden["zcb_hat_delta_t0_s1_T30"] = {
        "analytic": float((np.exp(-c) * (c + 1.0) - 1.0)),
        "bump": delta_bump_reprice(
            lambda t, s: zcb_price_hat(params, t, s, 30.0), 0.0, 1.0
        ),
    }

    golden["gbm_first_passage"] = {
        "c0_2_d1_nu0_sig05_T4": gbm_first_passage_cdf(2.0, 1.0, 0.0, 0.5, 4.0),
        "c0_1p5_d1_nu0_sig05_T4": gbm_first_passage_cdf(1.5, 1.0, 0.0, 0.5, 4.0),
    }

    cfg = LobConfig(
        n_claims=1,
        claim_maturity=4.0,
        event_model=WrightFisher(vol=1.0, p0=0.5),
        initial_working_capital=2.0,
        critical_level=1.0,
        refinancing_ratio=1.5,
    )
    gbm = GbmParams(log_drift=0.0, vol=0.5)
    cost = expected_refinancing_cost(cfg, gbm, 4.0, k_max=12, mesh_points=16000)
    r_T = simulate_gbm_refinancing(cfg, gbm, 4.0, 100_000, 909, step=1e-3)
    golden["refinancing_cost"] = {
        "analytic": cost.cost,
        "per_k_first": cost.per_k[0],
        "first_term_lower_bound": 0.5 * golden["gbm_first_passage"]["c0_2_d1_nu0_sig05_T4"],
        "truncation_bound": cost.truncation_bound,
        "mc_confirmation": {
            "n_paths": 100_000,
            "seed": 909,
            "step": 1e-3,
            "mean": float(np.mean(r_T)),
            "se": float(np.std(r_T, ddof=1) / np.sqrt(r_T.size)),
        },
    }

    out = Path(__file__).resolve().parent.parent / "tests" / "golden" / "golden.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(golden, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
