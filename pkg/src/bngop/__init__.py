"""Benchmark-neutral pricing, hedging and LOB simulation toolkit."""

from .model import (
    GopSolution,
    MarketCoefficients,
    ModelParams,
    PiecewiseConstant,
    TimeGrid,
    activity_time,
    reference_params,
    solve_gop_weights,
    transformed_time_increment,
    volatility_theta,
)
from .paths import PathSet, simulate_sgop_euler, simulate_sgop_exact
from .pricing import (
    Claim,
    PriceReport,
    bn_price_mc,
    real_world_price_mc,
    rn_comparison,
    zcb_claim,
    zcb_fair_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "Claim",
    "GopSolution",
    "MarketCoefficients",
    "ModelParams",
    "PathSet",
    "PiecewiseConstant",
    "PriceReport",
    "TimeGrid",
    "activity_time",
    "bn_price_mc",
    "real_world_price_mc",
    "reference_params",
    "rn_comparison",
    "zcb_claim",
    "zcb_fair_closed_form",
    "simulate_sgop_euler",
    "simulate_sgop_exact",
    "solve_gop_weights",
    "transformed_time_increment",
    "volatility_theta",
    "__version__",
]
