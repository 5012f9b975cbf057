"""TOML experiment configuration: parsing, validation, object construction.

Validation failures collect into a machine-readable list of
``{"field": ..., "message": ...}`` records attached to the raised
ConfigError, so the CLI can report every problem at once.  The seed is
mandatory: no experiment ever falls back to wall-clock seeding.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ifa import InsuranceContractSpec, event_contract, fixed_contract, numeraire_contract
from .lob import Bernoulli, GbmParams, LobConfig, WrightFisher
from .model import ModelParams, PiecewiseConstant
from .pricing import (
    Claim,
    binary_event_claim,
    capped_claim,
    digital_claim,
    numeraire_claim,
    zcb_claim,
)

EXPERIMENTS = (
    "simulate",
    "price",
    "hedge",
    "lob-sim",
    "refinance-cost",
    "diversify",
    "ifa-check",
    "rn-compare",
)

#: Sections each experiment requires beyond [run] and [model].
_REQUIRED_BLOCKS = {
    "simulate": ("grid",),
    "price": ("claim",),
    "hedge": ("claim", "grid"),
    "lob-sim": ("lob", "grid"),
    "refinance-cost": ("lob", "gbm"),
    "diversify": ("lob", "diversify", "grid"),
    "ifa-check": ("ifa",),
    "rn-compare": ("rn",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelParams
    seed: int
    n_paths: int
    raw: dict = field(repr=False)

    def block(self, name: str) -> dict:
        return self.raw.get(name, {})


class _Collector:
    def __init__(self):
        self.errors: list[dict] = []

    def add(self, field_name: str, message: str) -> None:
        self.errors.append({"field": field_name, "message": message})

    def require(self, table: dict, section: str, key: str, types, default=None):
        if key not in table:
            if default is not None:
                return default
            self.add(f"{section}.{key}", "missing required field")
            return None
        value = table[key]
        if not isinstance(value, types):
            self.add(f"{section}.{key}", f"expected {types}, got {type(value).__name__}")
            return None
        return value

    def raise_if_any(self) -> None:
        if self.errors:
            detail = "; ".join(f"{e['field']}: {e['message']}" for e in self.errors)
            err = ConfigError(f"invalid configuration: {detail}")
            err.errors = self.errors
            raise err


_NUM = (int, float)


def _parse_model(raw: dict, col: _Collector) -> ModelParams | None:
    m = raw.get("model")
    if not isinstance(m, dict):
        col.add("model", "missing [model] section")
        return None
    activity = col.require(m, "model", "activity", _NUM)
    tau0 = col.require(m, "model", "initial_activity_time", _NUM)
    s0 = col.require(m, "model", "s_star_0", _NUM)
    horizon = col.require(m, "model", "horizon", _NUM, default=30.0)
    lam: object
    if "net_risk_adjusted_return" in m:
        block = m["net_risk_adjusted_return"]
        if (
            not isinstance(block, dict)
            or "breakpoints" not in block
            or "values" not in block
        ):
            col.add(
                "model.net_risk_adjusted_return",
                "needs 'breakpoints' and 'values' arrays",
            )
            return None
        lam = PiecewiseConstant(
            breakpoints=tuple(float(x) for x in block["breakpoints"]),
            values=tuple(float(x) for x in block["values"]),
        )
    else:
        lam = col.require(m, "model", "lambda_star", _NUM, default=0.0)
    if col.errors:
        return None
    try:
        return ModelParams(
            activity=float(activity),
            initial_activity_time=float(tau0),
            s_star_0=float(s0),
            net_risk_adjusted_return=lam,
            horizon=float(horizon),
        )
    except (ValueError, ConfigError) as exc:
        col.add("model", str(exc))
        return None


def load_config(path, experiment: str) -> ExperimentConfig:
    """Parse and validate a TOML config for the given experiment."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw = tomllib.loads(Path(path).read_text())
    col = _Collector()
    run = raw.get("run")
    if not isinstance(run, dict):
        col.add("run", "missing [run] section")
        run = {}
    seed = col.require(run, "run", "seed", int)
    n_paths = col.require(run, "run", "n_paths", int, default=10_000)
    model = _parse_model(raw, col)
    for block in _REQUIRED_BLOCKS[experiment]:
        if block not in raw:
            col.add(block, f"missing [{block}] section for experiment {experiment}")
    col.raise_if_any()
    return ExperimentConfig(
        experiment=experiment,
        model=model,
        seed=int(seed),
        n_paths=int(n_paths),
        raw=raw,
    )


def build_claim(block: dict) -> Claim:
    col = _Collector()
    kind = col.require(block, "claim", "type", str)
    maturity = col.require(block, "claim", "maturity", _NUM)
    col.raise_if_any()
    maturity = float(maturity)
    if kind == "zcb":
        return zcb_claim(maturity)
    if kind == "numeraire":
        return numeraire_claim(maturity)
    if kind == "digital":
        strike = col.require(block, "claim", "strike", _NUM)
        col.raise_if_any()
        return digital_claim(maturity, float(strike))
    if kind == "capped":
        cap = col.require(block, "claim", "cap", _NUM)
        col.raise_if_any()
        return capped_claim(maturity, float(cap))
    if kind == "binary_event":
        prob = col.require(block, "claim", "event_prob", _NUM)
        col.raise_if_any()
        return binary_event_claim(maturity, float(prob))
    col.add("claim.type", f"unknown claim type {kind!r}")
    col.raise_if_any()
    raise AssertionError("unreachable")


def build_lob(block: dict) -> LobConfig:
    col = _Collector()
    n_claims = col.require(block, "lob", "n_claims", int)
    maturity = col.require(block, "lob", "claim_maturity", _NUM)
    model_name = col.require(block, "lob", "event_model", str, default="wright_fisher")
    c0 = col.require(block, "lob", "initial_working_capital", _NUM)
    d = col.require(block, "lob", "critical_level", _NUM)
    mu = col.require(block, "lob", "refinancing_ratio", _NUM)
    col.raise_if_any()
    if model_name == "wright_fisher":
        vol = col.require(block, "lob", "event_vol", _NUM)
        p0 = col.require(block, "lob", "p0", _NUM)
        col.raise_if_any()
        event_model = WrightFisher(vol=float(vol), p0=float(p0))
    elif model_name == "bernoulli":
        prob = col.require(block, "lob", "event_prob", _NUM)
        col.raise_if_any()
        event_model = Bernoulli(prob=float(prob))
    else:
        col.add("lob.event_model", f"unknown event model {model_name!r}")
        col.raise_if_any()
        raise AssertionError("unreachable")
    return LobConfig(
        n_claims=int(n_claims),
        claim_maturity=float(maturity),
        event_model=event_model,
        initial_working_capital=float(c0),
        critical_level=float(d),
        refinancing_ratio=float(mu),
    )


def build_gbm(block: dict) -> GbmParams:
    col = _Collector()
    nu = col.require(block, "gbm", "log_drift", _NUM)
    vol = col.require(block, "gbm", "vol", _NUM)
    col.raise_if_any()
    return GbmParams(log_drift=float(nu), vol=float(vol))


def build_contract(block: dict) -> InsuranceContractSpec:
    col = _Collector()
    kind = col.require(block, "ifa", "type", str)
    maturity = col.require(block, "ifa", "maturity", _NUM)
    premium = col.require(block, "ifa", "premium", _NUM, default=0.0)
    col.raise_if_any()
    maturity, premium = float(maturity), float(premium)
    if kind == "event":
        prob = col.require(block, "ifa", "event_prob", _NUM)
        col.raise_if_any()
        return event_contract(maturity, float(prob), premium)
    if kind == "fixed":
        amount = col.require(block, "ifa", "amount", _NUM)
        col.raise_if_any()
        return fixed_contract(maturity, float(amount), premium)
    if kind == "numeraire":
        return numeraire_contract(maturity, premium)
    col.add("ifa.type", f"unknown contract type {kind!r}")
    col.raise_if_any()
    raise AssertionError("unreachable")


def grid_spec(block: dict, default_horizon: float) -> tuple[float, float]:
    """(step, horizon) from a [grid] section with a model-level default."""
    col = _Collector()
    step = col.require(block, "grid", "step", _NUM)
    horizon = col.require(block, "grid", "horizon", _NUM, default=default_horizon)
    col.raise_if_any()
    if not float(step) > 0 or not float(horizon) > 0:
        raise ConfigError("grid step and horizon must be > 0")
    if not np.isfinite(step) or not np.isfinite(horizon):
        raise ConfigError("grid step and horizon must be finite")
    return float(step), float(horizon)
