"""Structured key-value configuration for experiments.

Format: UTF-8 text, one `section.key = value` assignment per line.  Blank
lines and lines starting with `#` are ignored.  Keys are grouped by dotted
section prefix:

    network.*   physical parameters (densities in per-km2 config units)
    policy.*    numeric evaluation knobs
    sim.*       slot-level simulator knobs
    sweep.*     optional parameter sweep (absent -> single-point runs)

Unknown keys, duplicate keys, and malformed values are rejected with the
offending line number.  When `sweep.parameter` names a network field, that
field must NOT also appear in the network section; the template is filled
per sweep value.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .core import (ErlangIndexMode, NetworkParams, NumericPolicy,
                   per_km2_to_per_m2, per_m2_to_per_km2, validate)
from .mcsim import SimConfig

SWEEPABLE = ("lambda_b", "lambda_u", "e_th")
METRICS = ("p_tr", "t_avg", "t_total", "mean_users", "sustainable_ratio")
RUN_MODES = ("analytic", "simulate", "both")


class ConfigError(ValueError):
    """Malformed or contradictory configuration; carries file context."""

    def __init__(self, message: str, path: str = "?", line: Optional[int] = None):
        loc = f"{path}:{line}" if line is not None else path
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional parameter sweep: evaluate `metrics` at each value of
    `parameter` under the given run mode(s).  Values carry config units
    (per-km2 for densities, joules for e_th)."""

    parameter: str
    values: Tuple[float, ...]
    metrics: Tuple[str, ...]
    mode: str = "both"

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(
                f"sweep.parameter must be one of {SWEEPABLE}, got "
                f"{self.parameter!r}")
        if not self.values:
            raise ValueError("sweep.values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep.values must be strictly increasing")
        if not self.metrics:
            raise ValueError("sweep.metrics must be non-empty")
        for m in self.metrics:
            if m not in METRICS:
                raise ValueError(f"unknown sweep metric {m!r}")
        if self.mode not in RUN_MODES:
            raise ValueError(f"sweep.mode must be one of {RUN_MODES}")
        if "sustainable_ratio" in self.metrics:
            if self.parameter != "lambda_b":
                raise ValueError(
                    "sustainable_ratio sweeps over lambda_b only")
            if self.mode != "analytic":
                raise ValueError(
                    "sustainable_ratio has no simulated estimator; use "
                    "sweep.mode = analytic")


_BOOL = {"true": True, "false": False}

# key -> (parser, required) per section; parsers raise ValueError
_NETWORK_KEYS = {
    "lambda_b_per_km2": float,
    "lambda_u_per_km2": float,
    "p_s": float,
    "alpha": float,
    "a_eff": float,
    "e_th": float,
    "sigma2": float,
    "slot_seconds": float,
}
_POLICY_KEYS = {
    "quad_rel_tol": float,
    "series_tail_eps": float,
    "n_max_cap": int,
    "k_max_cap": int,
    "erlang_index_mode": str,
    "eps_sat": float,
    "plateau_multiple": float,
}
_SIM_KEYS = {
    "region_side": float,
    "n_slots": int,
    "n_replications": int,
    "seed": int,
    "edge_mode": str,
    "guard_width": float,
    "measure_ring": float,
    "force_all_bs_transmit": bool,
    "warmup_rounds": int,
}
_SWEEP_KEYS = {
    "parameter": str,
    "values": tuple,
    "metrics": tuple,
    "mode": str,
}
_SECTIONS = {"network": _NETWORK_KEYS, "policy": _POLICY_KEYS,
             "sim": _SIM_KEYS, "sweep": _SWEEP_KEYS}


def _parse_value(kind, raw: str, key: str):
    if kind is bool:
        if raw.lower() not in _BOOL:
            raise ValueError(f"{key}: expected true/false, got {raw!r}")
        return _BOOL[raw.lower()]
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{key}: expected integer, got {raw!r}") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{key}: expected number, got {raw!r}") from None
    if kind is tuple:   # comma-separated list
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if not items:
            raise ValueError(f"{key}: empty list")
        return tuple(items)
    return raw


def parse_text(text: str, path: str = "?") -> Dict[str, Dict[str, object]]:
    """Parse config text into {section: {key: value}} with strict checks."""
    out: Dict[str, Dict[str, object]] = {s: {} for s in _SECTIONS}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'section.key = value': {stripped!r}",
                              path, lineno)
        lhs, rhs = stripped.split("=", 1)
        dotted, raw = lhs.strip(), rhs.strip()
        if "." not in dotted:
            raise ConfigError(f"key {dotted!r} lacks a section prefix",
                              path, lineno)
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section {section!r}", path, lineno)
        if key not in _SECTIONS[section]:
            raise ConfigError(f"unknown key {dotted!r}", path, lineno)
        if key in out[section]:
            raise ConfigError(f"duplicate key {dotted!r}", path, lineno)
        try:
            out[section][key] = _parse_value(_SECTIONS[section][key], raw,
                                             dotted)
        except ValueError as exc:
            raise ConfigError(str(exc), path, lineno) from None
    return out


def _build_sweep(sweep_raw: Dict[str, object], path: str) -> Optional[SweepSpec]:
    if not sweep_raw:
        return None
    missing = [k for k in ("parameter", "values", "metrics") if k not in sweep_raw]
    if missing:
        raise ConfigError(f"sweep section missing {missing}", path)
    try:
        values = tuple(float(v) for v in sweep_raw["values"])
    except ValueError:
        raise ConfigError("sweep.values must be numbers", path) from None
    try:
        return SweepSpec(parameter=str(sweep_raw["parameter"]),
                         values=values,
                         metrics=tuple(sweep_raw["metrics"]),
                         mode=str(sweep_raw.get("mode", "both")))
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def load_config(path: str, overrides: Optional[Dict[str, str]] = None):
    """Read and validate a config file.

    overrides maps dotted keys (e.g. "network.lambda_b_per_km2") to raw
    string values; they take precedence over file contents.  Returns
    (NetworkParams, NumericPolicy, SimConfig, SweepSpec-or-None); the
    NetworkParams of a sweep run is the template with the swept field set
    to the first sweep value.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from None
    raw = parse_text(text, path)

    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            raise ConfigError(f"unknown override {dotted!r}", path)
        try:
            raw[section][key] = _parse_value(_SECTIONS[section][key],
                                             str(value), dotted)
        except ValueError as exc:
            raise ConfigError(f"override {exc}", path) from None

    sweep = _build_sweep(raw["sweep"], path)

    net = dict(raw["network"])
    if sweep is not None:
        swept_key = ("lambda_b_per_km2" if sweep.parameter == "lambda_b"
                     else "lambda_u_per_km2" if sweep.parameter == "lambda_u"
                     else "e_th")
        if swept_key in net:
            raise ConfigError(
                f"network.{swept_key} conflicts with sweep.parameter = "
                f"{sweep.parameter}; leave it out of the network section",
                path)
        net[swept_key] = sweep.values[0]
    for req in ("lambda_b_per_km2", "lambda_u_per_km2", "p_s", "alpha",
                "a_eff", "e_th"):
        if req not in net:
            raise ConfigError(f"missing required key network.{req}", path)

    params = NetworkParams(
        lambda_b=per_km2_to_per_m2(net["lambda_b_per_km2"]),
        lambda_u=per_km2_to_per_m2(net["lambda_u_per_km2"]),
        p_s=net["p_s"], alpha=net["alpha"], a_eff=net["a_eff"],
        e_th=net["e_th"], sigma2=net.get("sigma2", 0.0),
        slot_seconds=net.get("slot_seconds", 1.0))
    try:
        validate(params)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None

    pol = dict(raw["policy"])
    if "erlang_index_mode" in pol:
        try:
            pol["erlang_index_mode"] = ErlangIndexMode(pol["erlang_index_mode"])
        except ValueError:
            raise ConfigError(
                f"policy.erlang_index_mode must be one of "
                f"{[m.value for m in ErlangIndexMode]}", path) from None
    try:
        policy = NumericPolicy(**pol)
        sim = SimConfig(**raw["sim"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path) from None
    return params, policy, sim, sweep


def resolved_lines(params: NetworkParams, policy: NumericPolicy,
                   sim: SimConfig, sweep: Optional[SweepSpec]) -> list:
    """Flat `section.key=value` lines capturing the full effective config,
    suitable for a reproducibility preamble.  Densities in per-km2."""
    entries = {
        "network.lambda_b_per_km2": repr(per_m2_to_per_km2(params.lambda_b)),
        "network.lambda_u_per_km2": repr(per_m2_to_per_km2(params.lambda_u)),
        "network.p_s": repr(params.p_s),
        "network.alpha": repr(params.alpha),
        "network.a_eff": repr(params.a_eff),
        "network.e_th": repr(params.e_th),
        "network.sigma2": repr(params.sigma2),
        "network.slot_seconds": repr(params.slot_seconds),
        "policy.quad_rel_tol": repr(policy.quad_rel_tol),
        "policy.series_tail_eps": repr(policy.series_tail_eps),
        "policy.n_max_cap": str(policy.n_max_cap),
        "policy.k_max_cap": str(policy.k_max_cap),
        "policy.erlang_index_mode": policy.erlang_index_mode.value,
        "policy.eps_sat": repr(policy.eps_sat),
        "policy.plateau_multiple": repr(policy.plateau_multiple),
        "sim.region_side": repr(sim.region_side),
        "sim.n_slots": str(sim.n_slots),
        "sim.n_replications": str(sim.n_replications),
        "sim.seed": str(sim.seed),
        "sim.edge_mode": sim.edge_mode,
        "sim.guard_width": repr(sim.guard_width),
        "sim.measure_ring": repr(sim.measure_ring),
        "sim.force_all_bs_transmit": str(sim.force_all_bs_transmit).lower(),
        "sim.warmup_rounds": str(sim.warmup_rounds),
    }
    if sweep is not None:
        entries["sweep.parameter"] = sweep.parameter
        entries["sweep.values"] = ",".join(repr(v) for v in sweep.values)
        entries["sweep.metrics"] = ",".join(sweep.metrics)
        entries["sweep.mode"] = sweep.mode
    return [f"{k}={entries[k]}" for k in sorted(entries)]
