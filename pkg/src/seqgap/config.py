"""JSON experiment configs.

Parsing is strict: unknown keys anywhere in the document are errors, as are
missing required sections.  This is deliberate; a typo like "replciations"
silently falling back to a default would poison a study.

``resolved_config_dict`` echoes the parsed config with static defaults
filled in (signal set, rule variant, multiplicity budget, output format).
Parsing that echo reconstructs the identical experiment, and the echo is
embedded in every report so a result file alone suffices to rerun it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .model import ModelParams
from .montecarlo import (
    ExperimentSpec,
    GapRuleSpec,
    GiRuleSpec,
    MaxGapRuleSpec,
    RuleSpec,
)
from .rules import MAXGAP_VARIANTS

__all__ = [
    "ConfigError",
    "ParsedConfig",
    "c1_for_target_metric",
    "load_config",
    "parse_config_dict",
    "resolved_config_dict",
    "rule_dict",
]

# Error-metric name -> multiplicity budget C1.  Proportion- and family-wise
# metrics are bounded by the selection-error budget itself (C1 = 1); the
# expected number of false rejections needs the per-stream budget scaled
# back up by K.
_PER_UNIT_METRICS = ("fwer", "fdr", "fnr", "pfdr", "pfnr")

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid or unparseable experiment config."""


def c1_for_target_metric(metric: str, K: int) -> float:
    if metric in _PER_UNIT_METRICS:
        return 1.0
    if metric == "pfer":
        return float(K)
    raise ConfigError(
        f"unknown target_metric {metric!r}; expected one of "
        f"{', '.join(_PER_UNIT_METRICS + ('pfer',))}"
    )


@dataclass(frozen=True)
class ParsedConfig:
    spec: ExperimentSpec
    out_path: str | None
    out_format: str
    sweep_kind: str | None  # "alpha" | "rho" | None
    sweep_grid: tuple[float, ...] | None


def _check_keys(section: dict, allowed: set[str], context: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in {context}")
    return section[key]


def _as_section(value, context: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{context} must be an object, got {type(value).__name__}")
    return value


def _as_int(value, context: str) -> int:
    # bool is an int subclass; a config saying "K": true is a mistake
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context} must be an integer, got {value!r}")
    return value


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context} must be a number, got {value!r}")
    return float(value)


def _as_bool(value, context: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{context} must be true or false, got {value!r}")
    return value


def _as_str(value, context: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{context} must be a string, got {value!r}")
    return value


def _parse_c1(rule: dict, K: int, context: str) -> float:
    has_adjust = "c1_adjust" in rule
    has_metric = "target_metric" in rule
    if has_adjust and has_metric:
        raise ConfigError(f"{context}: c1_adjust and target_metric are mutually exclusive")
    if has_metric:
        return c1_for_target_metric(_as_str(rule["target_metric"], f"{context}.target_metric"), K)
    if has_adjust:
        return _as_float(rule["c1_adjust"], f"{context}.c1_adjust")
    return 1.0


def _parse_rule(rule: dict, K: int) -> RuleSpec:
    kind = _as_str(_require(rule, "kind", "rule"), "rule.kind")
    if kind == "gap":
        _check_keys(rule, {"kind", "m", "c1_adjust", "target_metric"}, "rule")
        return GapRuleSpec(
            m=_as_int(_require(rule, "m", "rule"), "rule.m"),
            c1_adjust=_parse_c1(rule, K, "rule"),
        )
    if kind == "maxgap":
        _check_keys(rule, {"kind", "l", "u", "variant", "c1_adjust", "target_metric"}, "rule")
        variant = _as_str(rule.get("variant", MAXGAP_VARIANTS[0]), "rule.variant")
        if variant not in MAXGAP_VARIANTS:
            raise ConfigError(
                f"rule.variant must be one of {', '.join(MAXGAP_VARIANTS)}, got {variant!r}"
            )
        return MaxGapRuleSpec(
            l=_as_int(_require(rule, "l", "rule"), "rule.l"),
            u=_as_int(_require(rule, "u", "rule"), "rule.u"),
            variant=variant,
            c1_adjust=_parse_c1(rule, K, "rule"),
        )
    if kind == "gi":
        _check_keys(rule, {"kind", "l", "u", "experimental_correlated"}, "rule")
        return GiRuleSpec(
            l=_as_int(_require(rule, "l", "rule"), "rule.l"),
            u=_as_int(_require(rule, "u", "rule"), "rule.u"),
            experimental_correlated=_as_bool(
                rule.get("experimental_correlated", False), "rule.experimental_correlated"
            ),
        )
    raise ConfigError(f"rule.kind must be 'gap', 'maxgap' or 'gi', got {kind!r}")


def _parse_signal_set(model: dict, rule: RuleSpec) -> frozenset[int]:
    if "signal_set" in model:
        raw = model["signal_set"]
        if not isinstance(raw, list):
            raise ConfigError(f"model.signal_set must be a list of stream indices, got {raw!r}")
        return frozenset(_as_int(v, "model.signal_set entry") for v in raw)
    if isinstance(rule, GapRuleSpec):
        # canonical choice; exchangeability makes the labels immaterial
        return frozenset(range(1, rule.m + 1))
    raise ConfigError(f"model.signal_set is required for rule kind {rule.kind!r}")


def parse_config_dict(doc: dict) -> ParsedConfig:
    doc = _as_section(doc, "config")
    _check_keys(doc, {"model", "rule", "targets", "mc", "output", "sweep"}, "config")

    model = _as_section(_require(doc, "model", "config"), "model")
    _check_keys(model, {"K", "rho", "mu", "signal_set"}, "model")
    K = _as_int(_require(model, "K", "model"), "model.K")

    rule = _parse_rule(_as_section(_require(doc, "rule", "config"), "rule"), K)

    targets = _as_section(_require(doc, "targets", "config"), "targets")
    _check_keys(targets, {"alpha", "beta"}, "targets")
    alpha = _as_float(_require(targets, "alpha", "targets"), "targets.alpha")
    beta = _as_float(_require(targets, "beta", "targets"), "targets.beta")

    mc = _as_section(_require(doc, "mc", "config"), "mc")
    _check_keys(mc, {"replications", "master_seed", "horizon_cap"}, "mc")
    horizon_cap = None
    if "horizon_cap" in mc:
        horizon_cap = _as_int(mc["horizon_cap"], "mc.horizon_cap")

    out_path = None
    out_format = "csv"
    if "output" in doc:
        output = _as_section(doc["output"], "output")
        _check_keys(output, {"path", "format"}, "output")
        if "path" in output:
            out_path = _as_str(output["path"], "output.path")
        if "format" in output:
            out_format = _as_str(output["format"], "output.format")
            if out_format not in FORMATS:
                raise ConfigError(f"output.format must be 'csv' or 'json', got {out_format!r}")

    sweep_kind = None
    sweep_grid = None
    if "sweep" in doc:
        sweep = _as_section(doc["sweep"], "sweep")
        _check_keys(sweep, {"alpha_grid", "rho_grid"}, "sweep")
        if ("alpha_grid" in sweep) == ("rho_grid" in sweep):
            raise ConfigError("sweep requires exactly one of alpha_grid, rho_grid")
        key = "alpha_grid" if "alpha_grid" in sweep else "rho_grid"
        raw = sweep[key]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"sweep.{key} must be a nonempty list of numbers")
        sweep_kind = "alpha" if key == "alpha_grid" else "rho"
        sweep_grid = tuple(_as_float(v, f"sweep.{key} entry") for v in raw)

    try:
        params = ModelParams(
            K=K,
            rho=_as_float(_require(model, "rho", "model"), "model.rho"),
            mu=_as_float(_require(model, "mu", "model"), "model.mu"),
            signal_set=_parse_signal_set(model, rule),
        )
        spec = ExperimentSpec(
            params=params,
            rule=rule,
            alpha=alpha,
            beta=beta,
            replications=_as_int(_require(mc, "replications", "mc"), "mc.replications"),
            master_seed=_as_int(_require(mc, "master_seed", "mc"), "mc.master_seed"),
            horizon_cap=horizon_cap,
        )
    except ValueError as exc:  # reject with the model/rule diagnostic attached
        raise ConfigError(str(exc)) from exc
    return ParsedConfig(
        spec=spec,
        out_path=out_path,
        out_format=out_format,
        sweep_kind=sweep_kind,
        sweep_grid=sweep_grid,
    )


def load_config(path: str) -> ParsedConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config_dict(doc)


def rule_dict(rule: RuleSpec) -> dict:
    """Canonical JSON-compatible form of a rule spec."""
    if isinstance(rule, GapRuleSpec):
        return {"kind": "gap", "m": rule.m, "c1_adjust": rule.c1_adjust}
    if isinstance(rule, MaxGapRuleSpec):
        return {
            "kind": "maxgap",
            "l": rule.l,
            "u": rule.u,
            "variant": rule.variant,
            "c1_adjust": rule.c1_adjust,
        }
    if isinstance(rule, GiRuleSpec):
        return {
            "kind": "gi",
            "l": rule.l,
            "u": rule.u,
            "experimental_correlated": rule.experimental_correlated,
        }
    raise TypeError(f"unknown rule spec {rule!r}")


def resolved_config_dict(parsed: ParsedConfig) -> dict:
    """Canonical dict equivalent to the parsed config; parses back losslessly."""
    spec = parsed.spec
    model = {
        "K": spec.params.K,
        "rho": spec.params.rho,
        "mu": spec.params.mu,
        "signal_set": sorted(spec.params.signal_set),
    }
    mc = {"replications": spec.replications, "master_seed": spec.master_seed}
    if spec.horizon_cap is not None:
        mc["horizon_cap"] = spec.horizon_cap
    doc = {
        "model": model,
        "rule": rule_dict(spec.rule),
        "targets": {"alpha": spec.alpha, "beta": spec.beta},
        "mc": mc,
    }
    output = {"format": parsed.out_format}
    if parsed.out_path is not None:
        output = {"path": parsed.out_path, "format": parsed.out_format}
    doc["output"] = output
    if parsed.sweep_kind is not None:
        assert parsed.sweep_grid is not None
        doc["sweep"] = {f"{parsed.sweep_kind}_grid": list(parsed.sweep_grid)}
    return doc
