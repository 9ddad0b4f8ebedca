"""seqgap command line.

calibrate  print a rule's thresholds without simulating
simulate   run one experiment, write a one-row report (+ optional trial dump)
sweep      run the config's alpha or rho grid, one report row per point
sprt-asn   print Wald and asymptotic mean sample sizes for a two-boundary test

Reports carry a fixed 30-column schema (CSV, or a JSON mirror with a meta
object).  Every report embeds the tool version, generator id, master seed
and the resolved config, and contains no timestamps, so reruns are
bit-identical.  Exit codes: 0 ok, 1 usage or config error, 2 experiment
completed but unreliable (too many truncated trials), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import sys
from dataclasses import replace
from typing import Sequence, TextIO

from ._version import __version__
from .config import ConfigError, FORMATS, ParsedConfig, load_config, resolved_config_dict, rule_dict
from .metrics import confusion
from .montecarlo import (
    ExperimentSpec,
    ExperimentSummary,
    GENERATOR_ID,
    GapRuleSpec,
    GiRuleSpec,
    MaxGapRuleSpec,
    TrialResult,
    calibrated_rule,
    ratio_sweep,
    rho_sweep,
    run_experiment_with_trials,
)
from .rules import MAXGAP_VARIANTS, calibrate_maxgap
from .sprt import SprtConfig, asn_asymptotic, asn_wald

__all__ = ["SCHEMA", "build_parser", "experiment_id", "main", "summary_row"]

SCHEMA = [
    "experiment_id", "rule", "variant", "K", "m", "l", "u", "rho", "mu",
    "alpha", "beta", "c1_adjust", "replications", "horizon_cap", "master_seed",
    "generator_id", "mean_T", "se_T", "asymptote", "ratio", "pics_hat",
    "fwer1_hat", "fwer2_hat", "fdr_hat", "fnr_hat", "pfdr_hat", "pfnr_hat",
    "pfdr_defined", "truncation_count", "reliable",
]

TRIAL_DUMP_SCHEMA = ["trial_index", "stopping_time", "V", "W", "R", "truncated"]


def experiment_id(spec: ExperimentSpec) -> str:
    """Short content hash of everything that determines the trial stream."""
    doc = {
        "model": {
            "K": spec.params.K,
            "rho": spec.params.rho,
            "mu": spec.params.mu,
            "signal_set": sorted(spec.params.signal_set),
        },
        "rule": rule_dict(spec.rule),
        "targets": {"alpha": spec.alpha, "beta": spec.beta},
        "mc": {
            "replications": spec.replications,
            "master_seed": spec.master_seed,
            "horizon_cap": spec.resolved_horizon_cap(),
        },
        "generator_id": GENERATOR_ID,
    }
    digest = hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()
    return digest[:12]


def summary_row(spec: ExperimentSpec, summary: ExperimentSummary) -> dict:
    """One report row, keyed by SCHEMA; inapplicable fields are None."""
    rule = spec.rule
    met = summary.metrics
    return {
        "experiment_id": experiment_id(spec),
        "rule": rule.kind,
        "variant": rule.variant if isinstance(rule, MaxGapRuleSpec) else None,
        "K": spec.params.K,
        "m": rule.m if isinstance(rule, GapRuleSpec) else None,
        "l": rule.l if isinstance(rule, (MaxGapRuleSpec, GiRuleSpec)) else None,
        "u": rule.u if isinstance(rule, (MaxGapRuleSpec, GiRuleSpec)) else None,
        "rho": spec.params.rho,
        "mu": spec.params.mu,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "c1_adjust": rule.c1_adjust if isinstance(rule, (GapRuleSpec, MaxGapRuleSpec)) else None,
        "replications": spec.replications,
        "horizon_cap": spec.resolved_horizon_cap(),
        "master_seed": spec.master_seed,
        "generator_id": summary.generator_id,
        "mean_T": summary.mean_T,
        "se_T": summary.se_T,
        "asymptote": summary.asymptote,
        "ratio": summary.ratio,
        "pics_hat": met.pics.value,
        "fwer1_hat": met.fwer1.value,
        "fwer2_hat": met.fwer2.value,
        "fdr_hat": met.fdr.value,
        "fnr_hat": met.fnr.value,
        "pfdr_hat": met.pfdr.value,
        "pfnr_hat": met.pfnr.value,
        "pfdr_defined": met.pfdr.defined,
        "truncation_count": summary.truncation_count,
        "reliable": summary.reliable,
    }


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _meta_comment(config_doc: dict, master_seed: int) -> str:
    blob = json.dumps(config_doc, separators=(",", ":"), sort_keys=True)
    return (
        f"# seqgap {__version__} generator_id={GENERATOR_ID} "
        f"master_seed={master_seed} config={blob}"
    )


def write_report_csv(out: TextIO, rows: Sequence[dict], config_doc: dict, master_seed: int) -> None:
    out.write(_meta_comment(config_doc, master_seed) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SCHEMA)
    for row in rows:
        writer.writerow([_cell(row[col]) for col in SCHEMA])


def write_report_json(out: TextIO, rows: Sequence[dict], config_doc: dict, master_seed: int) -> None:
    doc = {
        "meta": {
            "tool": "seqgap",
            "version": __version__,
            "generator_id": GENERATOR_ID,
            "master_seed": master_seed,
            "config": config_doc,
        },
        "rows": [{col: row[col] for col in SCHEMA} for row in rows],
    }
    json.dump(doc, out, indent=2, sort_keys=False)
    out.write("\n")


def write_trial_dump(out: TextIO, spec: ExperimentSpec, trials: Sequence[TrialResult]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRIAL_DUMP_SCHEMA)
    for index, trial in enumerate(trials):
        counts = confusion(trial.rejected, spec.params.signal_set, spec.params.K)
        writer.writerow([
            index, trial.stopping_time, counts.V, counts.W, counts.R,
            _cell(trial.truncated),
        ])


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def _emit(parsed: ParsedConfig, rows: Sequence[dict]) -> None:
    config_doc = resolved_config_dict(parsed)
    # the destination is not part of the experiment; dropping it keeps
    # reports written to different paths byte-comparable
    config_doc.pop("output", None)
    seed = parsed.spec.master_seed
    with _open_out(parsed.out_path) as out:
        if parsed.out_format == "json":
            write_report_json(out, rows, config_doc, seed)
        else:
            write_report_csv(out, rows, config_doc, seed)


def _apply_overrides(parsed: ParsedConfig, args: argparse.Namespace) -> ParsedConfig:
    spec = parsed.spec
    spec_updates = {}
    if args.seed is not None:
        spec_updates["master_seed"] = args.seed
    if args.reps is not None:
        spec_updates["replications"] = args.reps
    if args.horizon is not None:
        spec_updates["horizon_cap"] = args.horizon
    if spec_updates:
        try:
            spec = replace(spec, **spec_updates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    updates = {"spec": spec}
    if args.out is not None:
        updates["out_path"] = args.out
    if args.format is not None:
        updates["out_format"] = args.format
    return replace(parsed, **updates)


def _print_calibration(spec: ExperimentSpec) -> None:
    rule = spec.rule
    p = spec.params
    print(f"rule = {rule.kind}")
    if isinstance(rule, GapRuleSpec):
        cfg = calibrated_rule(spec)
        print(f"c = {_cell(cfg.c)}")
        print(f"G = {_cell(cfg.G)}")
        return
    if isinstance(rule, MaxGapRuleSpec):
        # show both threshold variants so their scale difference is visible
        for variant in MAXGAP_VARIANTS:
            cfg = calibrate_maxgap(
                rule.l, rule.u, p.K, spec.alpha, spec.beta, p.rho, p.mu,
                rule.c1_adjust, variant,
            )
            print(f"variant {variant}: e(n) = {_cell(cfg.base)} + n * {_cell(cfg.slope)}")
        return
    cfg = calibrated_rule(spec)
    print(f"a = {_cell(cfg.a)}")
    print(f"b = {_cell(cfg.b)}")
    print(f"c = {_cell(cfg.c)}")
    print(f"d = {_cell(cfg.d)}")


def cmd_calibrate(args: argparse.Namespace) -> int:
    parsed = _apply_overrides(load_config(args.config), args)
    _print_calibration(parsed.spec)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    parsed = _apply_overrides(load_config(args.config), args)
    summary, trials = run_experiment_with_trials(parsed.spec, workers=args.workers)
    _emit(parsed, [summary_row(parsed.spec, summary)])
    if args.trial_dump is not None:
        with open(args.trial_dump, "w", encoding="utf-8", newline="") as fh:
            write_trial_dump(fh, parsed.spec, trials)
    return 0 if summary.reliable else 2


def cmd_sweep(args: argparse.Namespace) -> int:
    parsed = _apply_overrides(load_config(args.config), args)
    if parsed.sweep_kind is None:
        raise ConfigError("sweep command requires a sweep section (alpha_grid or rho_grid)")
    assert parsed.sweep_grid is not None
    if parsed.sweep_kind == "alpha":
        points = ratio_sweep(parsed.spec, parsed.sweep_grid, workers=args.workers)
    else:
        points = rho_sweep(parsed.spec, parsed.sweep_grid, workers=args.workers)
    rows = [summary_row(pt.spec, pt.summary) for pt in points]
    _emit(parsed, rows)
    return 0 if all(pt.summary.reliable for pt in points) else 2


def cmd_sprt_asn(args: argparse.Namespace) -> int:
    config = SprtConfig(
        theta0=args.theta0,
        theta1=args.theta1,
        sigma2=args.sigma2,
        gamma=args.gamma,
        delta=args.delta,
    )
    if config.delta == 0.0:
        print("asn_wald_h0 = N/A (delta = 0: the test never stops under H0)")
    else:
        print(f"asn_wald_h0 = {_cell(asn_wald(config, 'h0'))}")
    print(f"asn_wald_h1 = {_cell(asn_wald(config, 'h1'))}")
    print(f"asn_asymptotic = {_cell(asn_asymptotic(config))}")
    return 0


class _Parser(argparse.ArgumentParser):
    # route usage errors through the config-error exit code instead of argparse's 2
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqgap", description="Sequential multiple-testing simulators.")
    parser.add_argument("--version", action="version", version=f"seqgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=FORMATS, help="report format (default from config)")
        sp.add_argument("--seed", type=int, help="override mc.master_seed")
        sp.add_argument("--reps", type=int, help="override mc.replications")
        sp.add_argument("--horizon", type=int, help="override mc.horizon_cap")
        sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    sp = sub.add_parser("calibrate", help="print thresholds without simulating")
    add_common(sp)
    sp.set_defaults(fn=cmd_calibrate)

    sp = sub.add_parser("simulate", help="run one experiment and write a report row")
    add_common(sp)
    sp.add_argument("--trial-dump", help="also write per-trial results to this CSV")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("sweep", help="run the config's alpha or rho grid")
    add_common(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("sprt-asn", help="print SPRT mean sample size formulas")
    sp.add_argument("--theta0", type=float, required=True)
    sp.add_argument("--theta1", type=float, required=True)
    sp.add_argument("--sigma2", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=0.05)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.set_defaults(fn=cmd_sprt_asn)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
