"""Command-line interface.

Subcommands: ``ingest`` (validate a log and print stats), ``simulate``,
``fit``, ``resample``, and ``report`` (re-render plots from saved
profiles).  Every option can also come from a ``key = value`` config file
via ``--config``; explicit flags win.  Exit codes: 0 success, 1 usage
error, 2 input parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np
from scipy import linalg

from .covariates import write_covariate_trace
from .events import LogParseError, parse_log, window, write_log
from .fitter import FitConfig, fit_trace, result_table
from .likelihood import RiskSetPolicy, build_trace
from .manifest import build_manifest, write_manifest
from .report import read_profile_table, write_profile_plots
from .resampler import (
    ConfusionModel,
    estimate_confusion,
    profile_table,
    run_profile,
    summary_table,
)
from .simulator import SimConfig, SimulationOverflowError, simulate
from .validation import as_covariate_spec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3

_DAY = 86400.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_config_file(path) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{line_no}: expected 'key = value'")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    return values


def _resolve(args, config: dict, key: str, default, cast=None):
    """Flag > config file > built-in default."""
    value = getattr(args, key, None)
    if value is None and key in config:
        value = config[key]
        if cast is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
    if value is None:
        value = default
    return value


def _cast_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text) -> tuple:
    if text is None:
        return ()
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


def _window_bounds(log, window_days, window_start, window_end):
    if window_start is not None or window_end is not None:
        lo = float(window_start) if window_start is not None else float("-inf")
        hi = float(window_end) if window_end is not None else float("inf")
        return lo, hi
    if window_days is not None:
        if log.n_events == 0:
            return float("-inf"), float("inf")
        hi = float(log.times[-1])
        return hi - float(window_days) * _DAY, hi
    return float("-inf"), float("inf")


def _add_common(p):
    p.add_argument("--config", help="key = value config file; flags win")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--deterministic", action="store_const", const=True,
                   help="omit timestamps and durations from outputs")
    p.add_argument("--threads", type=int, help="worker parallelism cap")


def build_parser() -> _Parser:
    parser = _Parser(prog="coxstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate an event log and print stats")
    p.add_argument("log")
    p.add_argument("--out", help="stats file (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", help="generate a synthetic event log")
    _add_common(p)
    p.add_argument("--nodes", type=int)
    p.add_argument("--p-edge", type=float)
    p.add_argument("--p-reciprocal", type=float)
    p.add_argument("--covariates")
    p.add_argument("--beta-pos")
    p.add_argument("--beta-neg")
    p.add_argument("--baseline-pos", type=float)
    p.add_argument("--baseline-neg", type=float)
    p.add_argument("--neutral-rate", type=float)
    p.add_argument("--follow-rate", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit sentiment intensity models")
    _add_common(p)
    p.add_argument("log")
    p.add_argument("--covariates")
    p.add_argument("--sentiment", choices=["pos", "neg", "both", "positive", "negative"])
    p.add_argument("--window-days", type=float)
    p.add_argument("--window-start", type=float)
    p.add_argument("--window-end", type=float)
    p.add_argument("--risk-set", choices=["all_nodes", "ever_active"])
    p.add_argument("--standardize", action="store_const", const=True)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--confidence", type=float)
    p.add_argument("--covariate-trace", help="also export the pre-event covariate trace")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("resample", help="misclassification robustness profile")
    _add_common(p)
    p.add_argument("log")
    p.add_argument("--covariates")
    p.add_argument("--k", type=int, help="number of reclassified realizations")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--confusion", help="file with a 4x4 row-stochastic matrix")
    p.add_argument("--confusion-accuracy", type=float,
                   help="diagonal confusion preset with this keep probability")
    p.add_argument("--calibration", help="file of '<predicted> <true>' label pairs")
    p.add_argument("--smoothing", type=float)
    p.add_argument("--window-days", type=float)
    p.add_argument("--window-start", type=float)
    p.add_argument("--window-end", type=float)
    p.add_argument("--risk-set", choices=["all_nodes", "ever_active"])
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--confidence", type=float)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("report", help="re-render plots from saved profiles")
    _add_common(p)
    p.add_argument("--profile-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _out_dir(args, config) -> Path:
    out = _resolve(args, config, "out_dir", None)
    if out is None:
        raise UsageError("--out-dir is required")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ingest(args, config) -> int:
    log = parse_log(args.log)
    kinds = log.kind_counts()
    labels = log.label_counts()
    lines = [
        f"events = {log.n_events}",
        f"nodes = {log.n_nodes}",
        f"tweets = {kinds['TWEET']}",
        f"follows = {kinds['FOLLOW']}",
    ]
    for token in ("POS", "NEG", "NEU", "UNR"):
        lines.append(f"tweets_{token.lower()} = {labels[token]}")
    if log.n_events:
        lines.append(f"time_min = {float(log.times[0])!r}")
        lines.append(f"time_max = {float(log.times[-1])!r}")
    lines.append(f"duplicate_follows_dropped = {log.duplicate_follows}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args, config) -> int:
    started = time.monotonic()
    out_dir = _out_dir(args, config)
    deterministic = bool(_resolve(args, config, "deterministic", False, _cast_bool))
    spec = as_covariate_spec(_resolve(args, config, "covariates", "focal"))
    nodes = int(_resolve(args, config, "nodes", 0, int))
    if nodes <= 0:
        raise UsageError("--nodes must be a positive integer")
    sim_config = SimConfig(
        n_nodes=nodes,
        horizon=float(_resolve(args, config, "horizon", 100.0, float)),
        seed=int(_resolve(args, config, "seed", 0, int)),
        spec=spec,
        beta_pos=_parse_floats(_resolve(args, config, "beta_pos", None)),
        beta_neg=_parse_floats(_resolve(args, config, "beta_neg", None)),
        baseline_pos=float(_resolve(args, config, "baseline_pos", 0.1, float)),
        baseline_neg=float(_resolve(args, config, "baseline_neg", 0.1, float)),
        neutral_rate=float(_resolve(args, config, "neutral_rate", 0.0, float)),
        p_edge=float(_resolve(args, config, "p_edge", 0.0, float)),
        p_reciprocal=float(_resolve(args, config, "p_reciprocal", 0.0, float)),
        follow_rate=float(_resolve(args, config, "follow_rate", 0.0, float)),
    )
    output = simulate(sim_config)

    log_path = out_dir / "events.log"
    write_log(output.log, log_path, header=f"seed = {sim_config.seed}")
    config_echo = {
        "nodes": sim_config.n_nodes,
        "horizon": sim_config.horizon,
        "seed": sim_config.seed,
        "covariates": ",".join(spec.names),
        "beta_pos": list(sim_config.beta_pos),
        "beta_neg": list(sim_config.beta_neg),
        "baseline_pos": sim_config.baseline_pos,
        "baseline_neg": sim_config.baseline_neg,
        "neutral_rate": sim_config.neutral_rate,
        "p_edge": sim_config.p_edge,
        "p_reciprocal": sim_config.p_reciprocal,
        "follow_rate": sim_config.follow_rate,
        "events_pos": output.n_pos,
        "events_neg": output.n_neg,
        "events_neu": output.n_neu,
        "events_follow": output.n_follow,
    }
    with open(out_dir / "sim_config.txt", "w", encoding="utf-8") as fh:
        for key, value in config_echo.items():
            if isinstance(value, list):
                value = ",".join(f"{v:g}" for v in value)
            fh.write(f"{key} = {value}\n")
    manifest = build_manifest(
        command=["simulate"] + _echo_args(args),
        config=config_echo,
        inputs={},
        seeds={"seed": sim_config.seed},
        duration_seconds=time.monotonic() - started,
        deterministic=deterministic,
    )
    write_manifest(out_dir, manifest)
    return EXIT_OK


def cmd_fit(args, config) -> int:
    started = time.monotonic()
    out_dir = _out_dir(args, config)
    deterministic = bool(_resolve(args, config, "deterministic", False, _cast_bool))
    log = parse_log(args.log)
    spec = as_covariate_spec(_resolve(args, config, "covariates", "focal"))
    sentiment = _resolve(args, config, "sentiment", "both")
    window_days = _resolve(args, config, "window_days", None, float)
    window_start = _resolve(args, config, "window_start", None, float)
    window_end = _resolve(args, config, "window_end", None, float)
    lo, hi = _window_bounds(log, window_days, window_start, window_end)
    policy = RiskSetPolicy(mode=_resolve(args, config, "risk_set", "all_nodes"))
    fit_config = FitConfig(
        max_iterations=int(_resolve(args, config, "max_iter", 100, int)),
        grad_tol=float(_resolve(args, config, "tol", 1e-8, float)),
        confidence_level=float(_resolve(args, config, "confidence", 0.95, float)),
        standardize=bool(_resolve(args, config, "standardize", False, _cast_bool)),
    )

    history, analysis = window(log, lo, hi)
    trace = build_trace(history, analysis, spec, policy)

    wanted = ["positive", "negative"] if sentiment == "both" else [
        "positive" if sentiment in ("pos", "positive") else "negative"
    ]
    all_converged = True
    for s in wanted:
        result = fit_trace(trace, s, fit_config)
        all_converged = all_converged and result.converged
        (out_dir / f"fit_{s}.tsv").write_text(result_table(result), encoding="utf-8")

    trace_out = _resolve(args, config, "covariate_trace", None)
    if trace_out:
        write_covariate_trace(trace_out, history, analysis, spec)

    manifest = build_manifest(
        command=["fit"] + _echo_args(args),
        config={
            "covariates": ",".join(spec.names),
            "sentiment": sentiment,
            "window": [lo, hi],
            "risk_set": policy.mode,
            "ties": policy.ties,
            "max_iter": fit_config.max_iterations,
            "tol": fit_config.grad_tol,
            "confidence": fit_config.confidence_level,
            "standardize": fit_config.standardize,
        },
        inputs={"log": args.log},
        seeds={},
        duration_seconds=time.monotonic() - started,
        deterministic=deterministic,
    )
    write_manifest(out_dir, manifest)
    return EXIT_OK if all_converged else EXIT_NUMERIC


def _load_confusion(args, config) -> ConfusionModel:
    confusion = _resolve(args, config, "confusion", None)
    accuracy = _resolve(args, config, "confusion_accuracy", None, float)
    calibration = _resolve(args, config, "calibration", None)
    given = [x for x in (confusion, accuracy, calibration) if x is not None]
    if len(given) != 1:
        raise UsageError(
            "exactly one of --confusion, --confusion-accuracy, --calibration required"
        )
    if confusion is not None:
        try:
            q = np.loadtxt(confusion, dtype=np.float64)
        except OSError as exc:
            raise UsageError(f"cannot read confusion file: {exc}") from None
        return ConfusionModel(q)
    if accuracy is not None:
        return ConfusionModel.diagonal(float(accuracy))
    pairs = []
    try:
        with open(calibration, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                pred, true = line.split()
                pairs.append((pred, true))
    except OSError as exc:
        raise UsageError(f"cannot read calibration file: {exc}") from None
    smoothing = float(_resolve(args, config, "smoothing", 1.0, float))
    return estimate_confusion(pairs, smoothing=smoothing)


def cmd_resample(args, config) -> int:
    started = time.monotonic()
    out_dir = _out_dir(args, config)
    deterministic = bool(_resolve(args, config, "deterministic", False, _cast_bool))
    log = parse_log(args.log)
    spec = as_covariate_spec(_resolve(args, config, "covariates", "focal"))
    k = int(_resolve(args, config, "k", 200, int))
    if k < 1:
        raise UsageError("--k must be at least 1")
    master_seed = int(_resolve(args, config, "master_seed", 0, int))
    model = _load_confusion(args, config)
    window_days = _resolve(args, config, "window_days", None, float)
    window_start = _resolve(args, config, "window_start", None, float)
    window_end = _resolve(args, config, "window_end", None, float)
    lo, hi = _window_bounds(log, window_days, window_start, window_end)
    policy = RiskSetPolicy(mode=_resolve(args, config, "risk_set", "all_nodes"))
    fit_config = FitConfig(
        max_iterations=int(_resolve(args, config, "max_iter", 100, int)),
        grad_tol=float(_resolve(args, config, "tol", 1e-8, float)),
        confidence_level=float(_resolve(args, config, "confidence", 0.95, float)),
    )
    n_jobs = int(_resolve(args, config, "threads", 1, int))

    profiles = run_profile(
        log,
        spec,
        fit_config,
        model,
        k_realizations=k,
        master_seed=master_seed,
        t_start=lo,
        t_end=hi,
        policy=policy,
        n_jobs=n_jobs,
    )
    for s, profile in profiles.items():
        (out_dir / f"profile_{s}.tsv").write_text(profile_table(profile), encoding="utf-8")
        (out_dir / f"summary_{s}.tsv").write_text(summary_table(profile), encoding="utf-8")
        write_profile_plots(out_dir / "plots", profile)

    manifest = build_manifest(
        command=["resample"] + _echo_args(args),
        config={
            "covariates": ",".join(spec.names),
            "k": k,
            "master_seed": master_seed,
            "confusion": model.matrix.tolist(),
            "window": [lo, hi],
            "risk_set": policy.mode,
            "confidence": fit_config.confidence_level,
        },
        inputs={"log": args.log},
        seeds={"master_seed": master_seed},
        duration_seconds=time.monotonic() - started,
        deterministic=deterministic,
    )
    write_manifest(out_dir, manifest)
    return EXIT_OK


def cmd_report(args, config) -> int:
    started = time.monotonic()
    out_dir = _out_dir(args, config)
    deterministic = bool(_resolve(args, config, "deterministic", False, _cast_bool))
    profile_dir = Path(args.profile_dir)
    tables = sorted(profile_dir.glob("profile_*.tsv"))
    if not tables:
        raise LogParseError(f"no profile tables found in {profile_dir}")
    inputs = {}
    for table in tables:
        profile = read_profile_table(table)
        write_profile_plots(out_dir / "plots", profile)
        inputs[table.name] = str(table)
    manifest = build_manifest(
        command=["report"] + _echo_args(args),
        config={"profile_dir": str(args.profile_dir)},
        inputs=inputs,
        seeds={},
        duration_seconds=time.monotonic() - started,
        deterministic=deterministic,
    )
    write_manifest(out_dir, manifest)
    return EXIT_OK


def _echo_args(args) -> list[str]:
    out = []
    skip = {"func", "command", "config"}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                out.append(flag)
        elif key == "log":
            out.append(str(value))
        else:
            out.extend([flag, str(value)])
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _parse_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LogParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SimulationOverflowError, linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
