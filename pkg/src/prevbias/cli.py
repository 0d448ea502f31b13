"""Command-line front end.

``prevbias estimate`` takes a count table (JSON, file or stdin) and prints a
single JSON object with the point estimates, standard errors, and confidence
intervals.  ``prevbias run`` executes a scenario config and writes the
aggregate tables plus per-replicate interval records next to a manifest that
pins the seed and the config hash.

Exit codes: 0 on success, 2 for invalid input, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .asymptotics import (
    ci_active_info,
    ci_logit_prevalence,
    mechanism_plugin_inputs,
    plugin_variances,
    sigma_it,
    sigma_p,
    sigma_p0,
)
from .config import load_scenario, parse_count_table
from .errors import BoundaryEstimate, InvalidSpec, PrevBiasError
from .estimators import build_bundle
from .experiments import ExperimentReport, run_experiment
from .rng import RngStream

ACTIVEINFO_COLUMNS = (
    "n",
    "replicates",
    "kept",
    "discarded",
    "undefined_active_info",
    "mean_p_hat",
    "mean_p0_hat",
    "i_plus_t",
    "i_plus_c",
    "i_plus",
)
RMSE_COLUMNS = ("n", "replicates", "kept", "discarded", "rmse_p0", "rmse_abs_sd")
COVERAGE_COLUMNS = ("n", "replicates", "kept", "discarded", "boundary_misses", "coverage")
CIFAN_COLUMNS = ("n", "rep", "p0_hat", "lo", "hi", "hit")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _fan_rows(report: ExperimentReport) -> list[dict]:
    return [asdict(record) for record in report.fan]


def _write_table(path: Path, columns, rows, fmt: str) -> None:
    if fmt == "json":
        payload = [{key: row[key] for key in columns} for row in rows]
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
        return
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(row[key]) for key in columns) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _jsonable(value):
    """Replace NaN/inf with None so the output is strict JSON."""
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def cmd_estimate(args) -> int:
    if args.input == "-":
        raw = sys.stdin.read()
    else:
        raw = Path(args.input).read_text()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"input is not valid JSON: {exc}") from exc
    outcome, mechanism, alpha, seed, n_samples = parse_count_table(doc)
    bundle = build_bundle(outcome, mechanism, rng=RngStream(seed), n_samples=n_samples)

    warnings = list(bundle.warnings)
    result = {
        "mechanism": mechanism.kind,
        "alpha": alpha,
        "n": outcome.n,
        "n_t": outcome.n_t,
        "p_hat": bundle.p_hat,
        "p0_hat": bundle.p0_hat,
        "p0s_hat": list(bundle.p0s_hat),
        "rho_hat": list(bundle.rho_hat),
        "pi_hat": bundle.pi_hat,
        "i_t_hat": bundle.i_t_hat,
        "i_c_hat": bundle.i_c_hat,
    }
    empty = [s for s in range(outcome.s) if outcome.n_ts[s] == 0]
    if empty:
        warnings.append(f"symptom classes without tested individuals: {empty}")

    try:
        pi_hat_s, rho_hat_s = mechanism_plugin_inputs(outcome, mechanism, bundle.rho_hat)
        v = plugin_variances(outcome, pi_hat_s, rho_hat_s)
        if v.degenerate:
            warnings.append("a class positive rate is 0 or 1; its variance contribution is zero")
        result["sigma_p"] = sigma_p(v, outcome.n)
        result["sigma_p0"] = sigma_p0(v, outcome.n)
        for target, est, sig in (
            ("ci_p", bundle.p_hat, result["sigma_p"]),
            ("ci_p0", bundle.p0_hat, result["sigma_p0"]),
        ):
            try:
                ci = ci_logit_prevalence(est, sig, alpha, target=target[3:])
                result[target] = [ci.lo, ci.hi]
            except BoundaryEstimate:
                result[target] = None
                warnings.append(f"{target} undefined: estimate on the boundary")
        if 0.0 < bundle.p_hat < 1.0 and 0.0 < bundle.p0_hat < 1.0:
            result["sigma_i_t"] = sigma_it(v, bundle.p_hat, bundle.p0_hat, outcome.n)
            ci = ci_active_info(bundle.i_t_hat, result["sigma_i_t"], alpha)
            result["ci_i_t"] = [ci.lo, ci.hi]
        else:
            result["sigma_i_t"] = None
            result["ci_i_t"] = None
    except PrevBiasError as exc:
        warnings.append(f"standard errors unavailable: {exc}")

    result["warnings"] = warnings
    print(json.dumps(_jsonable(result), indent=2, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    cfg, raw = load_scenario(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=int(args.seed))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = run_experiment(cfg, threads=args.threads)

    ext = "json" if args.format == "json" else "csv"
    files = {
        "activeinfo": out_dir / f"{cfg.label}_activeinfo.{ext}",
        "rmse": out_dir / f"{cfg.label}_rmse.{ext}",
        "coverage": out_dir / f"{cfg.label}_coverage.{ext}",
        "cifan": out_dir / f"{cfg.label}_cifan.{ext}",
    }
    rows = [asdict(row) for row in report.rows]
    _write_table(files["activeinfo"], ACTIVEINFO_COLUMNS, rows, args.format)
    _write_table(files["rmse"], RMSE_COLUMNS, rows, args.format)
    _write_table(files["coverage"], COVERAGE_COLUMNS, rows, args.format)
    _write_table(files["cifan"], CIFAN_COLUMNS, _fan_rows(report), args.format)

    manifest = {
        "label": cfg.label,
        "version": __version__,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "n_grid": list(cfg.n_grid),
        "replicates": cfg.replicates,
        "alpha": cfg.alpha,
        "mechanism": cfg.mechanism.kind,
        "format": args.format,
        "files": {key: path.name for key, path in files.items()},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prevbias",
        description="Biased-testing prevalence estimation and Monte Carlo studies",
    )
    parser.add_argument("--version", action="version", version=f"prevbias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate prevalence from a count table")
    est.add_argument("--input", default="-", help="count-table JSON file, or - for stdin")
    est.set_defaults(func=cmd_estimate)

    run = sub.add_parser("run", help="run a scenario config and write report files")
    run.add_argument("--config", required=True, help="scenario JSON file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out-dir", default=".", help="directory for the report files")
    run.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrevBiasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if args.command == "estimate" else 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
