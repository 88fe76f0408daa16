"""Command-line front end: synthetic experiment presets, CSV ingestion of
price series into streaming CVaR estimates with confidence bands, oracle
printing, and step-product diagnostics.

Subcommands
-----------
estimate    price CSV -> log-returns -> streaming loss quantile/superquantile
            trajectory with studentized CIs, written as CSV/JSON + figure.
experiment  run a named preset (or config file) through the Monte-Carlo
            harness; writes a JSON report, plot-ready CSVs, and figures.
oracle      print closed-form quantile/superquantile/variance values and the
            theoretical limit constants for a model.
pn-check    diagnostics for the step-product normalizer P_n: measured vs
            predicted growth, plus the log-gamma series self-check.

Config precedence everywhere: command-line flags > --config JSON file >
preset defaults. Every file-writing run also writes a manifest that fully
resolves the run so it can be reproduced byte-identically.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (euler_gamma_check, log_pn_product, log_pn_running,
                          pn_limit, pn_start_index, constants_for_model)
from .distributions import parse_model, risk_oracle
from .estimator import StepSchedule, TwoTimeScaleEstimator, UNSUPPORTED
from .experiments import ExperimentConfig, run_replicas
from . import figures

__all__ = [
    "ReturnSeries",
    "RunManifest",
    "ingest_csv",
    "run_negative_cvar",
    "run_preset",
    "PRESETS",
    "main",
]

SAMPLING_MODES = ("every_row", "weekly", "weekly-dates")
_DATE_COLUMNS = ("date", "time", "timestamp", "day")


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns extracted from a price series; timestamps has one entry
    per return (that of the later price of the pair)."""

    timestamps: tuple
    log_returns: tuple

    def __post_init__(self):
        if len(self.timestamps) != len(self.log_returns):
            raise ValueError("one timestamp per return required")

    def __len__(self):
        return len(self.log_returns)


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to replay a run: resolved inputs, tool version, and
    the files the run wrote. Round-trips through JSON unchanged."""

    command: str
    resolved: dict
    outputs: tuple
    notes: tuple = ()
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "resolved": self.resolved,
            "outputs": list(self.outputs),
            "notes": list(self.notes),
            "tool_version": self.tool_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(command=d["command"], resolved=d["resolved"],
                   outputs=tuple(d["outputs"]), notes=tuple(d["notes"]),
                   tool_version=d["tool_version"])

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _parse_date(cell: str, row: int) -> date:
    try:
        return date.fromisoformat(cell.strip())
    except ValueError:
        raise ValueError(f"row {row}: unparsable date {cell.strip()!r} "
                         "(ISO format required for weekly-dates)") from None


def ingest_csv(path, price_column: str = "price",
               sampling: str = "every_row",
               date_column: str = None) -> ReturnSeries:
    """Read a header-ed CSV of prices into a ReturnSeries.

    Row numbers in error messages are 1-based over data rows (the header is
    row 0). All price cells are validated before sampling, so a bad cell is
    reported whether or not the sampling mode would keep its row.

    sampling: "every_row" uses all rows; "weekly" takes every 5th row (a
    documented convention for business-day data); "weekly-dates" keeps the
    last row of each ISO week, which requires a parsable date column.
    """
    if sampling not in SAMPLING_MODES:
        raise ValueError(f"unknown sampling {sampling!r}; "
                         f"choose from {SAMPLING_MODES}")
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file (header row required)")
        rows = list(reader)
    if price_column not in reader.fieldnames:
        raise ValueError(f"column {price_column!r} not found; "
                         f"available: {list(reader.fieldnames)}")

    prices = []
    for i, row in enumerate(rows, start=1):
        cell = (row[price_column] or "").strip()
        try:
            p = float(cell)
        except ValueError:
            raise ValueError(f"row {i}: unparsable price {cell!r}") from None
        if not math.isfinite(p) or p <= 0.0:
            raise ValueError(f"row {i}: non-positive price")
        prices.append(p)

    if date_column is None:
        for name in reader.fieldnames:
            if name.strip().lower() in _DATE_COLUMNS:
                date_column = name
                break

    def stamp(i: int):
        if date_column is not None:
            return rows[i][date_column].strip()
        return i + 1  # 1-based data row number

    if sampling == "every_row":
        kept = list(range(len(rows)))
    elif sampling == "weekly":
        kept = list(range(0, len(rows), 5))
    else:  # weekly-dates
        if date_column is None:
            raise ValueError(
                "weekly-dates sampling needs a date column "
                f"(none of {_DATE_COLUMNS} found; use --date-column)")
        kept = []
        last_week = None
        for i, row in enumerate(rows):
            week = _parse_date(row[date_column], i + 1).isocalendar()[:2]
            if week == last_week:
                kept[-1] = i  # keep the last row of the week
            else:
                kept.append(i)
                last_week = week

    if len(kept) < 2:
        raise ValueError(f"need at least 2 prices after {sampling} sampling, "
                         f"got {len(kept)}")
    returns = []
    stamps = []
    for prev, cur in zip(kept, kept[1:]):
        returns.append(math.log(prices[cur] / prices[prev]))
        stamps.append(stamp(cur))
    return ReturnSeries(timestamps=tuple(stamps), log_returns=tuple(returns))


def run_negative_cvar(series: ReturnSeries, alpha, schedule: StepSchedule,
                      level: float) -> np.ndarray:
    """Stream losses (negated log-returns) through the convexified estimator.

    Returns one row per update step: (n, theta_n, sq_convex_n, ci_lo, ci_hi),
    with NaN CI bounds wherever the studentized interval is not yet (or not
    at all) defined. The first return warm-starts the estimator, so a series
    of R returns yields R - 1 rows.
    """
    if len(series) == 0:
        raise ValueError("empty return series")
    est = TwoTimeScaleEstimator(alpha, schedule)
    rows = []
    for r in series.log_returns:
        est.ingest(-float(r))
        if est.n_observed < 1:
            continue  # warm-start consumption
        try:
            lo, hi = est.confidence_interval(level)
        except ValueError:
            lo = hi = math.nan
        rows.append((float(est.n_observed), est.theta, est.sq_convex,
                     lo, hi))
    return np.asarray(rows, dtype=float).reshape(-1, 5)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _log_checkpoints(n: int, per_decade: int = 40) -> tuple:
    grid = np.logspace(0.0, math.log10(n), int(per_decade * math.log10(n)))
    return tuple(np.unique(np.round(grid).astype(int)).clip(1, n))

_AS_SCHEDULE = dict(a1=5.0, a_exp=2.0 / 3.0, b1=0.75, b_exp=1.0)

PRESETS = {
    # single long runs showing almost-sure convergence
    "exp_as": dict(model="exp:0.1", alpha=0.5, n=10**6, replicas=1,
                   seed=2024, level=0.95, checkpoints="log", **_AS_SCHEDULE),
    "gamma_as": dict(model="gamma:4,3", alpha=0.5, n=10**6, replicas=1,
                     seed=2024, level=0.95, checkpoints="log",
                     **_AS_SCHEDULE),
    # rescaled-error panels
    "clt_fast": dict(model="exp:0.1", alpha=0.5, n=10**5, replicas=2000,
                     seed=2024, level=0.95, checkpoints="terminal",
                     **_AS_SCHEDULE),
    "clt_slow": dict(model="exp:0.1", alpha=0.5, n=10**5, replicas=2000,
                     seed=2024, level=0.95, checkpoints="terminal",
                     a1=5.0, a_exp=0.6, b1=1.0, b_exp=0.8),
    # quadratic strong law along one long trajectory
    "qsl": dict(model="exp:0.1", alpha=0.5, n=10**6, replicas=1,
                seed=2024, level=0.95, checkpoints="log", **_AS_SCHEDULE),
    # studentized CI coverage
    "coverage": dict(model="exp:0.1", alpha=0.5, n=10**5, replicas=1000,
                     seed=2024, level=0.95, checkpoints="terminal",
                     **_AS_SCHEDULE),
}


def _resolve_run(preset: str = None, config_file=None,
                 overrides: dict = None) -> dict:
    """Merge preset defaults, config-file entries, and explicit overrides
    (ascending precedence)."""
    resolved = dict(model="exp:0.1", alpha=0.5, n=10**5, replicas=1,
                    seed=2024, level=0.95, checkpoints="terminal",
                    **_AS_SCHEDULE)
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; "
                             f"valid presets: {sorted(PRESETS)}")
        resolved.update(PRESETS[preset])
    if config_file is not None:
        with open(config_file) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(resolved)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}; "
                             f"valid keys: {sorted(resolved)}")
        resolved.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            resolved[key] = value
    return resolved


def _experiment_config(resolved: dict) -> ExperimentConfig:
    n = int(resolved["n"])
    chk = resolved["checkpoints"]
    if chk == "log":
        chk = _log_checkpoints(n)
    elif chk == "terminal":
        chk = (n,)
    else:
        chk = tuple(int(c) for c in chk)
    model = resolved["model"]
    if isinstance(model, str):
        model = parse_model(model)
    return ExperimentConfig(
        model=model,
        alpha=float(resolved["alpha"]),
        schedule=StepSchedule(float(resolved["a1"]), float(resolved["a_exp"]),
                              float(resolved["b1"]), float(resolved["b_exp"])),
        n_steps=n,
        n_replicas=int(resolved["replicas"]),
        base_seed=int(resolved["seed"]),
        checkpoints=chk,
    )


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _write_csv(path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return str(path)


def _plot_rows(ns, values, theory) -> list:
    theory = np.broadcast_to(np.asarray(theory, dtype=float), np.shape(ns))
    return list(zip(np.asarray(ns, float), np.asarray(values, float), theory))


def _write_series(out_dir: Path, stem: str, fmt: str, header, rows,
                  outputs: list) -> None:
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        payload = [dict(zip(header, map(float, row))) for row in rows]
        path.write_text(json.dumps(payload, indent=2))
    else:
        path = out_dir / f"{stem}.csv"
        _write_csv(path, header, rows)
    outputs.append(path.name)


def run_preset(name: str, overrides: dict = None, out_dir=".",
               fmt: str = "csv", with_figures: bool = True,
               threads=None, config_file=None):
    """Execute a named preset (with optional overrides) and write its report
    JSON, plot-ready series (columns n, value, theory_value), figures, and
    manifest into out_dir. Returns (ExperimentReport, RunManifest)."""
    return _run_and_emit(name, name, overrides, out_dir, fmt, with_figures,
                         threads, config_file)


def _run_and_emit(stem: str, preset, overrides, out_dir, fmt, with_figures,
                  threads, config_file):
    resolved = _resolve_run(preset, config_file, overrides)
    config = _experiment_config(resolved)
    name = stem
    report = run_replicas(config, coverage_level=float(resolved["level"]),
                          threads=threads)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []

    report_path = out_dir / f"{name}_report.json"
    report_path.write_text(report.to_json(include_timing=False))
    outputs.append(report_path.name)

    oracle, constants = report.oracle, report.constants
    ns = np.asarray(config.checkpoints, dtype=float)
    many_checkpoints = len(config.checkpoints) > 1
    if many_checkpoints:
        # trajectory-style series from replica 0
        theta_rows = _plot_rows(ns, report.checkpoint_theta[0],
                                oracle.theta_alpha)
        _write_series(out_dir, f"{name}_theta", fmt,
                      ("n", "value", "theory_value"), theta_rows, outputs)
        for v in config.variant_set:
            rows = _plot_rows(ns, report.checkpoint_sq[v][0], oracle.sq_alpha)
            _write_series(out_dir, f"{name}_sq_{v}", fmt,
                          ("n", "value", "theory_value"), rows, outputs)
        qsl_rows = _plot_rows(ns, report.qsl["convex"][0],
                              math.nan if constants is None
                              else constants.qsl_const)
        _write_series(out_dir, f"{name}_qsl", fmt,
                      ("n", "value", "theory_value"), qsl_rows, outputs)
        lil_rows = _plot_rows(ns, report.lil_max["convex"][0],
                              math.nan if constants is None
                              else constants.lil_const)
        _write_series(out_dir, f"{name}_lil_max", fmt,
                      ("n", "value", "theory_value"), lil_rows, outputs)
    else:
        # sample-style series: one row per replica at the terminal step
        for v in config.variant_set:
            rows = _plot_rows(np.full(config.n_replicas, float(config.n_steps)),
                              report.rescaled_sq[v],
                              math.nan if constants is None
                              else constants.gamma_sq)
            _write_series(out_dir, f"{name}_rescaled_{v}", fmt,
                          ("n", "value", "theory_value"), rows, outputs)
        if report.coverage is not None:
            _write_series(out_dir, f"{name}_coverage", fmt,
                          ("n", "value", "theory_value"),
                          [(float(config.n_steps), report.coverage,
                            report.coverage_level)], outputs)

    if with_figures:
        if many_checkpoints:
            series = {"quantile": report.checkpoint_theta[0]}
            series.update({f"superquantile ({v})": report.checkpoint_sq[v][0]
                           for v in config.variant_set})
            outputs.append(Path(figures.save_trajectory_figure(
                out_dir / f"{name}_trajectory.png", ns, series,
                theory=oracle.sq_alpha,
                title=f"{name}: almost-sure convergence")).name)
            outputs.append(Path(figures.save_qsl_figure(
                out_dir / f"{name}_qsl.png",
                np.column_stack([ns, report.qsl["convex"][0]]),
                theory=None if constants is None else constants.qsl_const,
                title=f"{name}: quadratic strong law")).name)
            outputs.append(Path(figures.save_qsl_figure(
                out_dir / f"{name}_lil_max.png",
                np.column_stack([ns, report.lil_max["convex"][0]]),
                theory=None if constants is None else constants.lil_const,
                title=f"{name}: LIL running max")).name)
        else:
            for v in config.variant_set:
                outputs.append(Path(figures.save_histogram_figure(
                    out_dir / f"{name}_hist_{v}.png", report.rescaled_sq[v],
                    variance=None if constants is None
                    else constants.gamma_sq,
                    title=f"{name}: rescaled terminal errors ({v})")).name)

    manifest = RunManifest(
        command="experiment",
        resolved={**resolved, "preset": preset,
                  "checkpoints": [int(c) for c in config.checkpoints],
                  "threads_requested": threads},
        outputs=tuple(outputs),
        notes=(f"report duration {report.duration_seconds:.3f}s "
               f"on {report.threads} thread(s)",),
    )
    manifest_path = out_dir / f"{name}_manifest.json"
    manifest_path.write_text(manifest.to_json())
    return report, manifest


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_estimate(args) -> int:
    series = ingest_csv(args.input, price_column=args.column,
                        sampling=args.sampling, date_column=args.date_column)
    schedule = StepSchedule(args.a1, args.a_exp, args.b1, args.b_exp)
    traj = run_negative_cvar(series, args.alpha, schedule, args.level)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    _write_series(out_dir, "estimate_trajectory", args.format,
                  ("n", "theta", "sq_convex", "ci_lo", "ci_hi"),
                  traj, outputs)
    if not args.no_figures and traj.shape[0]:
        outputs.append(Path(figures.save_ci_figure(
            out_dir / "estimate_ci.png", traj,
            title=f"streaming loss quantile/superquantile "
                  f"(alpha={args.alpha})")).name)
    manifest = RunManifest(
        command="estimate",
        resolved={
            "input": str(args.input), "column": args.column,
            "sampling": args.sampling, "date_column": args.date_column,
            "alpha": args.alpha, "level": args.level,
            "schedule": {"a1": args.a1, "a_exp": args.a_exp,
                         "b1": args.b1, "b_exp": args.b_exp},
            "n_returns": len(series),
        },
        outputs=tuple(outputs),
        notes=("losses are negated log-returns: the reported superquantile "
               "of losses at level alpha is the negative CVaR of returns "
               "at level 1-alpha",),
    )
    (out_dir / "estimate_manifest.json").write_text(manifest.to_json())
    if traj.shape[0]:
        n, theta, sq, lo, hi = traj[-1]
        print(f"n={int(n)} quantile={theta:.6g} superquantile={sq:.6g} "
              f"ci=[{lo:.6g}, {hi:.6g}]")
    print(f"wrote {len(outputs) + 1} file(s) to {out_dir}")
    return 0


def _cmd_experiment(args) -> int:
    if args.preset is None and args.config is None:
        raise ValueError("provide --preset or --config "
                         f"(valid presets: {sorted(PRESETS)})")
    overrides = {
        "model": args.model, "alpha": args.alpha, "a1": args.a1,
        "a_exp": args.a_exp, "b1": args.b1, "b_exp": args.b_exp,
        "n": args.n, "replicas": args.replicas, "seed": args.seed,
        "level": args.level,
    }
    name = args.preset or "custom"
    report, manifest = _run_and_emit(
        name, args.preset, overrides, args.out_dir, args.format,
        not args.no_figures, args.threads, args.config)
    print(f"{name}: {report.config.n_replicas} replica(s) x "
          f"{report.config.n_steps} steps in "
          f"{report.duration_seconds:.2f}s on {report.threads} thread(s)")
    if report.constants is not None:
        print(f"  var rescaled sq (convex) = "
              f"{report.var_rescaled_sq['convex']:.6g} "
              f"(theory {report.constants.gamma_sq:.6g})")
    if report.coverage is not None:
        print(f"  CI coverage at level {report.coverage_level}: "
              f"{report.coverage:.4f}")
    print(f"wrote {len(manifest.outputs) + 1} file(s) to {args.out_dir}")
    return 0


def _cmd_oracle(args) -> int:
    model = parse_model(args.model)
    lines = [f"model = {model.descriptor()}", f"alpha = {args.alpha}"]
    oracle = risk_oracle(model, args.alpha)
    lines += [
        f"theta_alpha = {oracle.theta_alpha:.17g}",
        f"sq_alpha = {oracle.sq_alpha:.17g}",
        f"sigma_sq = {oracle.sigma_sq:.17g}",
        f"tau_sq = {oracle.tau_sq:.17g}",
    ]
    schedule = StepSchedule(args.a1, args.a_exp, args.b1, args.b_exp)
    lines.append(f"regime = {schedule.theory_regime}")
    if schedule.theory_regime != UNSUPPORTED and model.has_density:
        _, consts = constants_for_model(model, args.alpha, schedule)
        lines += [
            f"gamma_theta = {consts.gamma_theta:.17g}",
            f"gamma_sq = {consts.gamma_sq:.17g}",
            f"nu_sq = {consts.nu_sq:.17g}",
            f"qsl_const = {consts.qsl_const:.17g}",
            f"lil_const = {consts.lil_const:.17g}",
            f"qsl_theta = {consts.qsl_theta:.17g}",
            f"lil_theta = {consts.lil_theta:.17g}",
        ]
    else:
        lines.append("limit constants unavailable in this regime/model")
    print("\n".join(lines))
    return 0


def _cmd_pn_check(args) -> int:
    schedule = StepSchedule(5.0, 2.0 / 3.0, args.b1, args.b_exp)
    n = int(args.n)
    kind, limit = pn_limit(schedule)
    start = pn_start_index(schedule)
    log_pn = log_pn_product(schedule, n)
    lines = [
        f"b1 = {args.b1}, b_exp = {args.b_exp}, n = {n}",
        f"product starts at k = {start}",
        f"log P_n = {log_pn:.17g}",
        f"asymptotics: {kind}",
    ]
    if kind == "power":
        measured = math.exp(log_pn - schedule.b1 * math.log(n))
        lines += [
            f"P_n / n^b1 measured = {measured:.17g}",
            f"limit = {limit:.17g}",
            f"relative gap = {abs(measured - limit) / limit:.3e}",
        ]
    else:
        growth = schedule.b1 / (1.0 - schedule.b_exp) \
            * n ** (1.0 - schedule.b_exp)
        measured = log_pn - growth
        lines += [
            f"log P_n - b1/(1-b) n^(1-b) measured = {measured:.17g}",
            f"limit constant = {limit:.17g}",
            f"gap = {measured - limit:.3e}",
        ]
    lines.append("log-gamma series self-check (lhs vs series rhs):")
    for b1 in (0.25, 0.5, 0.75):
        lhs, rhs = euler_gamma_check(b1)
        lines.append(f"  b1={b1}: lhs={lhs:.17g} rhs={rhs:.17g} "
                     f"|diff|={abs(lhs - rhs):.3e}")
    print("\n".join(lines))

    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        running = log_pn_running(schedule, n)
        ns = np.unique(np.round(np.logspace(
            math.log10(max(start, 2)), math.log10(n), 200)).astype(int))
        if kind == "power":
            values = np.exp(running[ns - 1] - schedule.b1 * np.log(ns))
            ylabel = "P_n / n^b1"
        else:
            values = running[ns - 1] - schedule.b1 / (1 - schedule.b_exp) \
                * ns ** (1.0 - schedule.b_exp)
            ylabel = "log P_n - growth"
        rows = _plot_rows(ns, values, limit)
        _write_series(out_dir, "pn_ratio", args.format,
                      ("n", "value", "theory_value"), rows, outputs)
        if not args.no_figures:
            outputs.append(Path(figures.save_pn_figure(
                out_dir / "pn_ratio.png",
                np.column_stack([ns, values]), limit=limit,
                title="step-product normalizer growth",
                ylabel=ylabel)).name)
        manifest = RunManifest(
            command="pn-check",
            resolved={"b1": args.b1, "b_exp": args.b_exp, "n": n,
                      "start_index": start, "kind": kind, "limit": limit},
            outputs=tuple(outputs),
        )
        (out_dir / "pn_manifest.json").write_text(manifest.to_json())
        print(f"wrote {len(outputs) + 1} file(s) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqstream",
        description="Streaming quantile/superquantile (VaR/CVaR) estimation "
                    "and Monte-Carlo experiments.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def schedule_flags(p, defaults=True):
        p.add_argument("--a1", type=float,
                       default=5.0 if defaults else None,
                       help="quantile step scale a1")
        p.add_argument("--a-exp", dest="a_exp", type=float,
                       default=2.0 / 3.0 if defaults else None,
                       help="quantile step exponent (1/2, 1]")
        p.add_argument("--b1", type=float,
                       default=0.75 if defaults else None,
                       help="superquantile step scale b1")
        p.add_argument("--b-exp", dest="b_exp", type=float,
                       default=1.0 if defaults else None,
                       help="superquantile step exponent (1/2, 1]")

    def output_flags(p):
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="series output format (report is always JSON)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p_est = sub.add_parser(
        "estimate", help="stream a price CSV into loss-quantile/CVaR "
                         "estimates with confidence bands")
    p_est.add_argument("--input", required=True, help="price CSV (header row)")
    p_est.add_argument("--column", default="price", help="price column name")
    p_est.add_argument("--sampling", choices=SAMPLING_MODES,
                       default="every_row")
    p_est.add_argument("--date-column", default=None,
                       help="date column for weekly-dates sampling")
    p_est.add_argument("--alpha", type=float, default=0.9,
                       help="tail level of the loss distribution")
    p_est.add_argument("--level", type=float, default=0.95,
                       help="confidence level for the intervals")
    schedule_flags(p_est)
    output_flags(p_est)
    p_est.set_defaults(func=_cmd_estimate)

    p_exp = sub.add_parser(
        "experiment", help="run a Monte-Carlo preset or config file")
    p_exp.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p_exp.add_argument("--config", default=None,
                       help="JSON config file (overrides preset defaults)")
    p_exp.add_argument("--model", default=None,
                       help="model spec, e.g. exp:0.1 gamma:4,3 "
                            "pareto:1,3 normal:0,1")
    p_exp.add_argument("--alpha", type=float, default=None)
    p_exp.add_argument("--n", type=float, default=None, help="steps per replica")
    p_exp.add_argument("--replicas", type=int, default=None)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--level", type=float, default=None,
                       help="CI level for coverage accounting")
    p_exp.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: SQ_STREAM_THREADS "
                            "or CPU count)")
    schedule_flags(p_exp, defaults=False)
    output_flags(p_exp)
    p_exp.set_defaults(func=_cmd_experiment)

    p_or = sub.add_parser(
        "oracle", help="print closed-form quantile/superquantile/variance "
                       "values and limit constants for a model")
    p_or.add_argument("--model", required=True)
    p_or.add_argument("--alpha", type=float, default=0.5)
    schedule_flags(p_or)
    p_or.set_defaults(func=_cmd_oracle)

    p_pn = sub.add_parser(
        "pn-check", help="step-product normalizer diagnostics and "
                         "log-gamma series self-check")
    p_pn.add_argument("--b1", type=float, default=0.75)
    p_pn.add_argument("--b-exp", dest="b_exp", type=float, default=1.0)
    p_pn.add_argument("--n", type=float, default=10**6)
    p_pn.add_argument("--out-dir", default=None,
                      help="write the ratio series + figure here (optional)")
    p_pn.add_argument("--format", choices=("csv", "json"), default="csv")
    p_pn.add_argument("--no-figures", action="store_true")
    p_pn.set_defaults(func=_cmd_pn_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
