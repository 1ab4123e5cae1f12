"""Command-line experiment orchestration with bit-stable CSV/JSON output.

Commands: simulate, fit, forecast, compare, sweep. Every command writes
a run manifest JSON next to its outputs. Numeric CSV fields are printed
with 9 significant digits; identical inputs and seed give byte-identical
data files regardless of --jobs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config, parse_sweep_values
from .harness import (
    build_observations,
    compare_paired,
    fit_season,
    run_forecast_schedule,
    sweep,
)
from .harness import ForecastResult
from .model import DIM_NAMES
from .truth import TruthScenario

SEED_ENV_VAR = "SRASSIM_SEED"


@dataclasses.dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    config_hash: str
    seeds: list[int]
    artifact_version: str
    outputs: list[str]
    duration_seconds: float


def _fmt_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_value(v) for v in row])


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, config: RunConfig,
                    seeds, outputs, started: float) -> None:
    manifest = RunManifest(
        command=command,
        config_hash=config.config_hash(),
        seeds=[int(s) for s in seeds],
        artifact_version=__version__,
        outputs=sorted(outputs),
        duration_seconds=time.monotonic() - started,
    )
    _write_json(out_dir / "manifest.json", dataclasses.asdict(manifest))


def _scenario_list(config: RunConfig) -> list[TruthScenario]:
    names = config.harness.scenarios or (config.scenario.kind,)
    scenarios = []
    for name in names:
        if name == config.scenario.kind:
            scenarios.append(config.scenario)
        else:
            scenarios.append(TruthScenario.default(
                name, config.model.population,
                noise_seed=config.scenario.noise_seed))
    return scenarios


def _forecast_weeks(config: RunConfig, season_weeks: int) -> list[int]:
    start = config.harness.forecast_start_week
    end = min(config.harness.forecast_end_week, season_weeks)
    return list(range(start, end + 1))


def cmd_simulate(config: RunConfig, seed: int, out_dir: Path, jobs: int) -> list[str]:
    truth, series = build_observations(config.scenario, config.model,
                                       config.filter, seed)
    rows = [(week + 1, truth[week], series.values[week], series.oev[week])
            for week in range(len(series))]
    _write_csv(out_dir / "truth_observations.csv",
               ("week", "true_incidence", "observed_incidence", "oev"), rows)
    return ["truth_observations.csv"]


def cmd_fit(config: RunConfig, seed: int, out_dir: Path, jobs: int) -> list[str]:
    _, series = build_observations(config.scenario, config.model,
                                   config.filter, seed)
    filter_config = replace(config.filter, rng_seed=seed)
    records, _ = fit_season(series, filter_config, config.model)

    rows = []
    for rec in records:
        week = rec.week + 1
        stats = [
            ("prior_mean", "incidence", float(np.mean(rec.prior_incidence))),
            ("prior_sd", "incidence", float(np.std(rec.prior_incidence, ddof=1))
             if len(rec.prior_incidence) > 1 else 0.0),
        ]
        w = rec.posterior.weights
        post_mean_inc = float(w @ rec.posterior_incidence)
        post_var_inc = float(w @ (rec.posterior_incidence - post_mean_inc) ** 2)
        stats.append(("posterior_mean", "incidence", post_mean_inc))
        stats.append(("posterior_sd", "incidence", post_var_inc ** 0.5))
        for dim in DIM_NAMES:
            col = rec.posterior.states[:, DIM_NAMES.index(dim)]
            mean = float(w @ col)
            stats.append(("posterior_mean", dim, mean))
            stats.append(("posterior_sd", dim, float(w @ (col - mean) ** 2) ** 0.5))
        rows.extend((week, stat, dim, value) for stat, dim, value in stats)
    _write_csv(out_dir / "fit.csv", ("week", "member_stat", "dimension", "value"),
               rows)

    fitted = np.array([rec.posterior_mean_incidence() for rec in records])
    summary = {
        "filter": config.filter.filter_kind,
        "sr": config.filter.sr_active,
        "n_members": config.filter.resolved_members(),
        "n_weeks": len(records),
        "rms": float(np.sqrt(np.mean((fitted - series.values) ** 2))),
        "resampled_weeks": int(sum(rec.resampled for rec in records)),
        "flagged_weeks": int(sum(rec.flag is not None for rec in records)),
    }
    _write_json(out_dir / "fit_summary.json", summary)
    return ["fit.csv", "fit_summary.json"]


def _forecast_task(payload) -> list[tuple]:
    config, scenario, seed, weeks = payload
    _, series = build_observations(scenario, config.model, config.filter, seed)
    filter_config = replace(config.filter, rng_seed=seed)
    results = run_forecast_schedule(series, weeks, filter_config, config.model,
                                    scenario_name=scenario.kind)
    return [_forecast_row(r) for r in results]


def _forecast_row(r: ForecastResult) -> tuple:
    return (r.scenario, r.filter_kind, r.sr_enabled, r.seed, r.forecast_week,
            r.predicted_peak_week, r.observed_peak_week, r.accurate, r.rms)


FORECAST_HEADER = ("scenario", "filter", "sr", "seed", "forecast_week",
                   "pred_peak", "obs_peak", "accurate", "rms")


def _run_tasks(task, payloads, jobs: int) -> list:
    if jobs <= 1 or len(payloads) <= 1:
        return [task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(task, payloads))


def cmd_forecast(config: RunConfig, seed: int, out_dir: Path,
                 jobs: int) -> list[str]:
    seeds = [seed + k for k in range(config.harness.n_seeds)]
    weeks = _forecast_weeks(config, config.model.weeks_per_season)
    payloads = [(config, scenario, s, weeks)
                for scenario in _scenario_list(config) for s in seeds]
    rows = [row for chunk in _run_tasks(_forecast_task, payloads, jobs)
            for row in chunk]
    _write_csv(out_dir / "forecast.csv", FORECAST_HEADER, rows)
    return ["forecast.csv"]


def _read_forecast_csv(path: Path) -> list[ForecastResult]:
    results = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            results.append(ForecastResult(
                scenario=row["scenario"],
                filter_kind=row["filter"],
                sr_enabled=row["sr"] == "true",
                seed=int(row["seed"]),
                forecast_week=int(row["forecast_week"]),
                trajectory=np.empty(0),
                predicted_peak_week=int(row["pred_peak"]),
                observed_peak_week=int(row["obs_peak"]),
                accurate=row["accurate"] == "true",
                rms=float(row["rms"]),
            ))
    return results


COMPARE_HEADER = ("scenario", "metric", "n_pairs", "n_groups", "delta",
                  "ci_low", "ci_high", "t_stat", "p_two_sided", "p_one_sided",
                  "zero_variance")


def cmd_compare(config: RunConfig, seed: int, out_dir: Path, jobs: int,
                results_sr: Path, results_unmod: Path) -> list[str]:
    sr = _read_forecast_csv(results_sr)
    unmod = _read_forecast_csv(results_unmod)
    scenarios = sorted({r.scenario for r in sr})
    rows = []
    summaries = []
    for scenario in scenarios + ["all"]:
        if scenario == "all":
            sub_sr, sub_un = sr, unmod
        else:
            sub_sr = [r for r in sr if r.scenario == scenario]
            sub_un = [r for r in unmod if r.scenario == scenario]
        for metric in ("accuracy", "rms"):
            summary = compare_paired(sub_sr, sub_un, metric=metric)
            st = summary.stats
            rows.append((scenario, metric, summary.n_pairs, summary.n_groups,
                         st.mean_diff, st.ci_low, st.ci_high, st.t_stat,
                         st.p_two_sided, st.p_one_sided, st.zero_variance))
            summaries.append({
                "scenario": scenario,
                "metric": metric,
                "n_pairs": summary.n_pairs,
                "n_groups": summary.n_groups,
                **dataclasses.asdict(st),
            })
    _write_csv(out_dir / "compare.csv", COMPARE_HEADER, rows)
    _write_json(out_dir / "compare_summary.json", summaries)
    return ["compare.csv", "compare_summary.json"]


def _sweep_task(payload) -> list[tuple]:
    config, axis, value, scenario, seed = payload
    runs, _ = sweep(axis, [value], config.filter, [scenario], [seed],
                    config.model)
    return [(r.axis, r.value, r.scenario, r.seed, r.rms, r.accurate)
            for r in runs]


def cmd_sweep(config: RunConfig, seed: int, out_dir: Path, jobs: int) -> list[str]:
    axis = config.harness.sweep_axis
    values = parse_sweep_values(axis, config.harness.sweep_values)
    seeds = [seed + k for k in range(config.harness.n_seeds)]
    scenarios = _scenario_list(config)
    payloads = [(config, axis, value, scenario, s)
                for value in values for scenario in scenarios for s in seeds]
    rows = [row for chunk in _run_tasks(_sweep_task, payloads, jobs)
            for row in chunk]
    _write_csv(out_dir / "sweep_runs.csv",
               ("axis", "value", "scenario", "seed", "rms", "accurate"), rows)

    # Aggregate in deterministic grid order.
    cell_rows = []
    grouped: dict[tuple[str, str], list[tuple]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        key = (row[1], row[2])
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    for key in order:
        members = grouped[key]
        cell_rows.append((axis, key[0], key[1], len(members),
                          float(np.mean([m[4] for m in members])),
                          float(np.mean([float(m[5]) for m in members]))))
    _write_csv(out_dir / "sweep_cells.csv",
               ("axis", "value", "scenario", "n", "mean_rms", "mean_accuracy"),
               cell_rows)
    return ["sweep_runs.csv", "sweep_cells.csv"]


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    return 0


def _load_config(args) -> RunConfig:
    sr_override = None
    if args.sr is not None:
        sr_override = args.sr == "on"
    if args.config is None:
        return parse_config("", sr_override=sr_override)
    text = Path(args.config).read_text(encoding="utf-8")
    return parse_config(text, sr_override=sr_override)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srassim",
        description="SIRS data-assimilation experiments with space re-probing")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "write synthetic truth and observations"),
            ("fit", "assimilate a full season and write fit summaries"),
            ("forecast", "run the weekly train-then-predict protocol"),
            ("compare", "paired SR vs unmodified comparison of forecasts"),
            ("sweep", "grid runs over a re-probing/particle/target axis")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=str, default=None,
                         help="configuration file (section.key = value)")
        cmd.add_argument("--seed", type=int, default=None,
                         help=f"base RNG seed (fallback: ${SEED_ENV_VAR}, then 0)")
        cmd.add_argument("--out-dir", type=str, default="out",
                         help="output directory (created if missing)")
        cmd.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")
        cmd.add_argument("--sr", choices=("on", "off"), default=None,
                         help="force re-probing on or off")
        if name == "compare":
            cmd.add_argument("--results-sr", type=str, required=True,
                             help="forecast.csv from the re-probing runs")
            cmd.add_argument("--results-unmod", type=str, required=True,
                             help="forecast.csv from the unmodified runs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        config = _load_config(args)
        seed = _resolve_seed(args)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            outputs = cmd_simulate(config, seed, out_dir, args.jobs)
            seeds = [seed]
        elif args.command == "fit":
            outputs = cmd_fit(config, seed, out_dir, args.jobs)
            seeds = [seed]
        elif args.command == "forecast":
            outputs = cmd_forecast(config, seed, out_dir, args.jobs)
            seeds = [seed + k for k in range(config.harness.n_seeds)]
        elif args.command == "compare":
            outputs = cmd_compare(config, seed, out_dir, args.jobs,
                                  Path(args.results_sr),
                                  Path(args.results_unmod))
            seeds = [seed]
        else:
            outputs = cmd_sweep(config, seed, out_dir, args.jobs)
            seeds = [seed + k for k in range(config.harness.n_seeds)]
        _write_manifest(out_dir, args.command, config, seeds,
                        outputs + ["manifest.json"], started)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"srassim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
