"""Train-then-predict forecasting protocol and evaluation metrics.

A forecast assimilates observations through a training week, then
propagates every member freely (no updates, no inflation, no
re-probing) to the end of the season. The season peak is the argmax
week of the mean trajectory; a prediction within one week of the
observed peak counts as accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import t as t_dist

from . import model
from .ensembles import Ensemble
from .filters import (
    ENSEMBLE_KINDS,
    AssimilationRecord,
    FilterConfig,
    mif_run,
    pmcmc_run,
    run_filter_season,
)
from .reprobe import default_config
from .truth import ObservationSeries, TruthScenario, generate_observations, generate_truth

_OBS_STREAM_TAG = 7919


@dataclass
class ForecastResult:
    """One forecast: the fitted + predicted season trajectory and its
    peak-timing and RMS scores. Weeks are 1-based season weeks."""

    scenario: str
    filter_kind: str
    sr_enabled: bool
    seed: int
    forecast_week: int
    trajectory: np.ndarray
    predicted_peak_week: int
    observed_peak_week: int
    accurate: bool
    rms: float


def rms_error(predicted, observed) -> float:
    """Root mean squared difference between equal-length sequences."""
    a = np.asarray(predicted, dtype=float)
    b = np.asarray(observed, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def peak_week(trajectory) -> int:
    """1-based week of the trajectory maximum; earliest week on ties."""
    return int(np.argmax(np.asarray(trajectory))) + 1


def peak_accuracy(predicted_peak: int, observed_peak: int) -> bool:
    """Accurate iff the predicted peak is within one week of observed."""
    return abs(int(predicted_peak) - int(observed_peak)) <= 1


def fit_season(observations: ObservationSeries, filter_config: FilterConfig,
               model_config: model.ModelConfig
               ) -> tuple[list[AssimilationRecord], Ensemble]:
    """Dispatch one full assimilation run for any filter kind."""
    kind = filter_config.filter_kind
    if kind == "MIF":
        result = mif_run(observations, filter_config, model_config)
        return result.records, result.final_ensemble
    if kind == "PMCMC":
        result = pmcmc_run(observations, filter_config, model_config)
        return result.best_records, result.best_final_ensemble
    return run_filter_season(observations, filter_config, model_config)


def _free_run_trajectory(ensemble: Ensemble, start_week: int, end_week: int,
                         model_config: model.ModelConfig) -> np.ndarray:
    """Weighted mean incidence of a free model run (deterministic)."""
    out = np.zeros(end_week - start_week)
    states = ensemble.states
    for k, week in enumerate(range(start_week, end_week)):
        states, weekly = model.simulate_week_arrays(states, week, model_config)
        out[k] = float(ensemble.weights @ model.observe(weekly, model_config))
    return out


def _assemble_result(observations: ObservationSeries, records, final_ensemble,
                     train_weeks: int, filter_config: FilterConfig,
                     model_config: model.ModelConfig, scenario_name: str
                     ) -> ForecastResult:
    season_weeks = len(observations)
    trajectory = np.empty(season_weeks)
    for rec in records[:train_weeks]:
        trajectory[rec.week] = rec.posterior_mean_incidence()
    if train_weeks < season_weeks:
        trajectory[train_weeks:] = _free_run_trajectory(
            final_ensemble, train_weeks, season_weeks, model_config)
    predicted = peak_week(trajectory)
    observed = peak_week(observations.values)
    return ForecastResult(
        scenario=scenario_name,
        filter_kind=filter_config.filter_kind,
        sr_enabled=filter_config.sr_active,
        seed=filter_config.rng_seed,
        forecast_week=train_weeks,
        trajectory=trajectory,
        predicted_peak_week=predicted,
        observed_peak_week=observed,
        accurate=peak_accuracy(predicted, observed),
        rms=rms_error(trajectory, observations.values),
    )


def run_forecast(observations: ObservationSeries, train_through_week: int,
                 filter_config: FilterConfig, model_config: model.ModelConfig,
                 scenario_name: str = "") -> ForecastResult:
    """Train on the first train_through_week observations, then integrate
    every member freely to season end and score the season trajectory."""
    season_weeks = len(observations)
    if not 1 <= train_through_week <= season_weeks:
        raise ValueError(
            f"train_through_week {train_through_week} outside [1, {season_weeks}]")
    records, final_ensemble = fit_season(
        observations.truncate(train_through_week), filter_config, model_config)
    return _assemble_result(observations, records, final_ensemble,
                            train_through_week, filter_config, model_config,
                            scenario_name)


def run_forecast_schedule(observations: ObservationSeries, weeks,
                          filter_config: FilterConfig,
                          model_config: model.ModelConfig,
                          scenario_name: str = "") -> list[ForecastResult]:
    """Forecasts for several training weeks.

    For PF and the ensemble filters the training run through week w does
    not depend on later observations, so one full-season run is shared
    and each forecast free-runs from its weekly posterior snapshot;
    results are identical to separate run_forecast calls. MIF and pMCMC
    re-run per week (their passes see the whole series).
    """
    weeks = sorted(set(int(w) for w in weeks))
    season_weeks = len(observations)
    if not weeks or weeks[0] < 1 or weeks[-1] > season_weeks:
        raise ValueError(f"forecast weeks {weeks} outside [1, {season_weeks}]")
    kind = filter_config.filter_kind
    if kind not in ("PF",) + ENSEMBLE_KINDS:
        return [run_forecast(observations, w, filter_config, model_config,
                             scenario_name) for w in weeks]
    records, _ = run_filter_season(
        observations.truncate(weeks[-1]), filter_config, model_config)
    results = []
    for w in weeks:
        results.append(_assemble_result(
            observations, records[:w], records[w - 1].posterior, w,
            filter_config, model_config, scenario_name))
    return results


@dataclass
class PairedStats:
    """Paired-difference summary: mean, 95% CI, and t statistics."""

    n: int
    mean_diff: float
    sd_diff: float
    ci_low: float
    ci_high: float
    t_stat: float
    p_two_sided: float
    p_one_sided: float
    zero_variance: bool


def paired_stats(differences) -> PairedStats:
    """t statistics of paired differences (one-sided: mean > 0)."""
    diffs = np.asarray(differences, dtype=float)
    n = len(diffs)
    if n < 1:
        raise ValueError("paired_stats needs at least one difference")
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1)) if n >= 2 else 0.0
    if sd == 0.0:
        # Degenerate sample: report the mean with a zero-variance flag.
        if mean == 0.0:
            t_stat, p_two, p_one = 0.0, 1.0, 1.0
        else:
            t_stat = math.copysign(math.inf, mean)
            p_two = 0.0
            p_one = 0.0 if mean > 0 else 1.0
        return PairedStats(n, mean, sd, mean, mean, t_stat, p_two, p_one, True)
    se = sd / math.sqrt(n)
    t_stat = mean / se
    df = n - 1
    p_two = float(2.0 * t_dist.sf(abs(t_stat), df))
    p_one = float(t_dist.sf(t_stat, df))
    half = float(t_dist.ppf(0.975, df)) * se
    return PairedStats(n, mean, sd, mean - half, mean + half, t_stat,
                       p_two, p_one, False)


@dataclass
class ComparisonSummary:
    """Paired comparison of two result sets on one metric."""

    metric: str
    n_pairs: int
    n_groups: int
    stats: PairedStats


def _result_key(r: ForecastResult) -> tuple:
    return (r.scenario, r.forecast_week, r.seed)


def _metric_value(r: ForecastResult, metric: str) -> float:
    if metric == "accuracy":
        return float(r.accurate)
    if metric == "rms":
        return float(r.rms)
    raise ValueError(f"unknown metric {metric!r}")


def compare_paired(results_sr, results_unmod, metric: str = "accuracy",
                   aggregate_seeds: bool = True) -> ComparisonSummary:
    """Mean paired difference (SR minus unmodified) with t statistics.

    Results pair by (scenario, forecast week, seed); both sets must
    cover the same keys. With aggregate_seeds the per-pair differences
    are averaged over seeds within each (scenario, week) cell before the
    t statistics, mirroring per-week averaging across locations.
    """
    sr_map = {_result_key(r): r for r in results_sr}
    un_map = {_result_key(r): r for r in results_unmod}
    if len(sr_map) != len(results_sr) or len(un_map) != len(results_unmod):
        raise ValueError("duplicate (scenario, forecast_week, seed) keys")
    if set(sr_map) != set(un_map):
        raise ValueError("result sets are not paired by (scenario, week, seed)")
    keys = sorted(sr_map)
    diffs = {k: _metric_value(sr_map[k], metric) - _metric_value(un_map[k], metric)
             for k in keys}
    if aggregate_seeds:
        cells: dict[tuple, list[float]] = {}
        for (scenario, week, _seed), d in diffs.items():
            cells.setdefault((scenario, week), []).append(d)
        values = [float(np.mean(cells[c])) for c in sorted(cells)]
    else:
        values = [diffs[k] for k in keys]
    return ComparisonSummary(metric, len(keys), len(values),
                             paired_stats(values))


@dataclass
class SweepRun:
    axis: str
    value: str
    scenario: str
    seed: int
    rms: float
    accurate: bool


@dataclass
class SweepCell:
    axis: str
    value: str
    scenario: str
    n: int
    mean_rms: float
    mean_accuracy: float


SWEEP_AXES = ("fraction", "particles", "targets")


def format_axis_value(axis: str, value) -> str:
    if axis == "targets":
        return "+".join(value)
    return repr(float(value)) if axis == "fraction" else str(int(value))


def apply_axis_value(config: FilterConfig, axis: str, value,
                     population: float) -> FilterConfig:
    """Return a config variant with one sweep axis applied."""
    if axis == "fraction":
        reprobe = config.resolved_reprobe(population)
        return replace(config, reprobe=replace(reprobe, fraction=float(value)))
    if axis == "particles":
        return replace(config, n_members=int(value))
    if axis == "targets":
        reprobe = config.resolved_reprobe(population)
        return replace(config, reprobe=default_config(
            population, names=tuple(value), fraction=reprobe.fraction,
            enabled=reprobe.enabled))
    raise ValueError(f"unknown sweep axis {axis!r}")


def observation_seed(scenario: TruthScenario, seed: int) -> np.random.SeedSequence:
    """Observation-noise stream, independent of the filter streams."""
    return np.random.SeedSequence([_OBS_STREAM_TAG, scenario.noise_seed, seed])


def build_observations(scenario: TruthScenario, model_config: model.ModelConfig,
                       oev_config, seed: int
                       ) -> tuple[np.ndarray, ObservationSeries]:
    """Deterministic truth plus a seeded noisy observation series."""
    truth, _ = generate_truth(scenario, model_config)
    series = generate_observations(
        truth, oev_config, observation_seed(scenario, seed),
        season_start_week=model_config.season_start_week)
    return truth, series


def sweep(axis: str, values, base_config: FilterConfig, scenarios, seeds,
          model_config: model.ModelConfig
          ) -> tuple[list[SweepRun], list[SweepCell]]:
    """Cartesian fit runs over axis values x scenarios x seeds.

    Each run fits the full season and scores the fitted trajectory
    (season RMS and peak accuracy); cells aggregate over seeds. Truth
    and observations depend only on (scenario, seed), so cells are
    paired across axis values.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one axis value")
    population = float(model_config.population)
    runs: list[SweepRun] = []
    cells: list[SweepCell] = []
    for value in values:
        label = format_axis_value(axis, value)
        variant = apply_axis_value(base_config, axis, value, population)
        for scenario in scenarios:
            cell_runs = []
            for seed in seeds:
                _, series = build_observations(scenario, model_config,
                                               variant, seed)
                config = replace(variant, rng_seed=seed)
                result = run_forecast(series, len(series), config,
                                      model_config, scenario_name=scenario.kind)
                run = SweepRun(axis, label, scenario.kind, seed,
                               result.rms, result.accurate)
                runs.append(run)
                cell_runs.append(run)
            cells.append(SweepCell(
                axis, label, scenario.kind, len(cell_runs),
                float(np.mean([r.rms for r in cell_runs])),
                float(np.mean([float(r.accurate) for r in cell_runs]))))
    return runs, cells
