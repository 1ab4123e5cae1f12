"""Line-oriented run configuration: `section.key = value`.

Sections are model, filter, reprobe, scenario, and harness. Absent keys
take documented defaults; unknown keys are rejected with their line
number, as are type mismatches and violated invariants. Parsing always
yields a fully resolved configuration (member counts, re-probing
targets, prior ranges, and proposal scales concrete), so serialize ->
parse round-trips exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .ensembles import PriorRanges
from .filters import FILTER_KINDS, FilterConfig
from .model import DIM_NAMES, ModelConfig, ModelState, PARAMETER_DIMS
from .reprobe import ReprobeConfig, ReprobeTarget, default_targets
from .truth import SCENARIO_KINDS, TruthScenario

SECTIONS = ("model", "filter", "reprobe", "scenario", "harness")


class ConfigError(ValueError):
    """Configuration text error, carrying the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class HarnessConfig:
    """Forecast cadence and experiment-grid settings."""

    forecast_start_week: int = 3
    forecast_end_week: int = 27
    n_seeds: int = 1
    scenarios: tuple[str, ...] = ()
    sweep_axis: str = "fraction"
    sweep_values: tuple[str, ...] = ("0.01", "0.02", "0.04")

    def __post_init__(self) -> None:
        if not 1 <= self.forecast_start_week <= self.forecast_end_week:
            raise ValueError(
                f"need 1 <= forecast_start_week <= forecast_end_week, got "
                f"{self.forecast_start_week}..{self.forecast_end_week}")
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.sweep_axis not in ("fraction", "particles", "targets"):
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")
        for name in self.scenarios:
            if name not in SCENARIO_KINDS:
                raise ValueError(f"unknown scenario kind {name!r}")


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved experiment configuration."""

    model: ModelConfig
    filter: FilterConfig
    scenario: TruthScenario
    harness: HarnessConfig

    def config_hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode("utf-8")).hexdigest()


def _to_int(raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ValueError(f"expected an integer, got {raw!r}") from None


def _to_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}") from None


def _to_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "on", "yes", "1"):
        return True
    if lowered in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {raw!r}")


def _to_pair(raw: str) -> tuple[float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'low,high', got {raw!r}")
    return _to_float(parts[0]), _to_float(parts[1])


def _to_floats(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    return tuple(_to_float(p) for p in parts)


def _to_names(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


class _Entries:
    """Raw key/value store with line numbers for error reporting."""

    def __init__(self) -> None:
        self.items: dict[tuple[str, str], tuple[str, int]] = {}

    def take(self, section: str, key: str, conv, default):
        entry = self.items.pop((section, key), None)
        if entry is None:
            return default
        raw, line = entry
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}", line) from None

    def line_of(self, section: str, key: str, fallback: int | None = None):
        entry = self.items.get((section, key))
        return entry[1] if entry is not None else fallback


def _parse_entries(text: str) -> _Entries:
    entries = _Entries()
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {line!r}",
                              lineno)
        name, _, value = line.partition("=")
        name = name.strip()
        if "." not in name:
            raise ConfigError(f"key {name!r} is missing its section", lineno)
        section, _, key = name.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r}", lineno)
        if (section, key) in entries.items:
            raise ConfigError(f"duplicate key {name}", lineno)
        entries.items[(section, key)] = (value.strip(), lineno)
    return entries


def _wrap(build, line):
    try:
        return build()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line) from None


def _build_model(entries: _Entries) -> ModelConfig:
    line = entries.line_of("model", "population")
    return _wrap(lambda: ModelConfig(
        population=entries.take("model", "population", _to_int, 100_000),
        season_start_week=entries.take("model", "season_start_week", _to_int, 40),
        weeks_per_season=entries.take("model", "weeks_per_season", _to_int, 52),
        steps_per_week=entries.take("model", "steps_per_week", _to_int, 7),
        forcing_phase=entries.take("model", "forcing_phase", _to_float, 14.0),
        reporting_rate=entries.take("model", "reporting_rate", _to_float, 1.0),
    ), line)


def _build_scenario(entries: _Entries, population: float) -> TruthScenario:
    default = TruthScenario.default("unimodal", population)
    kind_line = entries.line_of("scenario", "kind")
    kind = entries.take("scenario", "kind", str, default.kind)
    base = default.initial_state
    state = _wrap(lambda: ModelState(
        s=entries.take("scenario", "s0", _to_float, base.s),
        i=entries.take("scenario", "i0", _to_float, base.i),
        l=entries.take("scenario", "l", _to_float, base.l),
        d=entries.take("scenario", "d", _to_float, base.d),
        r0max=entries.take("scenario", "r0max", _to_float, base.r0max),
        r0min=entries.take("scenario", "r0min", _to_float, base.r0min),
    ), kind_line)
    return _wrap(lambda: TruthScenario(
        kind=kind,
        initial_state=state,
        switch_week=entries.take("scenario", "switch_week", _to_int,
                                 default.switch_week),
        susceptibility_boost=entries.take("scenario", "susceptibility_boost",
                                          _to_float, default.susceptibility_boost),
        reseed_infected=entries.take("scenario", "reseed_infected", _to_float,
                                     default.reseed_infected),
        noise_seed=entries.take("scenario", "noise_seed", _to_int,
                                default.noise_seed),
    ), kind_line)


def _build_reprobe(entries: _Entries, population: float,
                   sr_override: bool | None) -> ReprobeConfig:
    fraction_line = entries.line_of("reprobe", "fraction")
    targets_line = entries.line_of("reprobe", "targets")
    enabled = entries.take("reprobe", "enabled", _to_bool, True)
    if sr_override is not None:
        enabled = sr_override
    fraction = entries.take("reprobe", "fraction", _to_float, 0.02)
    names = entries.take("reprobe", "targets", _to_names, ("s",))

    targets = []
    for name in names:
        dim = name.lower()
        if dim not in DIM_NAMES:
            raise ConfigError(f"unknown re-probing target {name!r}", targets_line)
        interval = entries.take("reprobe", f"{dim}_range", _to_pair, None)
        if interval is not None:
            targets.append(_wrap(lambda d=dim, iv=interval: ReprobeTarget(d, *iv),
                                 entries.line_of("reprobe", f"{dim}_range",
                                                 targets_line)))
        else:
            targets.append(_wrap(lambda d=name: default_targets(d, population),
                                 targets_line))
    # Range keys for non-target dimensions are rejected as unknown later.
    config = _wrap(lambda: ReprobeConfig(fraction=fraction,
                                         targets=tuple(targets),
                                         enabled=enabled), fraction_line)
    _wrap(lambda: config.validate(population), fraction_line or targets_line)
    return config


def _build_prior_ranges(entries: _Entries, population: float) -> PriorRanges:
    default = PriorRanges.default(population)
    line = entries.line_of("filter", "prior_s")
    ranges = _wrap(lambda: PriorRanges(
        s=entries.take("filter", "prior_s", _to_pair, default.s),
        i=entries.take("filter", "prior_i", _to_pair, default.i),
        l=entries.take("filter", "prior_l", _to_pair, default.l),
        d=entries.take("filter", "prior_d", _to_pair, default.d),
        r0max=entries.take("filter", "prior_r0max", _to_pair, default.r0max),
        r0min=entries.take("filter", "prior_r0min", _to_pair, default.r0min),
    ), line)
    _wrap(lambda: ranges.validate(population), line)
    return ranges


def _to_kind(raw: str) -> str:
    kind = raw.strip().upper()
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {raw!r} "
                         f"(choose from {', '.join(FILTER_KINDS)})")
    return kind


def _build_filter(entries: _Entries, reprobe: ReprobeConfig,
                  ranges: PriorRanges) -> FilterConfig:
    kind_line = entries.line_of("filter", "kind")
    kind = entries.take("filter", "kind", _to_kind, "PF")
    scale = entries.take("filter", "pmcmc_proposal_scale", _to_floats, None)
    config = _wrap(lambda: FilterConfig(
        filter_kind=kind,
        n_members=entries.take("filter", "n_members", _to_int, None),
        reprobe=reprobe,
        inflation_lambda=entries.take("filter", "inflation_lambda", _to_float,
                                      1.02),
        bandwidth_scale=entries.take("filter", "bandwidth_scale", _to_float, 0.9),
        oev_base=entries.take("filter", "oev_base", _to_float, 1.0),
        oev_rho=entries.take("filter", "oev_rho", _to_float, 0.2),
        mif_iterations=entries.take("filter", "mif_iterations", _to_int, 5),
        mif_cooling=entries.take("filter", "mif_cooling", _to_float, 0.9),
        mif_tau0_frac=entries.take("filter", "mif_tau0_frac", _to_float, 0.05),
        pmcmc_chain_length=entries.take("filter", "pmcmc_chain_length", _to_int,
                                        500),
        pmcmc_proposal_scale=scale,
        prior_ranges=ranges,
        use_regularization=entries.take("filter", "use_regularization", _to_bool,
                                        True),
        use_inflation=entries.take("filter", "use_inflation", _to_bool, True),
    ), kind_line)
    # Freeze the member count and proposal scale so the resolved
    # configuration round-trips exactly.
    return replace(
        config,
        n_members=config.resolved_members(),
        pmcmc_proposal_scale=tuple(
            float(v) for v in config.resolved_proposal_scale(ranges)),
    )


def _build_harness(entries: _Entries) -> HarnessConfig:
    line = entries.line_of("harness", "forecast_start_week")
    return _wrap(lambda: HarnessConfig(
        forecast_start_week=entries.take("harness", "forecast_start_week",
                                         _to_int, 3),
        forecast_end_week=entries.take("harness", "forecast_end_week", _to_int,
                                       27),
        n_seeds=entries.take("harness", "n_seeds", _to_int, 1),
        scenarios=entries.take("harness", "scenarios", _to_names, ()),
        sweep_axis=entries.take("harness", "sweep_axis", str, "fraction"),
        sweep_values=entries.take("harness", "sweep_values", _to_names,
                                  ("0.01", "0.02", "0.04")),
    ), line)


def parse_config(text: str, sr_override: bool | None = None) -> RunConfig:
    """Parse configuration text into a fully resolved RunConfig.

    sr_override forces re-probing on or off before member-count
    resolution (the CLI --sr flag).
    """
    entries = _parse_entries(text)
    model_config = _build_model(entries)
    population = float(model_config.population)
    scenario = _build_scenario(entries, population)
    reprobe = _build_reprobe(entries, population, sr_override)
    ranges = _build_prior_ranges(entries, population)
    filter_config = _build_filter(entries, reprobe, ranges)
    harness = _build_harness(entries)
    if entries.items:
        (section, key), (_, line) = min(entries.items.items(),
                                        key=lambda kv: kv[1][1])
        raise ConfigError(f"unknown key {section}.{key}", line)
    return RunConfig(model_config, filter_config, scenario, harness)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_pair(pair) -> str:
    return f"{value_repr(pair[0])},{value_repr(pair[1])}"


def value_repr(v: float) -> str:
    return repr(float(v))


def serialize_config(config: RunConfig) -> str:
    """Canonical text form: fixed section order, sorted keys, all values
    explicit. Hash-stable under reordering of the source text."""
    m, f, s, h = config.model, config.filter, config.scenario, config.harness
    ranges = f.prior_ranges if f.prior_ranges is not None else \
        PriorRanges.default(m.population)
    reprobe = f.reprobe if f.reprobe is not None else \
        f.resolved_reprobe(float(m.population))

    lines: dict[str, str] = {
        "model.forcing_phase": _fmt(m.forcing_phase),
        "model.population": _fmt(m.population),
        "model.reporting_rate": _fmt(m.reporting_rate),
        "model.season_start_week": _fmt(m.season_start_week),
        "model.steps_per_week": _fmt(m.steps_per_week),
        "model.weeks_per_season": _fmt(m.weeks_per_season),
        "filter.bandwidth_scale": _fmt(f.bandwidth_scale),
        "filter.inflation_lambda": _fmt(f.inflation_lambda),
        "filter.kind": f.filter_kind,
        "filter.mif_cooling": _fmt(f.mif_cooling),
        "filter.mif_iterations": _fmt(f.mif_iterations),
        "filter.mif_tau0_frac": _fmt(f.mif_tau0_frac),
        "filter.n_members": _fmt(f.resolved_members()),
        "filter.oev_base": _fmt(f.oev_base),
        "filter.oev_rho": _fmt(f.oev_rho),
        "filter.pmcmc_chain_length": _fmt(f.pmcmc_chain_length),
        "filter.pmcmc_proposal_scale": ",".join(
            value_repr(v) for v in f.resolved_proposal_scale(ranges)),
        "filter.use_inflation": _fmt(f.use_inflation),
        "filter.use_regularization": _fmt(f.use_regularization),
        "filter.prior_s": _fmt_pair(ranges.s),
        "filter.prior_i": _fmt_pair(ranges.i),
        "filter.prior_l": _fmt_pair(ranges.l),
        "filter.prior_d": _fmt_pair(ranges.d),
        "filter.prior_r0max": _fmt_pair(ranges.r0max),
        "filter.prior_r0min": _fmt_pair(ranges.r0min),
        "reprobe.enabled": _fmt(reprobe.enabled),
        "reprobe.fraction": _fmt(reprobe.fraction),
        "reprobe.targets": ",".join(t.dim for t in reprobe.targets),
        "scenario.kind": s.kind,
        "scenario.s0": _fmt(s.initial_state.s),
        "scenario.i0": _fmt(s.initial_state.i),
        "scenario.l": _fmt(s.initial_state.l),
        "scenario.d": _fmt(s.initial_state.d),
        "scenario.r0max": _fmt(s.initial_state.r0max),
        "scenario.r0min": _fmt(s.initial_state.r0min),
        "scenario.switch_week": _fmt(s.switch_week),
        "scenario.susceptibility_boost": _fmt(s.susceptibility_boost),
        "scenario.reseed_infected": _fmt(s.reseed_infected),
        "scenario.noise_seed": _fmt(s.noise_seed),
        "harness.forecast_start_week": _fmt(h.forecast_start_week),
        "harness.forecast_end_week": _fmt(h.forecast_end_week),
        "harness.n_seeds": _fmt(h.n_seeds),
        "harness.scenarios": ",".join(h.scenarios),
        "harness.sweep_axis": h.sweep_axis,
        "harness.sweep_values": ",".join(h.sweep_values),
    }
    for target in reprobe.targets:
        lines[f"reprobe.{target.dim}_range"] = \
            f"{value_repr(target.low)},{value_repr(target.high)}"

    out = []
    for section in SECTIONS:
        prefix = section + "."
        for key in sorted(k for k in lines if k.startswith(prefix)):
            out.append(f"{key} = {lines[key]}")
    return "\n".join(out) + "\n"


def parse_sweep_values(axis: str, raw_values) -> list:
    """Convert raw sweep value strings to typed axis values."""
    if axis == "fraction":
        return [_to_float(v) for v in raw_values]
    if axis == "particles":
        return [_to_int(v) for v in raw_values]
    if axis == "targets":
        return [tuple(p.strip() for p in v.split("+") if p.strip())
                for v in raw_values]
    raise ValueError(f"unknown sweep axis {axis!r}")
