"""Synthetic ground-truth epidemics and noisy weekly observation series.

The two_strain scenario injects a mid-season susceptibility boost plus a
reseeding of infections, producing a second epidemic wave that the
single-strain model class cannot represent: the model-misspecification
regime the re-probing step is designed to absorb.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filters import obs_error_variance
from .model import ModelConfig, ModelState, clamp_state, observe, simulate_week

SCENARIO_KINDS = ("unimodal", "two_strain")

_DEFAULT_UNIMODAL = ModelState(s=60_000.0, i=10.0, l=1460.0, d=3.0,
                               r0max=2.5, r0min=1.1)


@dataclass(frozen=True)
class TruthScenario:
    """Ground-truth generator settings.

    For two_strain runs, at switch_week the susceptible pool jumps by
    susceptibility_boost * population (capped at population - I) and
    reseed_infected persons are added to I.
    """

    kind: str = "unimodal"
    initial_state: ModelState = field(default_factory=lambda: _DEFAULT_UNIMODAL)
    switch_week: int = 15
    susceptibility_boost: float = 0.3
    reseed_infected: float = 50.0
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not 0.0 <= self.susceptibility_boost <= 0.5:
            raise ValueError(
                f"susceptibility_boost {self.susceptibility_boost} outside [0, 0.5]")
        if self.reseed_infected < 0:
            raise ValueError(
                f"reseed_infected must be >= 0, got {self.reseed_infected}")
        if self.switch_week < 0:
            raise ValueError(f"switch_week must be >= 0, got {self.switch_week}")

    @classmethod
    def default(cls, kind: str, population: float = 100_000.0,
                noise_seed: int = 0) -> "TruthScenario":
        """Scenario with the standard truth parameters scaled to population."""
        state = ModelState(s=0.6 * population, i=1e-4 * population,
                           l=1460.0, d=3.0, r0max=2.5, r0min=1.1)
        return cls(kind=kind, initial_state=state, noise_seed=noise_seed)


@dataclass
class ObservationSeries:
    """Weekly observed incidence per 100,000 with per-week error variance."""

    values: np.ndarray
    oev: np.ndarray
    season_start_week: int = 40

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.oev = np.asarray(self.oev, dtype=float)
        if self.values.shape != self.oev.shape or self.values.ndim != 1:
            raise ValueError("values and oev must be matching 1-d arrays")
        if np.any(self.values < 0):
            raise ValueError("observed incidence must be nonnegative")
        if np.any(self.oev <= 0):
            raise ValueError("observational error variance must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def truncate(self, weeks: int) -> "ObservationSeries":
        return ObservationSeries(self.values[:weeks].copy(),
                                 self.oev[:weeks].copy(),
                                 self.season_start_week)


def generate_truth(scenario: TruthScenario, model_config: ModelConfig
                   ) -> tuple[np.ndarray, list[ModelState]]:
    """Run the truth trajectory over the season.

    Returns the weekly true observed incidence (per 100,000) and the
    state sequence (initial state first, then one post-propagation state
    per week). Deterministic: no random draws.
    """
    population = float(model_config.population)
    state = scenario.initial_state
    state.validate(population)
    weeks = model_config.weeks_per_season
    if scenario.kind == "two_strain" and not scenario.switch_week < weeks:
        raise ValueError(
            f"switch_week {scenario.switch_week} outside season of {weeks} weeks")

    incidence = np.zeros(weeks)
    states = [state]
    for week in range(weeks):
        if scenario.kind == "two_strain" and week == scenario.switch_week:
            boosted_s = min(state.s + scenario.susceptibility_boost * population,
                            population - state.i)
            state = ModelState(boosted_s, state.i + scenario.reseed_infected,
                               state.l, state.d, state.r0max, state.r0min)
            state = clamp_state(state, model_config)
        state, weekly = simulate_week(state, week, model_config)
        incidence[week] = observe(weekly, model_config)
        states.append(state)
    return incidence, states


def generate_observations(true_incidence, config, rng_seed,
                          season_start_week: int = 40) -> ObservationSeries:
    """Add heteroscedastic Gaussian noise to the true incidence.

    config supplies oev_base / oev_rho; observations are floored at
    zero; deterministic for a fixed seed.
    """
    truth = np.asarray(true_incidence, dtype=float)
    if np.any(truth < 0):
        raise ValueError("true incidence must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    oev = np.array([obs_error_variance(float(v), config) for v in truth])
    noise = rng.normal(size=len(truth)) * np.sqrt(oev)
    values = np.maximum(0.0, truth + noise)
    return ObservationSeries(values, oev, season_start_week)
