"""SIRS epidemic state-space model with sinusoidal seasonal forcing.

A trajectory carries two dynamical variables (susceptible and infected
person counts) and four parameters (immunity period L and infectious
period D, both in days, plus the seasonal bounds of the basic
reproductive number). Weekly incidence is accumulated by RK4
integration of the infection term and mapped to an observed rate per
100,000 persons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Column layout for array-backed state collections.
DIM_NAMES = ("s", "i", "l", "d", "r0max", "r0min")
DIM_INDEX = {name: k for k, name in enumerate(DIM_NAMES)}
VARIABLE_DIMS = ("s", "i")
PARAMETER_DIMS = ("l", "d", "r0max", "r0min")
N_DIMS = len(DIM_NAMES)

# Hard parameter bounds enforced whenever a filter update, jitter, or
# re-probing step adjusts the state. Integration itself never moves
# parameters, so these are not applied inside the time stepper.
D_BOUNDS = (0.5, 14.0)
L_BOUNDS = (30.0, 3650.0)
R0_FLOOR = 0.5
R0_CEIL = 6.0

DAYS_PER_WEEK = 7.0
FORCING_PERIOD_WEEKS = 52.0


@dataclass(frozen=True)
class ModelState:
    """One trajectory: SIRS variables and parameters.

    s, i are person counts; l, d are periods in days; r0max, r0min are
    the seasonal extremes of the basic reproductive number.
    """

    s: float
    i: float
    l: float
    d: float
    r0max: float
    r0min: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.i, self.l, self.d, self.r0max, self.r0min],
                        dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ModelState":
        if len(values) != N_DIMS:
            raise ValueError(f"expected {N_DIMS} state values, got {len(values)}")
        return cls(*(float(v) for v in values))

    def validate(self, population: float) -> None:
        """Raise ValueError if any state invariant is violated."""
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite state: {self}")
        if self.s < 0 or self.i < 0:
            raise ValueError(f"negative compartment: s={self.s}, i={self.i}")
        if self.s + self.i > population:
            raise ValueError(
                f"s + i = {self.s + self.i} exceeds population {population}")
        if self.d < D_BOUNDS[0]:
            raise ValueError(f"infectious period d={self.d} below {D_BOUNDS[0]} days")
        if self.l < L_BOUNDS[0]:
            raise ValueError(f"immunity period l={self.l} below {L_BOUNDS[0]} days")
        if not (self.r0max >= self.r0min > 0):
            raise ValueError(
                f"require r0max >= r0min > 0, got {self.r0max}, {self.r0min}")


@dataclass(frozen=True)
class ModelConfig:
    """Season framing and integration settings."""

    population: int = 100_000
    season_start_week: int = 40
    weeks_per_season: int = 52
    steps_per_week: int = 7
    forcing_phase: float = 14.0
    reporting_rate: float = 1.0

    def __post_init__(self) -> None:
        if self.population <= 0:
            raise ValueError(f"population must be positive, got {self.population}")
        if self.steps_per_week < 7:
            raise ValueError(
                f"steps_per_week must be >= 7, got {self.steps_per_week}")
        if not 1 <= self.weeks_per_season <= 53:
            raise ValueError(
                f"weeks_per_season must be in [1, 53], got {self.weeks_per_season}")
        if self.reporting_rate <= 0:
            raise ValueError(
                f"reporting_rate must be positive, got {self.reporting_rate}")


def seasonal_r0(t, r0max, r0min, forcing_phase):
    """Sinusoidal R0 at time t (weeks since season start); array-safe."""
    phase = 2.0 * np.pi * (np.asarray(t, dtype=float) - forcing_phase) / FORCING_PERIOD_WEEKS
    return r0min + (r0max - r0min) * (1.0 + np.cos(phase)) / 2.0


def r0_at(t: float, state: ModelState, config: ModelConfig) -> float:
    """Basic reproductive number at time t, within [r0min, r0max]."""
    return float(seasonal_r0(t, state.r0max, state.r0min, config.forcing_phase))


def _rk4_step(s, i, l, d, r0max, r0min, t, dt, population, forcing_phase):
    """One RK4 step of (s, i) over dt weeks; returns new s, i and the
    integral of the infection term (new infections, persons)."""

    def deriv(tt, ss, ii):
        # Rates are per day; the factor 7 converts to the per-week clock.
        r0 = seasonal_r0(tt, r0max, r0min, forcing_phase)
        infection = DAYS_PER_WEEK * (r0 / d) * ii * ss / population
        ds = DAYS_PER_WEEK * (population - ss - ii) / l - infection
        di = infection - DAYS_PER_WEEK * ii / d
        return ds, di, infection

    half = 0.5 * dt
    k1s, k1i, k1c = deriv(t, s, i)
    k2s, k2i, k2c = deriv(t + half, s + half * k1s, i + half * k1i)
    k3s, k3i, k3c = deriv(t + half, s + half * k2s, i + half * k2i)
    k4s, k4i, k4c = deriv(t + dt, s + dt * k3s, i + dt * k3i)

    sixth = dt / 6.0
    s_new = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    i_new = i + sixth * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
    new_inf = sixth * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)

    # Only the dynamical variables are re-clamped here; parameters pass
    # through integration untouched.
    s_new = np.clip(s_new, 0.0, population)
    i_new = np.clip(i_new, 0.0, population - s_new)
    return s_new, i_new, np.maximum(new_inf, 0.0)


def step_arrays(states: np.ndarray, t: float, dt: float,
                config: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Advance an (n, 6) state array one RK4 step of length dt weeks."""
    s, i = states[:, 0], states[:, 1]
    l, d = states[:, 2], states[:, 3]
    r0max, r0min = states[:, 4], states[:, 5]
    s_new, i_new, new_inf = _rk4_step(
        s, i, l, d, r0max, r0min, t, dt, float(config.population),
        config.forcing_phase)
    out = states.copy()
    out[:, 0] = s_new
    out[:, 1] = i_new
    return out, new_inf


def step(state: ModelState, t: float, dt: float,
         config: ModelConfig) -> tuple[ModelState, float]:
    """Advance one trajectory by dt weeks; returns the new state and the
    new infections accumulated over the step."""
    values = state.as_array()
    if not np.all(np.isfinite(values)) or not np.isfinite(t) or not np.isfinite(dt):
        raise ValueError("step requires finite state and times")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    out, new_inf = step_arrays(values[None, :], t, dt, config)
    return ModelState.from_array(out[0]), float(new_inf[0])


def simulate_week_arrays(states: np.ndarray, week: float,
                         config: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Advance an (n, 6) state array one week; returns the new states and
    per-member weekly incidence in persons."""
    s, i = states[:, 0].copy(), states[:, 1].copy()
    l, d = states[:, 2], states[:, 3]
    r0max, r0min = states[:, 4], states[:, 5]
    pop = float(config.population)
    dt = 1.0 / config.steps_per_week
    total = np.zeros_like(s)
    for j in range(config.steps_per_week):
        s, i, new_inf = _rk4_step(
            s, i, l, d, r0max, r0min, week + j * dt, dt, pop,
            config.forcing_phase)
        total += new_inf
    out = states.copy()
    out[:, 0] = s
    out[:, 1] = i
    return out, total


def simulate_week(state: ModelState, week: float,
                  config: ModelConfig) -> tuple[ModelState, float]:
    """Advance one trajectory a full week of steps_per_week substeps."""
    values = state.as_array()
    if not np.all(np.isfinite(values)):
        raise ValueError("simulate_week requires a finite state")
    out, incidence = simulate_week_arrays(values[None, :], week, config)
    return ModelState.from_array(out[0]), float(incidence[0])


def observe(weekly_incidence, config: ModelConfig):
    """Map weekly incidence in persons to the observed rate per 100,000."""
    return weekly_incidence / config.population * 100_000.0 * config.reporting_rate


def clamp_state_array(states: np.ndarray, population: float) -> np.ndarray:
    """Clamp an (n, 6) state array to the physical domain.

    Applied after every filter update, jitter, or re-probing adjustment:
    s into [0, population], i into [0, population - s], d and l into
    their hard bounds, and r0min into [R0_FLOOR, r0max] after r0max is
    clamped into [R0_FLOOR, R0_CEIL].
    """
    out = states.copy()
    out[:, 0] = np.clip(out[:, 0], 0.0, population)
    out[:, 1] = np.clip(out[:, 1], 0.0, population - out[:, 0])
    out[:, 2] = np.clip(out[:, 2], *L_BOUNDS)
    out[:, 3] = np.clip(out[:, 3], *D_BOUNDS)
    out[:, 4] = np.clip(out[:, 4], R0_FLOOR, R0_CEIL)
    out[:, 5] = np.clip(out[:, 5], R0_FLOOR, out[:, 4])
    return out


def clamp_state(state: ModelState, config: ModelConfig) -> ModelState:
    """Clamp a single trajectory to the physical domain."""
    out = clamp_state_array(state.as_array()[None, :], float(config.population))
    return ModelState.from_array(out[0])
