"""Space re-probing (SR): random replacement of chosen state dimensions
in a small fraction of members after each update cycle.

The replaced members usually become outliers that the next update
discounts, but when system behavior shifts they let the filter keep
probing state space instead of staying trapped in a collapsed region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensembles import Ensemble
from .model import DIM_INDEX, D_BOUNDS, L_BOUNDS, R0_CEIL, R0_FLOOR

MAX_FRACTION = 0.1

# Default replacement intervals: susceptibility as a fraction of the
# population, infectious period in days, peak reproductive number.
_S_FRACTION_INTERVAL = (0.5, 0.6)
_D_INTERVAL = (2.0, 7.0)
_R0MAX_INTERVAL = (2.0, 5.0)


@dataclass(frozen=True)
class ReprobeTarget:
    """One dimension to re-probe, with its uniform replacement interval."""

    dim: str
    low: float
    high: float

    def __post_init__(self) -> None:
        if self.dim not in DIM_INDEX:
            raise ValueError(f"unknown state dimension {self.dim!r}")
        if not (np.isfinite(self.low) and np.isfinite(self.high)
                and self.low < self.high):
            raise ValueError(
                f"invalid replacement interval ({self.low}, {self.high})")


def default_targets(variable_name: str, population: float) -> ReprobeTarget:
    """Default replacement interval for S, D, or R0max."""
    key = variable_name.lower()
    if key == "s":
        lo, hi = _S_FRACTION_INTERVAL
        return ReprobeTarget("s", lo * population, hi * population)
    if key == "d":
        return ReprobeTarget("d", *_D_INTERVAL)
    if key == "r0max":
        return ReprobeTarget("r0max", *_R0MAX_INTERVAL)
    raise ValueError(f"no default re-probing target for {variable_name!r}")


@dataclass(frozen=True)
class ReprobeConfig:
    """Which dimensions to re-probe, how many members, and whether at all."""

    fraction: float = 0.02
    targets: tuple[ReprobeTarget, ...] = field(default_factory=tuple)
    enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= MAX_FRACTION:
            raise ValueError(
                f"re-probing fraction {self.fraction} outside [0, {MAX_FRACTION}]")
        targets = tuple(self.targets)
        dims = [t.dim for t in targets]
        if len(set(dims)) != len(dims):
            raise ValueError(f"duplicate re-probing targets: {dims}")
        # Canonical dimension order keeps the draw sequence deterministic
        # regardless of how the targets were listed.
        targets = tuple(sorted(targets, key=lambda t: DIM_INDEX[t.dim]))
        object.__setattr__(self, "targets", targets)

    @property
    def active(self) -> bool:
        return self.enabled and self.fraction > 0 and bool(self.targets)

    def validate(self, population: float) -> None:
        """Check that every replacement interval sits inside the clamp bounds."""
        bounds = {
            "s": (0.0, population),
            "i": (0.0, population),
            "l": L_BOUNDS,
            "d": D_BOUNDS,
            "r0max": (R0_FLOOR, R0_CEIL),
            "r0min": (R0_FLOOR, R0_CEIL),
        }
        for t in self.targets:
            lo, hi = bounds[t.dim]
            if t.low < lo or t.high > hi:
                raise ValueError(
                    f"re-probing interval ({t.low}, {t.high}) for {t.dim} "
                    f"outside clamp bounds ({lo}, {hi})")


def default_config(population: float, names=("S",), fraction: float = 0.02,
                   enabled: bool = True) -> ReprobeConfig:
    """ReprobeConfig with default intervals for the named dimensions."""
    targets = tuple(default_targets(name, population) for name in names)
    return ReprobeConfig(fraction=fraction, targets=targets, enabled=enabled)


def apply_reprobe(ensemble: Ensemble, config: ReprobeConfig, rng_seed) -> Ensemble:
    """Replace each target dimension of round(fraction*N) members.

    Members are chosen uniformly without replacement (at least one when
    the fraction is positive); replacement values are independent uniform
    draws from each target interval. Weights and all other dimensions
    are left untouched. When inactive, the input is returned unchanged
    and no random draws are consumed.
    """
    if not config.active:
        return ensemble.copy()
    rng = np.random.default_rng(rng_seed)
    n = ensemble.size
    m = max(1, int(round(config.fraction * n)))
    chosen = rng.choice(n, size=m, replace=False)
    out = ensemble.copy()
    for target in config.targets:
        out.states[chosen, DIM_INDEX[target.dim]] = rng.uniform(
            target.low, target.high, m)
    return out
