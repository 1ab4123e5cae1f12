"""Particle/ensemble collections: initialization, weights, resampling,
regularization jitter, and multiplicative inflation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    DIM_INDEX,
    DIM_NAMES,
    D_BOUNDS,
    L_BOUNDS,
    ModelState,
    N_DIMS,
    R0_CEIL,
    R0_FLOOR,
    clamp_state_array,
)

WEIGHT_SUM_TOL = 1e-9


@dataclass
class Ensemble:
    """N trajectories stored as an (n, 6) array plus normalized weights.

    Ensemble filters keep the weights uniform; particle filters update
    them each cycle.
    """

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] != N_DIMS:
            raise ValueError(f"states must be (n, {N_DIMS}), got {self.states.shape}")
        n = self.states.shape[0]
        if n < 1:
            raise ValueError("ensemble needs at least one member")
        if self.weights.shape != (n,):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match {n} members")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        total = self.weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {total!r}")

    @property
    def size(self) -> int:
        return self.states.shape[0]

    def member(self, k: int) -> ModelState:
        return ModelState.from_array(self.states[k])

    def copy(self) -> "Ensemble":
        return Ensemble(self.states.copy(), self.weights.copy())

    @classmethod
    def uniform(cls, states: np.ndarray) -> "Ensemble":
        n = states.shape[0]
        return cls(states, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class PriorRanges:
    """Per-dimension (low, high) initialization intervals."""

    s: tuple[float, float]
    i: tuple[float, float]
    l: tuple[float, float]
    d: tuple[float, float]
    r0max: tuple[float, float]
    r0min: tuple[float, float]

    @classmethod
    def default(cls, population: float) -> "PriorRanges":
        return cls(
            s=(0.4 * population, 0.9 * population),
            i=(0.0, 0.001 * population),
            l=(365.0, 3650.0),
            d=(1.5, 7.0),
            r0max=(1.3, 4.0),
            r0min=(0.8, 1.2),
        )

    def interval(self, dim: str) -> tuple[float, float]:
        return getattr(self, dim)

    def midpoints(self, dims=DIM_NAMES) -> np.ndarray:
        return np.array([(lo + hi) / 2.0 for lo, hi in
                         (self.interval(d) for d in dims)])

    def widths(self, dims=DIM_NAMES) -> np.ndarray:
        return np.array([hi - lo for lo, hi in
                         (self.interval(d) for d in dims)])

    def validate(self, population: float) -> None:
        for dim in DIM_NAMES:
            lo, hi = self.interval(dim)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid range for {dim}: ({lo}, {hi})")
        if self.s[0] < 0 or self.s[1] > population:
            raise ValueError(f"s range {self.s} outside [0, {population}]")
        if self.i[0] < 0 or self.s[1] + self.i[1] > population:
            raise ValueError(
                f"s + i upper bounds {self.s[1] + self.i[1]} exceed population")
        if self.l[0] < L_BOUNDS[0] or self.l[1] > L_BOUNDS[1]:
            raise ValueError(f"l range {self.l} outside {L_BOUNDS}")
        if self.d[0] < D_BOUNDS[0] or self.d[1] > D_BOUNDS[1]:
            raise ValueError(f"d range {self.d} outside {D_BOUNDS}")
        if self.r0min[0] < R0_FLOOR or self.r0max[1] > R0_CEIL:
            raise ValueError("r0 ranges outside clamp bounds")
        if self.r0min[1] > self.r0max[0]:
            raise ValueError(
                "r0min upper bound must not exceed r0max lower bound")


def initialize(n: int, ranges: PriorRanges, rng_seed) -> Ensemble:
    """Draw n members, each dimension uniform over its range; weights 1/n.

    Deterministic for a fixed seed. rng_seed may be an int seed or a
    numpy Generator.
    """
    if n < 1:
        raise ValueError(f"ensemble size must be >= 1, got {n}")
    for dim in DIM_NAMES:
        lo, hi = ranges.interval(dim)
        if not lo < hi:
            raise ValueError(f"invalid range for {dim}: ({lo}, {hi})")
    rng = np.random.default_rng(rng_seed)
    states = np.empty((n, N_DIMS))
    for k, dim in enumerate(DIM_NAMES):
        lo, hi = ranges.interval(dim)
        states[:, k] = rng.uniform(lo, hi, n)
    return Ensemble.uniform(states)


def effective_sample_size(weights) -> float:
    """1 / sum(w^2) for normalized weights; lies in [1, N]."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("effective_sample_size requires nonzero weights")
    return float(1.0 / np.sum(w * w))


def systematic_indices(weights, offset: float, size: int | None = None) -> np.ndarray:
    """Systematic (single-offset stratified) resampling indices.

    offset is the stratification offset in [0, 1); sample k lands at
    position (k + offset) / size on the cumulative weight axis.
    """
    w = np.asarray(weights, dtype=float)
    if not 0.0 <= offset < 1.0:
        raise ValueError(f"offset must be in [0, 1), got {offset}")
    m = len(w) if size is None else int(size)
    cum = np.cumsum(w)
    cum /= cum[-1]
    positions = (np.arange(m) + offset) / m
    idx = np.searchsorted(cum, positions, side="right")
    return np.minimum(idx, len(w) - 1)


def systematic_resample(ensemble: Ensemble, rng_seed) -> Ensemble:
    """Resample to uniform weights; copy counts are floor/ceil of N*w."""
    rng = np.random.default_rng(rng_seed)
    idx = systematic_indices(ensemble.weights, rng.random())
    return Ensemble.uniform(ensemble.states[idx].copy())


def kernel_bandwidths(states: np.ndarray, dims, bandwidth_scale: float) -> np.ndarray:
    """Per-dimension jitter bandwidths h = scale * sigma * n^(-1/(d+4)).

    sigma is the sample standard deviation of each listed dimension and
    d the number of jittered dimensions (Silverman-style factor).
    """
    n = states.shape[0]
    d_count = len(dims)
    shrink = n ** (-1.0 / (d_count + 4.0))
    out = np.empty(d_count)
    for k, dim in enumerate(dims):
        col = states[:, DIM_INDEX[dim]]
        sigma = float(np.std(col, ddof=1)) if n >= 2 else 0.0
        out[k] = bandwidth_scale * sigma * shrink
    return out


def regularize(ensemble: Ensemble, dims, bandwidth_scale: float, rng_seed,
               population: float, member_indices=None) -> Ensemble:
    """Add zero-mean Gaussian jitter to the listed dimensions.

    By default every member is jittered; member_indices restricts the
    jitter to a subset (e.g. resampled duplicates). Bandwidths come from
    the full ensemble either way. Output states are clamped.
    """
    if bandwidth_scale < 0:
        raise ValueError(f"bandwidth_scale must be >= 0, got {bandwidth_scale}")
    if bandwidth_scale == 0 or not dims:
        return ensemble.copy()
    rng = np.random.default_rng(rng_seed)
    h = kernel_bandwidths(ensemble.states, dims, bandwidth_scale)
    rows = np.arange(ensemble.size) if member_indices is None \
        else np.asarray(member_indices, dtype=int)
    out = ensemble.states.copy()
    for k, dim in enumerate(dims):
        if h[k] > 0 and len(rows):
            out[rows, DIM_INDEX[dim]] += rng.normal(0.0, h[k], len(rows))
    return Ensemble(clamp_state_array(out, population), ensemble.weights.copy())


def inflate_values(values: np.ndarray, lam: float) -> np.ndarray:
    """Scale deviations about the mean by lam; the mean is preserved."""
    mean = values.mean()
    return mean + lam * (values - mean)


def inflate(ensemble: Ensemble, lam: float, dims, population: float) -> Ensemble:
    """Multiplicative inflation of the listed dimensions about their means.

    Requires uniform weights and lam >= 1; output states are clamped.
    """
    if lam < 1.0:
        raise ValueError(f"inflation factor must be >= 1, got {lam}")
    n = ensemble.size
    if np.max(np.abs(ensemble.weights - 1.0 / n)) > 1e-9:
        raise ValueError("inflate requires uniform weights")
    if lam == 1.0 or not dims:
        return ensemble.copy()
    out = ensemble.states.copy()
    for dim in dims:
        k = DIM_INDEX[dim]
        out[:, k] = inflate_values(out[:, k], lam)
    return Ensemble(clamp_state_array(out, population), ensemble.weights.copy())


def weighted_mean_trajectory(incidences, weights=None) -> np.ndarray:
    """Per-week weighted mean of member incidences.

    incidences is (weeks, n); weights may be None (uniform), a single
    (n,) vector, or a per-week (weeks, n) array.
    """
    inc = np.atleast_2d(np.asarray(incidences, dtype=float))
    if weights is None:
        return inc.mean(axis=1)
    w = np.asarray(weights, dtype=float)
    if w.ndim == 1:
        w = np.broadcast_to(w, inc.shape)
    if w.shape != inc.shape:
        raise ValueError(f"weights shape {w.shape} does not match {inc.shape}")
    return (inc * w).sum(axis=1) / w.sum(axis=1)
