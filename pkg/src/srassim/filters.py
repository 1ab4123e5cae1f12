"""Six weekly prediction-update assimilation schemes over the SIRS model.

Particle filters: PF (conditional resampling + regularization), MIF
(iterated filtering with cooled parameter perturbations), and pMCMC
(particle marginal Metropolis-Hastings). Ensemble filters: EnKF
(perturbed observations), EAKF (deterministic shift-and-scale), and RHF
(rank histogram update). All six compose with multiplicative inflation,
post-resampling jitter, and the space re-probing step.

The observed variable is the weekly incidence rate per 100,000; the
observed-space update kernels operate on plain arrays so they can be
driven against reference systems directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import model
from .ensembles import (
    Ensemble,
    PriorRanges,
    effective_sample_size,
    inflate,
    initialize,
    regularize,
    systematic_indices,
)
from .model import DIM_NAMES, PARAMETER_DIMS, VARIABLE_DIMS, clamp_state_array, observe
from .reprobe import ReprobeConfig, apply_reprobe, default_config

FILTER_KINDS = ("PF", "MIF", "PMCMC", "ENKF", "EAKF", "RHF")
PARTICLE_KINDS = ("PF", "MIF", "PMCMC")
ENSEMBLE_KINDS = ("ENKF", "EAKF", "RHF")

_PARAM_SLICE = slice(2, 6)  # l, d, r0max, r0min columns
_NDTRI_EPS = 1e-300


@dataclass(frozen=True)
class FilterConfig:
    """Settings for one filter run.

    n_members, reprobe, prior_ranges, and pmcmc_proposal_scale may be
    left None and are resolved from the population and the standard
    defaults: 300 members for ensemble filters, 3000 particles when
    re-probing is active and 10000 when it is not.
    """

    filter_kind: str = "PF"
    n_members: int | None = None
    reprobe: ReprobeConfig | None = None
    inflation_lambda: float = 1.02
    bandwidth_scale: float = 0.9
    oev_base: float = 1.0
    oev_rho: float = 0.2
    mif_iterations: int = 5
    mif_cooling: float = 0.9
    mif_tau0_frac: float = 0.05
    pmcmc_chain_length: int = 500
    pmcmc_proposal_scale: tuple[float, float, float, float] | None = None
    rng_seed: int = 0
    prior_ranges: PriorRanges | None = None
    use_regularization: bool = True
    use_inflation: bool = True

    def __post_init__(self) -> None:
        if self.filter_kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.filter_kind!r}")
        if self.n_members is not None and self.n_members < 1:
            raise ValueError(f"n_members must be >= 1, got {self.n_members}")
        if self.oev_base <= 0:
            raise ValueError(f"oev_base must be positive, got {self.oev_base}")
        if self.oev_rho < 0:
            raise ValueError(f"oev_rho must be >= 0, got {self.oev_rho}")
        if self.inflation_lambda < 1.0:
            raise ValueError(
                f"inflation_lambda must be >= 1, got {self.inflation_lambda}")
        if self.bandwidth_scale < 0:
            raise ValueError(
                f"bandwidth_scale must be >= 0, got {self.bandwidth_scale}")
        if self.mif_iterations < 1:
            raise ValueError(
                f"mif_iterations must be >= 1, got {self.mif_iterations}")
        if not 0.0 < self.mif_cooling < 1.0:
            raise ValueError(
                f"mif_cooling must be in (0, 1), got {self.mif_cooling}")
        if self.mif_tau0_frac < 0:
            raise ValueError(
                f"mif_tau0_frac must be >= 0, got {self.mif_tau0_frac}")
        if self.pmcmc_chain_length < 1:
            raise ValueError(
                f"pmcmc_chain_length must be >= 1, got {self.pmcmc_chain_length}")
        if self.pmcmc_proposal_scale is not None:
            scale = tuple(self.pmcmc_proposal_scale)
            if len(scale) != len(PARAMETER_DIMS) or any(v < 0 for v in scale):
                raise ValueError(
                    "pmcmc_proposal_scale needs one nonnegative value per "
                    f"parameter {PARAMETER_DIMS}")

    @property
    def sr_active(self) -> bool:
        if self.reprobe is None:
            return True  # defaults to the standard S re-probing
        return self.reprobe.active

    def resolved_members(self) -> int:
        if self.n_members is not None:
            return self.n_members
        if self.filter_kind in ENSEMBLE_KINDS:
            return 300
        return 3000 if self.sr_active else 10000

    def resolved_reprobe(self, population: float) -> ReprobeConfig:
        cfg = self.reprobe if self.reprobe is not None else default_config(population)
        cfg.validate(population)
        return cfg

    def resolved_ranges(self, population: float) -> PriorRanges:
        ranges = self.prior_ranges if self.prior_ranges is not None \
            else PriorRanges.default(population)
        ranges.validate(population)
        return ranges

    def resolved_proposal_scale(self, ranges: PriorRanges) -> np.ndarray:
        if self.pmcmc_proposal_scale is not None:
            return np.asarray(self.pmcmc_proposal_scale, dtype=float)
        return 0.02 * ranges.widths(PARAMETER_DIMS)

    def jitter_dims(self) -> tuple[str, ...]:
        # PF jitters the full state; MIF and pMCMC treat parameters as
        # constant within a pass and jitter only the model variables.
        return DIM_NAMES if self.filter_kind == "PF" else VARIABLE_DIMS


@dataclass
class AssimilationRecord:
    """One weekly cycle: prior/posterior member incidences and the
    posterior ensemble snapshot used to start the next cycle."""

    week: int
    prior_incidence: np.ndarray
    posterior_incidence: np.ndarray
    posterior: Ensemble
    n_eff: float | None = None
    resampled: bool = False
    flag: str | None = None
    log_marginal: float | None = None

    def posterior_mean_incidence(self) -> float:
        return float(self.posterior.weights @ self.posterior_incidence)


def obs_error_variance(z: float, config) -> float:
    """Heteroscedastic observational error variance for one observation."""
    return float(config.oev_base + (config.oev_rho * z) ** 2)


def gaussian_loglik(y, z: float, obs_var: float) -> np.ndarray:
    """Log Gaussian observation density of z at predicted values y."""
    y = np.asarray(y, dtype=float)
    return -0.5 * ((z - y) ** 2 / obs_var + math.log(2.0 * math.pi * obs_var))


def reweight(weights: np.ndarray, loglik: np.ndarray
             ) -> tuple[np.ndarray, float, bool]:
    """Multiply weights by observation likelihoods and renormalize.

    Returns (posterior weights, log marginal increment, degenerate). A
    degenerate update (all likelihood mass underflows) resets the
    weights to uniform so the filter stays alive.
    """
    n = len(weights)
    with np.errstate(divide="ignore"):
        logw = np.log(weights) + loglik
    top = logw.max()
    if not np.isfinite(top):
        return np.full(n, 1.0 / n), float("-inf"), True
    w = np.exp(logw - top)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        return np.full(n, 1.0 / n), float("-inf"), True
    return w / total, float(top + math.log(total)), False


def _sample_var(y: np.ndarray) -> float:
    return float(np.var(y, ddof=1)) if len(y) >= 2 else 0.0


def enkf_observed_update(y: np.ndarray, z: float, obs_var: float,
                         rng: np.random.Generator) -> np.ndarray | None:
    """Perturbed-observation Kalman update of the observed values.

    Returns None when the prior sample variance is zero (nothing to
    update against).
    """
    prior_var = _sample_var(y)
    if prior_var <= 0:
        return None
    gain = prior_var / (prior_var + obs_var)
    perturbed = z + rng.normal(0.0, math.sqrt(obs_var), len(y))
    return y + gain * (perturbed - y)


def eakf_observed_update(y: np.ndarray, z: float, obs_var: float
                         ) -> np.ndarray | None:
    """Deterministic shift-and-scale Kalman update of the observed values."""
    prior_var = _sample_var(y)
    if prior_var <= 0:
        return None
    mu = float(np.mean(y))
    post_var = 1.0 / (1.0 / prior_var + 1.0 / obs_var)
    post_mu = (obs_var * mu + prior_var * z) / (obs_var + prior_var)
    return post_mu + math.sqrt(post_var / prior_var) * (y - mu)


def _break_ties(y_sorted: np.ndarray, sd: float) -> tuple[np.ndarray, bool]:
    """Deterministically separate duplicate sorted values by 1e-9 * sd."""
    ties = np.flatnonzero(np.diff(y_sorted) == 0)
    if not len(ties):
        return y_sorted, False
    out = y_sorted.copy()
    bump = 1e-9 * sd
    offset = np.zeros(len(out))
    for k in range(1, len(out)):
        if out[k] <= out[k - 1] + offset[k - 1]:
            offset[k] = offset[k - 1] + bump
    return out + offset, True


def rhf_observed_update(y: np.ndarray, z: float, obs_var: float
                        ) -> tuple[np.ndarray | None, str | None]:
    """Rank histogram update of the observed values.

    The prior density is piecewise-constant with mass 1/(N+1) between
    adjacent order statistics and Gaussian tails holding the remaining
    mass; the posterior multiplies in the Gaussian likelihood of z, and
    each member moves to the posterior quantile at its prior rank mass
    i/(N+1). Returns (values, flag); values is None when the update is
    skipped.
    """
    n = len(y)
    if n < 3:
        raise ValueError(f"rank histogram update needs at least 3 members, got {n}")
    sd = float(np.std(y, ddof=1))
    if sd <= 0:
        return None, "zero_prior_variance"

    order = np.argsort(y, kind="stable")
    ys, tied = _break_ties(y[order], sd)
    flag = "ties_perturbed" if tied else None

    piece_mass = 1.0 / (n + 1)
    obs_sd = math.sqrt(obs_var)

    # Tail normals share the ensemble spread, with means placed so that
    # exactly 1/(N+1) prior mass lies beyond each extreme member.
    m_left = ys[0] - sd * ndtri(piece_mass)
    m_right = ys[-1] - sd * ndtri(n * piece_mass)

    # Gaussian tail times Gaussian likelihood is Gaussian: product
    # variance v' and mean m', scaled by the marginal density of z.
    v_post = 1.0 / (1.0 / sd ** 2 + 1.0 / obs_var)
    sd_post = math.sqrt(v_post)

    def tail_product(m_tail: float) -> tuple[float, float, float]:
        m_prod = v_post * (m_tail / sd ** 2 + z / obs_var)
        marg_var = sd ** 2 + obs_var
        marg = math.exp(-0.5 * (z - m_tail) ** 2 / marg_var) \
            / math.sqrt(2.0 * math.pi * marg_var)
        return m_prod, sd_post, marg

    mL, sL, cL = tail_product(m_left)
    mR, sR, cR = tail_product(m_right)

    # Posterior mass of each of the N+1 prior pieces.
    masses = np.empty(n + 1)
    masses[0] = cL * ndtr((ys[0] - mL) / sL)
    lik_cdf = ndtr((ys - z) / obs_sd)
    widths = np.diff(ys)
    dens = piece_mass / widths
    masses[1:n] = dens * np.diff(lik_cdf)
    masses[n] = cR * (1.0 - ndtr((ys[-1] - mR) / sR))

    total = masses.sum()
    if not np.isfinite(total) or total <= 0:
        return None, "likelihood_underflow"

    cum = np.concatenate(([0.0], np.cumsum(masses)))
    targets = np.arange(1, n + 1) * piece_mass * total
    pieces = np.searchsorted(cum[1:], targets, side="left")
    pieces = np.minimum(pieces, n)

    new_sorted = np.empty(n)
    for k in range(n):
        p = pieces[k]
        need = targets[k] - cum[p]
        if p == 0:
            arg = need / cL if cL > 0 else 1.0
            new_sorted[k] = mL + sL * ndtri(np.clip(arg, _NDTRI_EPS, 1.0 - 1e-16))
        elif p == n:
            base = ndtr((ys[-1] - mR) / sR)
            arg = base + (need / cR if cR > 0 else 1.0)
            new_sorted[k] = mR + sR * ndtri(np.clip(arg, _NDTRI_EPS, 1.0 - 1e-16))
        else:
            # Interior piece p spans [ys[p-1], ys[p]] with density dens[p-1].
            base = lik_cdf[p - 1]
            arg = base + need / dens[p - 1]
            new_sorted[k] = z + obs_sd * ndtri(np.clip(arg, _NDTRI_EPS, 1.0 - 1e-16))

    out = np.empty(n)
    out[order] = new_sorted
    return out, flag


def regress_on_observed(states: np.ndarray, y: np.ndarray,
                        dy: np.ndarray) -> np.ndarray:
    """Adjust every state dimension by its regression on the observed
    increments: x += cov(x, y)/var(y) * dy."""
    n = len(y)
    yc = y - y.mean()
    var_y = float(yc @ yc) / (n - 1) if n >= 2 else 0.0
    if var_y <= 0:
        return states.copy()
    beta = (states - states.mean(axis=0)).T @ yc / (n - 1) / var_y
    return states + np.outer(dy, beta)


def _finish_ensemble_update(ensemble: Ensemble, incidences: np.ndarray,
                            y_new: np.ndarray | None, flag: str | None,
                            population: float
                            ) -> tuple[Ensemble, np.ndarray, str | None]:
    if y_new is None:
        flag = flag or "zero_prior_variance"
        return ensemble.copy(), incidences.copy(), flag
    states = regress_on_observed(ensemble.states, incidences, y_new - incidences)
    states = clamp_state_array(states, population)
    return Ensemble(states, ensemble.weights.copy()), y_new, flag


def enkf_update(ensemble: Ensemble, incidences: np.ndarray, z: float,
                config: FilterConfig, model_config: model.ModelConfig,
                rng: np.random.Generator
                ) -> tuple[Ensemble, np.ndarray, str | None]:
    """Stochastic EnKF cycle update; unobserved dimensions move by
    linear regression on the observed increments."""
    obs_var = obs_error_variance(z, config)
    y_new = enkf_observed_update(incidences, z, obs_var, rng)
    return _finish_ensemble_update(ensemble, incidences, y_new, None,
                                   float(model_config.population))


def eakf_update(ensemble: Ensemble, incidences: np.ndarray, z: float,
                config: FilterConfig, model_config: model.ModelConfig
                ) -> tuple[Ensemble, np.ndarray, str | None]:
    """Deterministic EAKF cycle update."""
    obs_var = obs_error_variance(z, config)
    y_new = eakf_observed_update(incidences, z, obs_var)
    return _finish_ensemble_update(ensemble, incidences, y_new, None,
                                   float(model_config.population))


def rhf_update(ensemble: Ensemble, incidences: np.ndarray, z: float,
               config: FilterConfig, model_config: model.ModelConfig
               ) -> tuple[Ensemble, np.ndarray, str | None]:
    """Rank histogram cycle update."""
    obs_var = obs_error_variance(z, config)
    y_new, flag = rhf_observed_update(incidences, z, obs_var)
    return _finish_ensemble_update(ensemble, incidences, y_new, flag,
                                   float(model_config.population))


def pf_assimilate(ensemble: Ensemble, incidences: np.ndarray, z: float,
                  config: FilterConfig, model_config: model.ModelConfig,
                  rng: np.random.Generator,
                  sr_rng: np.random.Generator | None = None,
                  jitter_dims=DIM_NAMES, week: int = 0
                  ) -> tuple[Ensemble, AssimilationRecord]:
    """One particle-filter update cycle.

    Weights are multiplied by the Gaussian likelihood of z and
    renormalized, the re-probing step runs, and if the effective sample
    size drops below N/2 the particles are systematically resampled and
    resampled duplicates are jittered. The re-probing step draws from
    sr_rng (falling back to rng) so that disabling it leaves the
    filter's own draw sequence untouched.
    """
    population = float(model_config.population)
    obs_var = obs_error_variance(z, config)
    weights, log_marginal, degenerate = reweight(
        ensemble.weights, gaussian_loglik(incidences, z, obs_var))
    flag = "weight_underflow" if degenerate else None

    current = Ensemble(ensemble.states.copy(), weights)
    reprobe_cfg = config.resolved_reprobe(population)
    current = apply_reprobe(current, reprobe_cfg,
                            sr_rng if sr_rng is not None else rng)
    if reprobe_cfg.active:
        current = Ensemble(clamp_state_array(current.states, population),
                           current.weights)

    n = current.size
    n_eff = effective_sample_size(weights)
    resampled = n_eff < n / 2.0
    if resampled:
        idx = systematic_indices(weights, rng.random())
        states = current.states[idx].copy()
        post_incidence = incidences[idx].copy()
        current = Ensemble.uniform(states)
        duplicates = np.flatnonzero(np.diff(idx, prepend=-1) == 0)
        if config.use_regularization and config.bandwidth_scale > 0 \
                and len(duplicates):
            current = regularize(current, jitter_dims, config.bandwidth_scale,
                                 rng, population, member_indices=duplicates)
    else:
        post_incidence = incidences.copy()

    record = AssimilationRecord(
        week=week,
        prior_incidence=incidences.copy(),
        posterior_incidence=post_incidence,
        posterior=current,
        n_eff=n_eff,
        resampled=resampled,
        flag=flag,
        log_marginal=log_marginal,
    )
    return current, record


def _pf_pass(z_values: np.ndarray, ensemble: Ensemble, config: FilterConfig,
             model_config: model.ModelConfig, rng: np.random.Generator,
             sr_rng: np.random.Generator, jitter_dims,
             param_sigma: np.ndarray | None = None, keep_records: bool = True
             ) -> tuple[list[AssimilationRecord], Ensemble, float]:
    """One particle-filter season; optionally perturbs parameters with a
    per-dimension random walk before each weekly prediction (MIF)."""
    records: list[AssimilationRecord] = []
    log_likelihood = 0.0
    population = float(model_config.population)
    current = ensemble
    for week, z in enumerate(z_values):
        if param_sigma is not None:
            states = current.states.copy()
            states[:, _PARAM_SLICE] += rng.normal(
                size=(current.size, len(PARAMETER_DIMS))) * param_sigma
            current = Ensemble(clamp_state_array(states, population),
                               current.weights)
        states, weekly_inc = model.simulate_week_arrays(
            current.states, week, model_config)
        incidences = observe(weekly_inc, model_config)
        current = Ensemble(states, current.weights)
        current, record = pf_assimilate(
            current, incidences, float(z), config, model_config, rng, sr_rng,
            jitter_dims=jitter_dims, week=week)
        log_likelihood += record.log_marginal
        if keep_records:
            records.append(record)
    return records, current, log_likelihood


def _spawn_streams(seed_seq: np.random.SeedSequence
                   ) -> tuple[np.random.Generator, np.random.Generator]:
    """Filter stream plus an independent re-probing stream."""
    filter_ss, sr_ss = seed_seq.spawn(2)
    return np.random.default_rng(filter_ss), np.random.default_rng(sr_ss)


def _observation_values(observations) -> np.ndarray:
    # Accepts an ObservationSeries or any array of weekly observed values.
    values = getattr(observations, "values", observations)
    return np.asarray(values, dtype=float)


def run_filter_season(observations, config: FilterConfig,
                      model_config: model.ModelConfig
                      ) -> tuple[list[AssimilationRecord], Ensemble]:
    """Run one season of weekly prediction-update cycles.

    Parameters ride along as part of the updated/jittered state for PF
    and the ensemble filters; for the MIF and PMCMC kinds they are held
    fixed at their initial per-member draws within the pass (their outer
    estimation loops live in mif_run / pmcmc_run).
    """
    z_values = _observation_values(observations)
    if len(z_values) == 0:
        raise ValueError("run_filter_season needs at least one observation")
    population = float(model_config.population)
    ranges = config.resolved_ranges(population)
    n = config.resolved_members()

    rng, sr_rng = _spawn_streams(np.random.SeedSequence(config.rng_seed))
    ensemble = initialize(n, ranges, rng)

    if config.filter_kind in PARTICLE_KINDS:
        records, final, _ = _pf_pass(
            z_values, ensemble, config, model_config, rng, sr_rng,
            jitter_dims=config.jitter_dims())
        return records, final

    reprobe_cfg = config.resolved_reprobe(population)
    records: list[AssimilationRecord] = []
    current = ensemble
    for week, z in enumerate(z_values):
        states, weekly_inc = model.simulate_week_arrays(
            current.states, week, model_config)
        incidences = observe(weekly_inc, model_config)
        current = Ensemble(states, current.weights)

        if config.filter_kind == "ENKF":
            current, post_y, flag = enkf_update(
                current, incidences, float(z), config, model_config, rng)
        elif config.filter_kind == "EAKF":
            current, post_y, flag = eakf_update(
                current, incidences, float(z), config, model_config)
        else:
            current, post_y, flag = rhf_update(
                current, incidences, float(z), config, model_config)

        if config.use_inflation and config.inflation_lambda > 1.0:
            current = inflate(current, config.inflation_lambda, DIM_NAMES,
                              population)
        current = apply_reprobe(current, reprobe_cfg, sr_rng)
        if reprobe_cfg.active:
            current = Ensemble(clamp_state_array(current.states, population),
                               current.weights)

        records.append(AssimilationRecord(
            week=week,
            prior_incidence=incidences,
            posterior_incidence=post_y,
            posterior=current,
            flag=flag,
        ))
    return records, current


def _init_with_params(n: int, ranges: PriorRanges, theta: np.ndarray,
                      rng: np.random.Generator) -> Ensemble:
    """Variables drawn uniform from the prior; parameters pinned at theta."""
    states = np.empty((n, model.N_DIMS))
    for k, dim in enumerate(VARIABLE_DIMS):
        lo, hi = ranges.interval(dim)
        states[:, k] = rng.uniform(lo, hi, n)
    states[:, _PARAM_SLICE] = theta
    return Ensemble.uniform(states)


@dataclass
class MifResult:
    """Iterated-filtering output: the parameter point estimate, the start
    points per iteration, and the final filtering pass at the estimate."""

    parameters: dict[str, float]
    records: list[AssimilationRecord]
    final_ensemble: Ensemble
    history: np.ndarray


def _filtered_param_mean(records: list[AssimilationRecord]) -> np.ndarray:
    """Weighted filtered parameter mean, averaged over the season."""
    means = [rec.posterior.weights @ rec.posterior.states[:, _PARAM_SLICE]
             for rec in records]
    return np.mean(means, axis=0)


def mif_run(observations, config: FilterConfig,
            model_config: model.ModelConfig) -> MifResult:
    """Maximum-likelihood parameter estimation via iterated filtering.

    Each pass runs a particle filter whose parameters receive zero-mean
    Gaussian perturbations with standard deviation tau0 * cooling^m per
    week; after each pass the start point moves to the weighted filtered
    parameter mean. The returned records come from a final pass at the
    estimate with the perturbations switched off.
    """
    z_values = _observation_values(observations)
    population = float(model_config.population)
    ranges = config.resolved_ranges(population)
    n = config.resolved_members()

    tau0 = config.mif_tau0_frac * ranges.widths(PARAMETER_DIMS)
    theta = ranges.midpoints(PARAMETER_DIMS)
    history = [theta.copy()]

    seed_seq = np.random.SeedSequence(config.rng_seed)
    for m in range(config.mif_iterations):
        rng, sr_rng = _spawn_streams(seed_seq)
        sigma = tau0 * config.mif_cooling ** m
        ensemble = _init_with_params(n, ranges, theta, rng)
        records, _, _ = _pf_pass(
            z_values, ensemble, config, model_config, rng, sr_rng,
            jitter_dims=VARIABLE_DIMS, param_sigma=sigma)
        theta = _filtered_param_mean(records)
        history.append(theta.copy())

    rng, sr_rng = _spawn_streams(seed_seq)
    ensemble = _init_with_params(n, ranges, theta, rng)
    records, final, _ = _pf_pass(
        z_values, ensemble, config, model_config, rng, sr_rng,
        jitter_dims=VARIABLE_DIMS)
    parameters = dict(zip(PARAMETER_DIMS, (float(v) for v in theta)))
    return MifResult(parameters, records, final, np.array(history))


@dataclass
class PmcmcResult:
    """PMMH output: the parameter chain and the records of the
    highest-likelihood accepted run."""

    samples: np.ndarray
    param_names: tuple[str, ...]
    accepted: int
    best_log_likelihood: float
    best_records: list[AssimilationRecord]
    best_final_ensemble: Ensemble

    def posterior_median(self, name: str) -> float:
        k = self.param_names.index(name)
        return float(np.median(self.samples[:, k]))


def pmcmc_run(observations, config: FilterConfig,
              model_config: model.ModelConfig) -> PmcmcResult:
    """Particle marginal Metropolis-Hastings over the model parameters.

    Proposals are a Gaussian random walk with uniform priors over the
    prior ranges; each proposal's marginal likelihood comes from a
    particle filter whose state carries the variables only (parameters
    pinned at the proposal), with re-probing per cycle. An empty
    observation series yields a flat likelihood surface.
    """
    z_values = _observation_values(observations)
    population = float(model_config.population)
    ranges = config.resolved_ranges(population)
    n = config.resolved_members()
    scale = config.resolved_proposal_scale(ranges)
    lows = np.array([ranges.interval(d)[0] for d in PARAMETER_DIMS])
    highs = np.array([ranges.interval(d)[1] for d in PARAMETER_DIMS])

    seed_seq = np.random.SeedSequence(config.rng_seed)
    chain_rng = np.random.default_rng(seed_seq.spawn(1)[0])

    def evaluate(theta: np.ndarray, children, keep_records: bool):
        rng = np.random.default_rng(children[0])
        sr_rng = np.random.default_rng(children[1])
        ensemble = _init_with_params(n, ranges, theta, rng)
        return _pf_pass(z_values, ensemble, config, model_config, rng, sr_rng,
                        jitter_dims=VARIABLE_DIMS, keep_records=keep_records)

    theta = ranges.midpoints(PARAMETER_DIMS)
    children = seed_seq.spawn(2)
    _, _, loglik = evaluate(theta, children, keep_records=False)
    best_records, best_final, best_loglik = evaluate(theta, children, True)

    samples = [theta.copy()]
    accepted = 0
    for _ in range(config.pmcmc_chain_length):
        proposal = theta + chain_rng.normal(size=len(scale)) * scale
        in_support = bool(np.all(proposal >= lows) and np.all(proposal <= highs))
        if in_support:
            children = seed_seq.spawn(2)
            _, _, loglik_prop = evaluate(proposal, children, keep_records=False)
            # u can be 0.0; log(0) = -inf accepts, the correct limit for a
            # ratio of positive likelihoods.
            u = chain_rng.random()
            log_u = math.log(u) if u > 0 else float("-inf")
            if log_u < loglik_prop - loglik:
                theta = proposal
                loglik = loglik_prop
                accepted += 1
                if loglik_prop > best_loglik:
                    best_records, best_final, best_loglik = evaluate(
                        proposal, children, keep_records=True)
        samples.append(theta.copy())
    return PmcmcResult(np.array(samples), PARAMETER_DIMS, accepted,
                       best_loglik, best_records, best_final)
