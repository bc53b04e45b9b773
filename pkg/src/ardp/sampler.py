"""Blocked Gibbs sampler with a particle update for the stick-weight paths.

Each sweep updates, in order: component atoms (conjugate), allocations
(categorical), the dependence parameter psi via a Metropolis-Hastings step
followed by one conditional SMC pass that refreshes the latent Gaussian
paths (and hence all mixture weights), the total mass M via a random-walk
step on log M, and the regression coefficients when covariates are present.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

from .measures import log_stick_weights_from_eps, stick_break_rows
from .mixture import (
    BaseMeasure,
    Dataset,
    RegressionState,
    sample_allocations,
    update_components,
    update_regression,
)
from .processes import Ar1Params, ar1_log_density, copula_transform, CopulaSpec, sample_ar1_path
from .smc import conditional_smc


@dataclass
class PriorSpec:
    """Weight-process family plus the hyperparameters of the random measure."""

    kind: str = "ar1dp"
    psi: float = 0.5
    M: float = 1.0
    J: int = 50
    base: BaseMeasure = field(default_factory=BaseMeasure)

    def __post_init__(self):
        if self.kind not in ("ar1dp", "taddy", "dyk"):
            raise ValueError(f"unknown process kind {self.kind!r}")
        if self.J < 2:
            raise ValueError("truncation level J must be >= 2")
        if self.M <= 0:
            raise ValueError("M must be positive")


@dataclass
class MCMCConfig:
    """Run-length, particle and proposal settings for one chain."""

    iterations: int = 20_000
    burn_in: int = 10_000
    thin: int = 10
    particles: int = 500
    J: int | None = None
    psi_step: float = 0.3
    M_step: float = 0.3
    psi_prior: str = "uniform"
    M_shape: float = 4.0
    M_rate: float = 4.0
    seed: int = 0
    adapt: bool = True
    target_accept: float = 0.3
    resampling: str = "multinomial"
    rejuvenation_sweeps: int = 5
    label_swaps: bool = True

    def __post_init__(self):
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.particles < 2:
            raise ValueError("at least 2 particles are required")
        if self.psi_step <= 0 or self.M_step <= 0:
            raise ValueError("proposal step sizes must be positive")
        if self.psi_prior != "uniform":
            raise ValueError("only the uniform(-1, 1) prior on psi is supported")
        if self.M_shape <= 0 or self.M_rate <= 0:
            raise ValueError("the Gamma prior on M needs positive shape and rate")
        if self.resampling not in ("multinomial", "systematic"):
            raise ValueError("resampling must be 'multinomial' or 'systematic'")
        if self.rejuvenation_sweeps < 0:
            raise ValueError("rejuvenation_sweeps must be >= 0")

    @property
    def num_retained(self):
        return (self.iterations - self.burn_in + self.thin - 1) // self.thin

    def retained_iterations(self):
        return np.arange(self.burn_in, self.iterations, self.thin)


# Named run-length presets (iterations, burn_in, thin, particles).
PRESETS = {
    "applications": dict(iterations=20_000, burn_in=10_000, thin=10, particles=500),
    "simulation": dict(iterations=50_000, burn_in=25_000, thin=10, particles=500),
}


def truncnorm_sample(mean, sd, low, high, rng):
    """One draw from N(mean, sd^2) truncated to (low, high), via inverse CDF."""
    a = ndtr((low - mean) / sd)
    b = ndtr((high - mean) / sd)
    u = a + (b - a) * rng.random()
    return mean + sd * ndtri(u)


def truncnorm_logpdf(x, mean, sd, low, high):
    if not low < x < high:
        return -math.inf
    z = (x - mean) / sd
    lognorm = math.log(ndtr((high - mean) / sd) - ndtr((low - mean) / sd))
    return -0.5 * (math.log(2 * math.pi) + z * z) - math.log(sd) - lognorm


class ChainState:
    """Mutable sampler state; weights are kept in sync with (eps, M)."""

    def __init__(self, eps, psi, M, comps, alloc, reg=None, lineage=None):
        self.eps = np.asarray(eps, dtype=float)
        self.psi = float(psi)
        self.M = float(M)
        self.comps = comps
        self.alloc = np.asarray(alloc, dtype=np.int64)
        self.reg = reg
        T = self.eps.shape[0]
        self.lineage = np.zeros(T, dtype=np.int64) if lineage is None else lineage
        self.psi_step = None
        self.M_step = None
        self.weights = None
        self.refresh_weights()

    @property
    def T(self):
        return self.eps.shape[0]

    @property
    def J(self):
        return self.eps.shape[1] + 1

    def refresh_weights(self):
        self.weights = stick_break_rows(copula_transform(self.eps, CopulaSpec(self.M)))

    def allocation_counts(self):
        counts = np.zeros((self.T, self.J))
        for t in range(self.T):
            counts[t] = np.bincount(self.alloc[t], minlength=self.J)
        return counts


def pmmh_update_psi(state, config, rng):
    """Metropolis step for psi with a truncated Gaussian proposal on (-1, 1).

    The likelihood term is the AR(1) density of the current latent paths;
    the caller is expected to follow an accepted move with a conditional
    SMC pass at the new psi.
    """
    step = state.psi_step or config.psi_step
    psi_star = truncnorm_sample(state.psi, step, -1.0, 1.0, rng)
    log_ratio = (
        ar1_log_density(state.eps, Ar1Params(psi_star))
        - ar1_log_density(state.eps, Ar1Params(state.psi))
        + truncnorm_logpdf(state.psi, psi_star, step, -1.0, 1.0)
        - truncnorm_logpdf(psi_star, state.psi, step, -1.0, 1.0)
    )
    # uniform prior on (-1, 1): prior ratio is 1
    accepted = math.log(rng.random()) < log_ratio
    if accepted:
        state.psi = psi_star
    return state.psi, accepted


def _allocation_log_score(eps, M, counts):
    """sum_t counts_t . log w_t(eps, M), the multinomial log likelihood kernel."""
    logw = log_stick_weights_from_eps(eps, M)
    return float(np.einsum("tj,tj->", counts, logw))


def update_mass_M(state, config, rng, counts=None):
    """Random-walk Metropolis on log M against the allocation likelihood.

    The acceptance ratio combines the Gamma(shape, rate) prior, the
    multinomial likelihood of the allocations under weights recomputed at
    the proposed mass, and the log-scale proposal Jacobian M*/M.
    """
    if counts is None:
        counts = state.allocation_counts()
    step = state.M_step or config.M_step
    M_star = state.M * math.exp(step * rng.standard_normal())
    log_ratio = (
        config.M_shape * (math.log(M_star) - math.log(state.M))
        - config.M_rate * (M_star - state.M)
        + _allocation_log_score(state.eps, M_star, counts)
        - _allocation_log_score(state.eps, state.M, counts)
    )
    accepted = math.log(rng.random()) < log_ratio
    if accepted:
        state.M = M_star
        state.refresh_weights()
    return state.M, accepted


def _stick_log_lik(eps, M, c_here, c_after):
    """Per-stick allocation log likelihood c*log(xi) + c_after*log(1-xi).

    The multinomial likelihood of the allocations factorizes over sticks:
    sum_h c_th log w_th = sum_l [c_tl log xi_tl + (sum_{h>l} c_th) log(1-xi_tl)],
    so each stick can be updated independently given the counts.
    """
    log_surv = log_ndtr(-eps) / M
    with np.errstate(divide="ignore"):
        log_xi = np.log(-np.expm1(log_surv))
    return c_here * log_xi + c_after * log_surv


def swap_components(state, counts, rng):
    """Metropolis pass of adjacent component-label swaps.

    Swapping the sticks, atoms and allocation labels of components h and
    h+1 leaves every other weight unchanged and the priors invariant, so
    the acceptance ratio reduces to prod_t (1-xi_{t,h+1})^{c_th} /
    (1-xi_{t,h})^{c_t,h+1}.  These moves let occupied components migrate
    toward the low stick indices favored by the prior; without them the
    sampler stays locked in whatever index assignment initialization found.
    Counts are updated in place; returns the number of accepted swaps.
    """
    eps = state.eps
    J = state.J
    if J < 3:
        return 0
    log_surv = log_ndtr(-eps) / state.M  # log(1 - xi), (T, J-1)
    accepted = 0
    for h in rng.permutation(J - 2):
        log_ratio = float(
            counts[:, h] @ log_surv[:, h + 1] - counts[:, h + 1] @ log_surv[:, h]
        )
        if math.log(rng.random()) < log_ratio:
            eps[:, [h, h + 1]] = eps[:, [h + 1, h]]
            log_surv[:, [h, h + 1]] = log_surv[:, [h + 1, h]]
            counts[:, [h, h + 1]] = counts[:, [h + 1, h]]
            mu, tau = state.comps.mu, state.comps.tau
            mu[[h, h + 1]] = mu[[h + 1, h]]
            tau[[h, h + 1]] = tau[[h + 1, h]]
            at_h = state.alloc == h
            state.alloc[state.alloc == h + 1] = h
            state.alloc[at_h] = h + 1
            accepted += 1
    if accepted:
        state.refresh_weights()
    return accepted


def rejuvenate_eps(state, counts, rng, sweeps=1):
    """Per-stick Metropolis refresh of the latent field given allocations.

    The conditional SMC pass suffers path degeneracy when allocation counts
    are concentrated (fresh prior proposals essentially never beat the
    retained trajectory, freezing early time points).  This move targets the
    same full conditional p(eps | psi, M, s) coordinate-wise: for each (t, l)
    it proposes from the AR(1) prior conditional given the neighboring time
    points (the stationary process is time-reversible) and from a local
    random walk, accepting on the per-stick likelihood ratio alone.
    Acceptance fractions are returned for diagnostics.
    """
    eps = state.eps
    T, L = eps.shape
    psi, M = state.psi, state.M
    c_here = counts[:, :L]
    c_after = counts[:, ::-1].cumsum(axis=1)[:, ::-1][:, 1:]
    accepted = 0
    proposed = 0
    # random-walk scale shrinks with the per-stick information
    rw_scale = 2.4 / np.sqrt(1.0 + 0.5 * (c_here + c_after))
    for _ in range(sweeps):
        for parity in (0, 1):
            for t in range(parity, T, 2):
                if T == 1:
                    mean, var = np.zeros(L), 1.0
                elif t == 0:
                    mean, var = psi * eps[1], 1.0 - psi**2
                elif t == T - 1:
                    mean, var = psi * eps[t - 1], 1.0 - psi**2
                else:
                    mean = psi * (eps[t - 1] + eps[t + 1]) / (1.0 + psi**2)
                    var = (1.0 - psi**2) / (1.0 + psi**2)
                sd = math.sqrt(max(var, 1e-300))
                cur = _stick_log_lik(eps[t], M, c_here[t], c_after[t])
                # independence proposal from the prior conditional
                prop = mean + sd * rng.standard_normal(L)
                new = _stick_log_lik(prop, M, c_here[t], c_after[t])
                take = np.log(rng.random(L)) < new - cur
                eps[t][take] = prop[take]
                cur = np.where(take, new, cur)
                accepted += int(take.sum())
                # local random walk, acceptance includes the prior conditional
                prop = eps[t] + rw_scale[t] * sd * rng.standard_normal(L)
                new = _stick_log_lik(prop, M, c_here[t], c_after[t])
                log_ratio = (new - cur
                             + ((eps[t] - mean) ** 2 - (prop - mean) ** 2) / (2.0 * var))
                take = np.log(rng.random(L)) < log_ratio
                eps[t][take] = prop[take]
                accepted += int(take.sum())
                proposed += 2 * L
    state.refresh_weights()
    return accepted / max(proposed, 1)


class Trace:
    """Thinned post-burn-in draws plus provenance, immutable once built."""

    def __init__(self, psi, M, alloc, theta_mu, theta_tau, weights, beta,
                 iterations, seed, meta=None, diagnostics=None):
        self.psi = psi
        self.M = M
        self.alloc = alloc
        self.theta_mu = theta_mu
        self.theta_tau = theta_tau
        self.weights = weights
        self.beta = beta
        self.iterations = iterations
        self.seed = seed
        self.meta = dict(meta or {})
        self.diagnostics = dict(diagnostics or {})

    def __len__(self):
        return self.psi.size

    @property
    def T(self):
        return self.alloc.shape[1]

    @property
    def n(self):
        return self.alloc.shape[2]

    @property
    def J(self):
        return self.theta_mu.shape[1]

    @property
    def kernel_scale(self):
        return float(self.meta.get("kernel_scale", 1.0))


def _adapt_step(current, accepted, iteration, target):
    gain = 1.0 / (iteration + 1) ** 0.6
    step = current * math.exp(gain * ((1.0 if accepted else 0.0) - target))
    return min(max(step, 1e-3), 10.0)


def run_mcmc(data, prior, config, progress=None):
    """Run one chain of the full posterior sampler and return its trace.

    Fully reproducible: all randomness flows from ``config.seed`` through a
    single generator in a fixed order.
    """
    if prior.kind != "ar1dp":
        raise ValueError(
            "posterior inference requires the autoregressive copula process; "
            "'taddy' and 'dyk' support prior simulation only"
        )
    J = config.J if config.J is not None else prior.J
    if J < 2:
        raise ValueError("truncation level J must be >= 2")
    base = prior.base
    T = data.T
    if T < 1:
        raise ValueError("the panel must contain at least one time point")
    rng = np.random.default_rng(config.seed)

    # Initialization: independent latent paths, atoms from the base measure,
    # one allocation pass under the implied prior weights.
    eps = sample_ar1_path(Ar1Params(0.0), T, J - 1, rng)
    M0 = config.M_shape / config.M_rate
    comps = base.sample(J, rng)
    reg = RegressionState.zeros(T, data.p) if data.p else None
    weights0 = stick_break_rows(copula_transform(eps, CopulaSpec(M0)))
    alloc = sample_allocations(data, weights0, comps, reg, base, rng)
    state = ChainState(eps, 0.0, M0, comps, alloc, reg)
    state.psi_step = config.psi_step
    state.M_step = config.M_step

    m = config.num_retained
    rec_psi = np.empty(m)
    rec_M = np.empty(m)
    rec_alloc = np.empty((m, T, data.n), dtype=np.int16)
    rec_mu = np.empty((m, J))
    rec_tau = np.empty((m, J))
    rec_w = np.empty((m, T, J))
    rec_beta = np.empty((m, T, data.p)) if data.p else None
    psi_acc = np.zeros(config.iterations, dtype=np.uint8)
    M_acc = np.zeros(config.iterations, dtype=np.uint8)

    keep = 0
    for i in range(config.iterations):
        state.comps = update_components(state.alloc, data, state.reg, base, J, rng)
        state.alloc = sample_allocations(data, state.weights, state.comps, state.reg, base, rng)

        _, accepted_psi = pmmh_update_psi(state, config, rng)
        _, path, lineage = conditional_smc(
            state.alloc, state.psi, state.M, (state.eps, state.lineage),
            config.particles, rng, resampling=config.resampling,
        )
        state.eps = path
        state.lineage = lineage
        state.refresh_weights()

        counts = state.allocation_counts()
        if config.label_swaps:
            swap_components(state, counts, rng)
        if config.rejuvenation_sweeps:
            rejuvenate_eps(state, counts, rng, config.rejuvenation_sweeps)
        _, accepted_M = update_mass_M(state, config, rng, counts)

        if data.p:
            state.reg = update_regression(data, state.alloc, state.comps, state.reg, base, rng)

        psi_acc[i] = accepted_psi
        M_acc[i] = accepted_M
        if config.adapt and i < config.burn_in:
            state.psi_step = _adapt_step(state.psi_step, accepted_psi, i, config.target_accept)
            state.M_step = _adapt_step(state.M_step, accepted_M, i, config.target_accept)

        if i >= config.burn_in and (i - config.burn_in) % config.thin == 0:
            rec_psi[keep] = state.psi
            rec_M[keep] = state.M
            rec_alloc[keep] = state.alloc
            rec_mu[keep] = state.comps.mu
            rec_tau[keep] = state.comps.tau
            rec_w[keep] = state.weights
            if rec_beta is not None:
                rec_beta[keep] = state.reg.beta
            keep += 1
        if progress is not None and (i + 1) % max(1, config.iterations // 20) == 0:
            progress(i + 1, config.iterations)

    meta = {
        "kernel_scale": base.kernel_scale,
        "time_labels": list(data.time_labels),
        "unit_labels": list(data.unit_labels),
    }
    diagnostics = {"psi_accepts": psi_acc, "M_accepts": M_acc,
                   "final_psi_step": state.psi_step, "final_M_step": state.M_step}
    return Trace(rec_psi, rec_M, rec_alloc, rec_mu, rec_tau, rec_w, rec_beta,
                 config.retained_iterations(), config.seed, meta, diagnostics)
