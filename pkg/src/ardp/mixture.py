"""Gaussian mixture kernel, conjugate component updates and allocation sampling.

The observation kernel is N(mu_h + x'beta_t, 1/(lambda * tau_h)) with a
Normal-Gamma base measure over (mu, tau):

    tau ~ Gamma(alpha, beta)      (rate parameterization)
    mu | tau ~ N(mu0, 1/(lambda0 * tau))

Atoms are shared across time, so a component pools residuals from every
time point that allocates to it.
"""

import math

import numpy as np

from .processes import LOG_2PI


class Dataset:
    """A complete T x n panel of scalar responses with optional covariates.

    Parameters
    ----------
    y : (T, n) array
        Observations; no missing entries allowed.
    x : (T, n, p) array, optional
        Per-observation covariate vectors.
    time_labels, unit_labels : sequences, optional
        Identifiers carried through to summaries and output files.
    """

    def __init__(self, y, x=None, time_labels=None, unit_labels=None):
        y = np.asarray(y, dtype=float)
        if y.ndim != 2:
            raise ValueError("y must be a (T, n) matrix")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains missing or non-finite entries")
        self.y = y
        if x is not None:
            x = np.asarray(x, dtype=float)
            if x.shape[:2] != y.shape or x.ndim != 3 or x.shape[2] < 1:
                raise ValueError("x must have shape (T, n, p) matching y")
            if not np.all(np.isfinite(x)):
                raise ValueError("x contains missing or non-finite entries")
        self.x = x
        self.time_labels = list(time_labels) if time_labels is not None else list(range(self.T))
        self.unit_labels = list(unit_labels) if unit_labels is not None else list(range(self.n))
        if len(self.time_labels) != self.T or len(self.unit_labels) != self.n:
            raise ValueError("label lengths must match the panel dimensions")

    @property
    def T(self):
        return self.y.shape[0]

    @property
    def n(self):
        return self.y.shape[1]

    @property
    def p(self):
        return 0 if self.x is None else self.x.shape[2]

    @classmethod
    def empty(cls, T):
        """A panel with T time points and no observations (prior-only runs)."""
        return cls(np.empty((T, 0)))


class BaseMeasure:
    """Normal-Gamma base measure plus the fixed kernel precision scale."""

    def __init__(self, mu0=0.0, lambda0=0.01, alpha=2.0, beta=1.0, kernel_scale=1.0):
        if lambda0 <= 0 or alpha <= 0 or beta <= 0 or kernel_scale <= 0:
            raise ValueError("lambda0, alpha, beta and kernel_scale must be positive")
        self.mu0 = float(mu0)
        self.lambda0 = float(lambda0)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.kernel_scale = float(kernel_scale)

    def sample(self, J, rng):
        """Draw J iid atoms (mu_h, tau_h) from the base measure."""
        tau = rng.gamma(self.alpha, 1.0 / self.beta, size=J)
        mu = self.mu0 + rng.standard_normal(J) / np.sqrt(self.lambda0 * tau)
        return ComponentParams(mu, tau)

    def as_dict(self):
        return {
            "mu0": self.mu0,
            "lambda0": self.lambda0,
            "alpha": self.alpha,
            "beta": self.beta,
            "kernel_scale": self.kernel_scale,
        }


class ComponentParams:
    """Location/precision pairs (mu_h, tau_h) for the J mixture components."""

    def __init__(self, mu, tau):
        mu = np.asarray(mu, dtype=float)
        tau = np.asarray(tau, dtype=float)
        if mu.shape != tau.shape or mu.ndim != 1:
            raise ValueError("mu and tau must be matching vectors")
        if np.any(tau <= 0.0):
            raise ValueError("component precisions must be positive")
        self.mu = mu
        self.tau = tau

    @property
    def J(self):
        return self.mu.size


class RegressionState:
    """Per-time regression coefficients with an isotropic Gaussian prior."""

    def __init__(self, beta, prior_var=10.0):
        beta = np.asarray(beta, dtype=float)
        if beta.ndim != 2:
            raise ValueError("beta must be a (T, p) matrix")
        if prior_var <= 0.0:
            raise ValueError("prior variance must be positive")
        self.beta = beta
        self.prior_var = float(prior_var)

    @classmethod
    def zeros(cls, T, p, prior_var=10.0):
        return cls(np.zeros((T, p)), prior_var)


def _offsets(data, reg):
    """x'beta_t per observation, or 0.0 when no covariates are configured."""
    if data.x is None or reg is None:
        return 0.0
    return np.einsum("tnp,tp->tn", data.x, reg.beta)


def component_log_likelihood(y, x, theta, beta_t, base):
    """Gaussian kernel log density log N(y; mu + x'beta, 1/(lambda*tau))."""
    mu, tau = theta
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    mean = mu if x is None else mu + float(np.dot(np.asarray(x), np.asarray(beta_t)))
    prec = base.kernel_scale * tau
    return -0.5 * (LOG_2PI - math.log(prec) + prec * (y - mean) ** 2)


def normal_gamma_posterior(m, sum_r, sum_r2, base):
    """Posterior Normal-Gamma parameters given pooled residual statistics.

    Accepts scalars or aligned arrays of counts, sums and sums of squares;
    with m = 0 the prior parameters come back unchanged.  Returns
    (mu_n, lambda_n, alpha_n, beta_n) where mu | tau ~ N(mu_n, 1/(lambda_n
    tau)) and tau ~ Gamma(alpha_n, beta_n).
    """
    m = np.asarray(m, dtype=float)
    sum_r = np.asarray(sum_r, dtype=float)
    sum_r2 = np.asarray(sum_r2, dtype=float)
    lam = base.kernel_scale
    rbar = np.where(m > 0, sum_r / np.maximum(m, 1.0), 0.0)
    sse = np.maximum(sum_r2 - m * rbar**2, 0.0)
    lam_n = base.lambda0 + m * lam
    mu_n = (base.lambda0 * base.mu0 + lam * sum_r) / lam_n
    alpha_n = base.alpha + 0.5 * m
    beta_n = base.beta + 0.5 * lam * sse \
        + 0.5 * base.lambda0 * lam * m * (rbar - base.mu0) ** 2 / lam_n
    return mu_n, lam_n, alpha_n, beta_n


def update_components(alloc, data, reg, base, J, rng):
    """Gibbs update of all component atoms given allocations.

    Components with no allocated observations are redrawn from the base
    measure; allocated components get the Normal-Gamma posterior given the
    residuals y - x'beta pooled over every time point.
    """
    resid = data.y - _offsets(data, reg)
    s = np.asarray(alloc).ravel()
    r = resid.ravel()
    m = np.bincount(s, minlength=J).astype(float)
    sum_r = np.bincount(s, weights=r, minlength=J)
    sum_r2 = np.bincount(s, weights=r * r, minlength=J)
    mu_n, lam_n, alpha_n, beta_n = normal_gamma_posterior(m, sum_r, sum_r2, base)
    tau = rng.gamma(alpha_n, 1.0 / beta_n)
    mu = mu_n + rng.standard_normal(J) / np.sqrt(lam_n * tau)
    return ComponentParams(mu, tau)


def allocation_log_probs(data, weights, comps, reg, base):
    """Normalized log allocation probabilities, shape (T, n, J).

    Normalization happens in log space (log-sum-exp), so the result is
    finite whenever weights and component parameters are.
    """
    lam = base.kernel_scale
    resid = data.y - _offsets(data, reg)
    prec = lam * comps.tau
    loglik = 0.5 * (np.log(prec) - LOG_2PI) - 0.5 * prec * (resid[:, :, None] - comps.mu) ** 2
    with np.errstate(divide="ignore"):
        logp = np.log(weights)[:, None, :] + loglik
    shift = logp.max(axis=2, keepdims=True)
    logp = logp - (shift + np.log(np.exp(logp - shift).sum(axis=2, keepdims=True)))
    return logp


def sample_allocations(data, weights, comps, reg, base, rng):
    """Draw s_tj ~ Categorical(w_t * kernel likelihood) for every observation.

    Sampling uses the Gumbel-max trick on the unnormalized log
    probabilities, which is exact and immune to underflow.
    """
    lam = base.kernel_scale
    resid = data.y - _offsets(data, reg)
    prec = lam * comps.tau
    loglik = 0.5 * (np.log(prec) - LOG_2PI) - 0.5 * prec * (resid[:, :, None] - comps.mu) ** 2
    with np.errstate(divide="ignore"):
        logp = np.log(weights)[:, None, :] + loglik
    gumbel = -np.log(-np.log(rng.random(logp.shape)))
    return np.argmax(logp + gumbel, axis=2)


def regression_posterior(data, alloc, comps, reg, base, t):
    """Mean and precision of the Gaussian full conditional of beta_t.

    The likelihood contribution is heteroscedastic: observation (t, j) has
    precision lambda * tau_{s_tj} around offset mu_{s_tj}.
    """
    lam = base.kernel_scale
    p = data.x.shape[2]
    tau_obs = lam * comps.tau[alloc[t]]
    resid = data.y[t] - comps.mu[alloc[t]]
    xt = data.x[t]
    prec = np.eye(p) / reg.prior_var + (xt * tau_obs[:, None]).T @ xt
    rhs = xt.T @ (tau_obs * resid)
    return np.linalg.solve(prec, rhs), prec


def update_regression(data, alloc, comps, reg, base, rng):
    """Gibbs update of beta_t from its Gaussian full conditional, per time point."""
    if data.x is None or reg is None:
        return reg
    T, _, p = data.x.shape
    new_beta = np.empty((T, p))
    for t in range(T):
        mean, prec = regression_posterior(data, alloc, comps, reg, base, t)
        chol = np.linalg.cholesky(prec)
        z = rng.standard_normal(p)
        new_beta[t] = mean + np.linalg.solve(chol.T, z)
    return RegressionState(new_beta, reg.prior_var)
