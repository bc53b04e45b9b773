"""Conditional sequential Monte Carlo over the latent Gaussian stick paths.

One retained reference trajectory is never resampled or moved; the other
R-1 particles are proposed from the AR(1) prior and weighted by the
multinomial likelihood of the observed allocations given the implied
stick-breaking weights.  Iterating the kernel leaves the conditional
posterior of the latent paths invariant.
"""

import math

import numpy as np

from .measures import log_stick_weights_from_eps


class ParticleSystem:
    """Trajectories, weights, ancestry and the retained lineage of one pass."""

    def __init__(self, paths, log_weights, norm_weights, ancestors, lineage):
        self.paths = paths              # (R, T, J-1) latent Gaussians
        self.log_weights = log_weights  # (R, T) unnormalized log emission weights
        self.norm_weights = norm_weights  # (R, T) rows sum to 1
        self.ancestors = ancestors      # (R, T-1) parent indices
        self.lineage = lineage          # (T,) indices of the retained path

    @property
    def num_particles(self):
        return self.paths.shape[0]

    @property
    def T(self):
        return self.paths.shape[1]


def multinomial_resample(weights, count, rng):
    """Draw ``count`` ancestor indices iid from a normalized weight vector."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    total = weights.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-8):
        raise ValueError(f"weights must sum to 1 within 1e-8, got {total}")
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(count), side="right").astype(np.int64)


def systematic_resample(weights, count, rng):
    """Systematic (stratified, single-uniform) counterpart of multinomial resampling."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    total = weights.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-8):
        raise ValueError(f"weights must sum to 1 within 1e-8, got {total}")
    positions = (np.arange(count) + rng.random()) / count
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right").astype(np.int64)


def _normalize_log_weights(logw):
    """Exponentiate and normalize in log space; uniform fallback if all vanish."""
    shift = logw.max()
    if not np.isfinite(shift):
        return np.full(logw.size, 1.0 / logw.size)
    w = np.exp(logw - shift)
    return w / w.sum()


def _allocation_counts(alloc, J):
    alloc = np.asarray(alloc)
    if alloc.ndim != 2:
        raise ValueError("alloc must be a (T, n) matrix (n may be zero)")
    T = alloc.shape[0]
    counts = np.zeros((T, J))
    for t in range(T):
        counts[t] = np.bincount(alloc[t], minlength=J)
    return counts


def conditional_smc(alloc, psi, M, retained, R, rng, resampling="multinomial"):
    """One conditional SMC pass over the latent stick paths.

    Parameters
    ----------
    alloc : (T, n) int array
        Observed allocations; the emission weight of a particle at time t is
        the product of its stick-breaking weights over the allocated
        components (the multinomial coefficient cancels across particles).
    psi, M : float
        AR(1) dependence and total mass of the copula transform.
    retained : (path, lineage)
        Reference trajectory, shape (T, J-1), and its lineage indices.
    R : int
        Number of particles (>= 1; with R == 1 the reference is returned
        unchanged).

    Returns
    -------
    (ParticleSystem, new_path, new_lineage)
        The completed system plus one trajectory drawn with probability
        proportional to the final weights.
    """
    if not abs(psi) < 1.0:
        raise ValueError("psi must lie strictly inside (-1, 1)")
    if R < 1:
        raise ValueError("at least one particle is required")
    ret_path, ret_lineage = retained
    ret_path = np.asarray(ret_path, dtype=float)
    if ret_path.ndim != 2:
        raise ValueError("retained path must have shape (T, J-1)")
    if not np.all(np.isfinite(ret_path)):
        raise ValueError("retained path must be finite")
    T, L = ret_path.shape
    lineage = np.asarray(ret_lineage, dtype=np.int64)
    if lineage.shape != (T,) or np.any(lineage < 0) or np.any(lineage >= R):
        raise ValueError("retained lineage must be T valid particle indices")
    counts = _allocation_counts(alloc, L + 1)
    if resampling == "multinomial":
        resample = multinomial_resample
    elif resampling == "systematic":
        resample = systematic_resample
    else:
        raise ValueError(f"unknown resampling scheme {resampling!r}")

    sd = math.sqrt(1.0 - psi**2)
    traj = np.empty((R, T, L))
    logw = np.empty((R, T))
    normw = np.empty((R, T))
    ancestors = np.empty((R, max(T - 1, 0)), dtype=np.int64)

    traj[:, 0] = rng.standard_normal((R, L))
    traj[lineage[0], 0] = ret_path[0]
    logw[:, 0] = log_stick_weights_from_eps(traj[:, 0], M) @ counts[0]
    normw[:, 0] = _normalize_log_weights(logw[:, 0])

    for t in range(1, T):
        b = lineage[t]
        parents = resample(normw[:, t - 1], R, rng)
        parents[b] = lineage[t - 1]
        ancestors[:, t - 1] = parents
        traj[:, :t] = traj[parents, :t]
        innov = rng.standard_normal((R, L))
        traj[:, t] = psi * traj[:, t - 1] + sd * innov
        traj[b, t] = ret_path[t]
        logw[:, t] = log_stick_weights_from_eps(traj[:, t], M) @ counts[t]
        normw[:, t] = _normalize_log_weights(logw[:, t])

    system = ParticleSystem(traj, logw, normw, ancestors, lineage.copy())
    pick = int(resample(normw[:, T - 1], 1, rng)[0])
    new_lineage = np.empty(T, dtype=np.int64)
    new_lineage[T - 1] = pick
    for t in range(T - 1, 0, -1):
        new_lineage[t - 1] = ancestors[new_lineage[t], t - 1]
    return system, traj[pick].copy(), new_lineage


def smc_marginal_likelihood(system):
    """SMC estimate of the log marginal likelihood of the allocation sequence.

    Sum over t of log[(1/R) * sum_r w_t^r], computed in log space from the
    stored unnormalized weights.
    """
    logw = system.log_weights
    R = system.num_particles
    total = 0.0
    for t in range(system.T):
        shift = logw[:, t].max()
        if not np.isfinite(shift):
            return -math.inf
        total += shift + math.log(np.exp(logw[:, t] - shift).sum()) - math.log(R)
    return total
