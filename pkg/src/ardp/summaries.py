"""Posterior post-processing: partitions, labels, predictive densities, distances."""

import math
from dataclasses import dataclass

import numpy as np

from .measures import Partition, sample_weight_paths
from .processes import LOG_2PI


def coclustering(trace, t):
    """Posterior co-clustering probabilities at time t, an (n, n) matrix.

    Entry (i, j) is the fraction of retained draws in which units i and j
    share a mixture component at time t.
    """
    if not len(trace):
        raise ValueError("trace is empty")
    if not 0 <= t < trace.T:
        raise ValueError(f"time index {t} out of range for T={trace.T}")
    s = trace.alloc[:, t, :]
    n = s.shape[1]
    probs = np.zeros((n, n))
    for d in range(s.shape[0]):
        probs += s[d][:, None] == s[d][None, :]
    probs /= s.shape[0]
    return probs


def sampled_partitions(trace, t):
    """Distinct partitions observed at time t, in order of first occurrence."""
    seen = {}
    for d in range(len(trace)):
        part = Partition(trace.alloc[d, t, :])
        key = part.labels.tobytes()
        if key not in seen:
            seen[key] = part
    return list(seen.values())


def binder_loss(coclust, partition):
    """Pairwise-disagreement loss sum_{i<j} |1[same block] - probs(i, j)|."""
    same = partition.same_block_matrix()
    iu = np.triu_indices(coclust.shape[0], k=1)
    return float(np.abs(same[iu].astype(float) - coclust[iu]).sum())


def binder_partition(coclust, candidates):
    """The candidate partition minimizing the pairwise Binder loss.

    Ties are broken by fewer blocks, then by position in the candidate list.
    """
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    best = None
    best_key = None
    for idx, cand in enumerate(candidates):
        key = (binder_loss(coclust, cand), cand.num_blocks, idx)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


def all_partitions(n):
    """Every set partition of {0,...,n-1} as canonical Partition objects.

    Enumerated via restricted growth strings; intended for exhaustive
    searches at n <= 10.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 12:
        raise ValueError("exhaustive enumeration is limited to n <= 12")
    labels = np.zeros(n, dtype=np.int64)
    maxes = np.zeros(n, dtype=np.int64)
    out = [Partition(labels.copy())]
    i = n - 1
    while i > 0:
        if labels[i] <= maxes[i - 1]:
            labels[i] += 1
            maxes[i] = max(maxes[i - 1], labels[i])
            labels[i + 1:] = 0
            maxes[i + 1:] = maxes[i]
            out.append(Partition(labels.copy()))
            i = n - 1
        else:
            i -= 1
    return out


def label_clusters(data, partition, t):
    """Sign-based cluster labels at time t: 'man', 'neutral' or 'woman'.

    A cluster is labeled by the sign of its empirical mean when zero lies
    outside mean +/- one empirical standard deviation, and 'neutral'
    otherwise.  Singletons use sd = 0, so they are labeled by sign alone.
    """
    stats = cluster_summary(data, partition, t)
    return [row["label"] for row in stats]


def cluster_summary(data, partition, t):
    """Per-cluster size, mean, sd and label at time t, in block order."""
    y = data.y[t]
    if partition.size != y.size:
        raise ValueError("partition size does not match the number of units")
    rows = []
    for k, idx in enumerate(partition.blocks()):
        vals = y[idx]
        mean = float(vals.mean())
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        if mean < 0.0 and not (mean - sd <= 0.0 <= mean + sd):
            label = "man"
        elif mean > 0.0 and not (mean - sd <= 0.0 <= mean + sd):
            label = "woman"
        else:
            label = "neutral"
        rows.append({"cluster": k, "size": int(vals.size), "mean": mean,
                     "sd": sd, "label": label})
    return rows


@dataclass
class DensityGrid:
    """An evaluation grid with (averaged) density values at one time point."""

    grid: np.ndarray
    values: np.ndarray
    t: int


def default_grid(data, points=512, span=3.0):
    """Grid spanning the data range widened by ``span`` data standard deviations."""
    y = data.y
    sd = float(y.std()) if y.size > 1 else 1.0
    lo = float(y.min()) - span * sd
    hi = float(y.max()) + span * sd
    return np.linspace(lo, hi, points)


def _mixture_density(grid, weights, mu, prec):
    """sum_h w_h N(grid; mu_h, 1/prec_h) for one draw."""
    z = (grid[:, None] - mu[None, :]) ** 2 * prec[None, :]
    kern = np.exp(0.5 * (np.log(prec)[None, :] - LOG_2PI) - 0.5 * z)
    return kern @ weights


def posterior_predictive_grid(trace, t, grid, covariate_profile=None, chunk=256):
    """Posterior predictive density at time t, averaged over retained draws.

    Each draw contributes sum_h w_th k(y; theta_h); a covariate profile, if
    given, shifts the kernel means by x'beta_t of the same draw.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if not 0 <= t < trace.T:
        raise ValueError(f"time index {t} out of range for T={trace.T}")
    lam = trace.kernel_scale
    total = np.zeros(grid.size)
    m = len(trace)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        mu = trace.theta_mu[start:stop]
        prec = lam * trace.theta_tau[start:stop]
        w = trace.weights[start:stop, t, :]
        if covariate_profile is not None:
            offs = trace.beta[start:stop, t, :] @ np.asarray(covariate_profile, dtype=float)
            mu = mu + offs[:, None]
        z = (grid[None, :, None] - mu[:, None, :]) ** 2 * prec[:, None, :]
        kern = np.exp(0.5 * (np.log(prec)[:, None, :] - LOG_2PI) - 0.5 * z)
        total += np.einsum("dgj,dj->g", kern, w)
    return DensityGrid(grid, total / m, t)


def hellinger_distance(f, g, grid):
    """Hellinger distance sqrt(0.5 * int (sqrt(f) - sqrt(g))^2) by trapezoid rule."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if f.shape != grid.shape or g.shape != grid.shape:
        raise ValueError("f, g and grid must share one shape")
    if np.any(f < 0) or np.any(g < 0):
        raise ValueError("densities must be nonnegative")
    sq = (np.sqrt(f) - np.sqrt(g)) ** 2
    return float(np.sqrt(0.5 * np.trapezoid(sq, grid)))


def prior_hellinger_study(prior, T, replications, rng, atom_range=(-30.0, 30.0),
                          kernel_sd=1.0, grid_points=1024):
    """Distance of the random density at times 2..T from its time-1 state.

    Each replication draws shared atoms uniformly on ``atom_range``, one
    weight path from the configured stick process, and forms f_t as a
    location mixture of Gaussian kernels with sd ``kernel_sd``.  Returns a
    (replications, T-1) array of distances d(f_t, f_1).
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if T < 2:
        raise ValueError("need at least two time points")
    lo, hi = atom_range
    grid = np.linspace(lo - 6 * kernel_sd, hi + 6 * kernel_sd, grid_points)
    out = np.empty((replications, T - 1))
    for r in range(replications):
        atoms = rng.uniform(lo, hi, size=prior.J)
        w = sample_weight_paths(prior.kind, prior.psi, prior.M, T, prior.J, rng)
        prec = np.full(prior.J, 1.0 / kernel_sd**2)
        dens = [_mixture_density(grid, w[t], atoms, prec) for t in range(T)]
        for t in range(1, T):
            out[r, t - 1] = hellinger_distance(dens[t], dens[0], grid)
    return out
