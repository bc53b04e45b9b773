"""Stick-breaking weights, truncated random measures and partition math."""

import numpy as np
from scipy.special import gammaln, log_ndtr

from .processes import weight_process


def stick_break(xi, J=None):
    """Turn J-1 stick fractions into a length-J probability vector.

    w_1 = xi_1, w_j = xi_j * prod_{l<j}(1 - xi_l), and the last weight is
    the remaining stick length prod_{l<J}(1 - xi_l), so the vector sums to
    one by construction.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1:
        raise ValueError("xi must be one-dimensional")
    if J is not None and J != xi.size + 1:
        raise ValueError(f"J={J} inconsistent with {xi.size} stick fractions")
    if np.any(xi <= 0.0) or np.any(xi >= 1.0):
        raise ValueError("stick fractions must lie strictly inside (0, 1)")
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - xi)))
    w = np.empty(xi.size + 1)
    w[:-1] = xi * remaining[:-1]
    w[-1] = remaining[-1]
    return w


def stick_break_rows(xi):
    """Row-wise :func:`stick_break` for a (T, J-1) matrix; returns (T, J)."""
    xi = np.asarray(xi, dtype=float)
    remaining = np.cumprod(1.0 - xi, axis=-1)
    w = np.empty(xi.shape[:-1] + (xi.shape[-1] + 1,))
    w[..., 0] = xi[..., 0]
    w[..., 1:-1] = xi[..., 1:] * remaining[..., :-1]
    w[..., -1] = remaining[..., -1]
    return w


def log_stick_weights_from_eps(eps, M):
    """Log stick-breaking weights computed directly from latent Gaussians.

    Uses log(1 - xi_l) = log Phi(-eps_l) / M, so weights never underflow
    even when a stick fraction rounds to 1 in linear space.  ``eps`` has
    shape (..., J-1); the result has shape (..., J).
    """
    log_surv = log_ndtr(-np.asarray(eps, dtype=float)) / M
    with np.errstate(divide="ignore"):
        log_xi = np.log(-np.expm1(log_surv))
    cum = np.cumsum(log_surv, axis=-1)
    out = np.empty(log_surv.shape[:-1] + (log_surv.shape[-1] + 1,))
    out[..., 0] = log_xi[..., 0]
    out[..., 1:-1] = log_xi[..., 1:] + cum[..., :-1]
    out[..., -1] = cum[..., -1]
    return out


def sample_weight_paths(kind, psi, M, T, J, rng):
    """Sample a (T, J) matrix of mixture weights from one of the stick processes."""
    if J < 2:
        raise ValueError("truncation level J must be >= 2")
    proc = kind if hasattr(kind, "sample_path") else weight_process(kind, psi, M)
    xi = proc.sample_path(T, J - 1, rng)
    return stick_break_rows(xi)


def eppf_log_prob(block_sizes, M):
    """Log probability of a partition with the given block sizes under a DP(M).

    p = M^l * prod_i (n_i - 1)! / prod_{i=0}^{n-1} (M + i), where l is the
    number of blocks and n the number of items.
    """
    sizes = np.asarray(block_sizes, dtype=float)
    if sizes.size == 0:
        raise ValueError("at least one block is required")
    if np.any(sizes < 1) or np.any(sizes != np.floor(sizes)):
        raise ValueError("block sizes must be positive integers")
    if M <= 0.0:
        raise ValueError("M must be positive")
    n = sizes.sum()
    l = sizes.size
    return float(
        l * np.log(M)
        + gammaln(sizes).sum()
        - (gammaln(M + n) - gammaln(M))
    )


def expected_num_clusters(n, M):
    """Prior mean number of blocks among n draws from a DP(M): sum M/(M+i-1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if M <= 0.0:
        raise ValueError("M must be positive")
    i = np.arange(n, dtype=float)
    return float((M / (M + i)).sum())


class Partition:
    """A partition of {0,...,n-1} with labels canonicalized by first appearance."""

    def __init__(self, labels):
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty vector")
        _, first_idx, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first_idx))
        self.labels = order[inverse].astype(np.int64)
        self.num_blocks = int(self.labels.max()) + 1
        self.block_sizes = np.bincount(self.labels, minlength=self.num_blocks)

    @property
    def size(self):
        return self.labels.size

    def blocks(self):
        """List of index arrays, one per block, in label order."""
        return [np.flatnonzero(self.labels == k) for k in range(self.num_blocks)]

    def same_block_matrix(self):
        """Boolean (n, n) matrix of pairwise co-membership."""
        return self.labels[:, None] == self.labels[None, :]

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(
            np.all(self.labels == other.labels)
        )

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(blocks={self.num_blocks}, n={self.size})"
