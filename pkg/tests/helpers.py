"""Shared test oracles: quadrature rules, CRP simulation, partition metrics."""

import numpy as np


def gauss_hermite_normal(n):
    """Nodes and weights such that sum(w * f(x)) = E[f(Z)] for Z ~ N(0, 1)."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    return nodes, weights / np.sqrt(2.0 * np.pi)


def crp_partition_codes(M, n, runs, rng):
    """Simulate sequential seating for `runs` restaurants of n customers.

    Returns an integer code per run identifying the induced set partition;
    labels follow first appearance, so the codes are canonical restricted
    growth strings packed in base n.
    """
    labels = np.zeros((runs, n), dtype=np.int64)
    num_blocks = np.ones(runs, dtype=np.int64)
    counts = np.zeros((runs, n), dtype=np.float64)
    counts[:, 0] = 1.0
    for i in range(1, n):
        probs = counts[:, : i + 1].copy()
        probs[np.arange(runs), num_blocks] = M
        probs /= probs.sum(axis=1, keepdims=True)
        u = rng.random(runs)
        choice = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
        labels[:, i] = choice
        counts[np.arange(runs), choice] += 1.0
        num_blocks = np.maximum(num_blocks, choice + 1)
    codes = np.zeros(runs, dtype=np.int64)
    for i in range(n):
        codes = codes * n + labels[:, i]
    return codes


def partition_code(labels, n):
    """Pack canonical labels into the same base-n code as crp_partition_codes."""
    code = 0
    for lab in labels:
        code = code * n + int(lab)
    return code


def adjusted_rand_index(a, b):
    """Adjusted Rand index between two label vectors (contingency form)."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.size
    pairs = {}
    for x, y in zip(a.tolist(), b.tolist()):
        pairs[(x, y)] = pairs.get((x, y), 0) + 1

    def comb2(m):
        return m * (m - 1) / 2.0

    sum_ij = sum(comb2(v) for v in pairs.values())
    rows, cols = {}, {}
    for (x, y), v in pairs.items():
        rows[x] = rows.get(x, 0) + v
        cols[y] = cols.get(y, 0) + v
    sum_a = sum(comb2(v) for v in rows.values())
    sum_b = sum(comb2(v) for v in cols.values())
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


class ZeroNormalRng:
    """Stand-in generator whose normal draws are all zero."""

    def standard_normal(self, size=None):
        return np.zeros(size) if size is not None else 0.0


class PresetBetaRng:
    """Stand-in generator returning queued values from beta()."""

    def __init__(self, values):
        self.values = list(values)

    def beta(self, a, b, size=None):
        value = self.values.pop(0)
        return np.full(size, value) if size is not None else value
