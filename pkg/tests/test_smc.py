import math

import numpy as np
import pytest
from scipy import stats

from ardp import (
    conditional_smc,
    multinomial_resample,
    smc_marginal_likelihood,
    systematic_resample,
)
from ardp.measures import log_stick_weights_from_eps
from ardp.processes import CopulaSpec, copula_transform
from ardp.smc import ParticleSystem

from helpers import gauss_hermite_normal


def test_multinomial_resample_degenerate():
    rng = np.random.default_rng(0)
    idx = multinomial_resample([1.0, 0.0, 0.0], 50, rng)
    assert np.all(idx == 0)


def test_multinomial_resample_uniform_frequencies():
    rng = np.random.default_rng(1)
    idx = multinomial_resample(np.full(4, 0.25), 100_000, rng)
    freq = np.bincount(idx, minlength=4) / idx.size
    chisq = idx.size * ((freq - 0.25) ** 2 / 0.25).sum()
    assert chisq < stats.chi2(3).ppf(0.99)


def test_multinomial_resample_bernoulli_mean():
    rng = np.random.default_rng(2)
    idx = multinomial_resample([0.25, 0.75], 100_000, rng)
    assert abs(np.mean(idx == 1) - 0.75) < 0.01


def test_resample_validation():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        multinomial_resample([0.5, -0.1, 0.6], 10, rng)
    with pytest.raises(ValueError):
        multinomial_resample([0.5, 0.4], 10, rng)
    with pytest.raises(ValueError):
        systematic_resample([0.7, 0.6], 10, rng)


def test_systematic_resample_proportions():
    rng = np.random.default_rng(4)
    idx = systematic_resample([0.25, 0.75], 10_000, rng)
    assert abs(np.mean(idx == 1) - 0.75) < 0.001


def _micro_alloc():
    # T=1, n=20, J=3 with counts (12, 5, 3)
    return np.array([[0] * 12 + [1] * 5 + [2] * 3])


def _quadrature_posterior(counts, M, points=60):
    """Tensor Gauss-Hermite posterior over (eps_1, eps_2) at T=1, J=3."""
    nodes, weights = gauss_hermite_normal(points)
    e1, e2 = np.meshgrid(nodes, nodes, indexing="ij")
    w2d = np.outer(weights, weights).ravel()
    eps = np.stack([e1.ravel(), e2.ravel()], axis=-1)
    loglik = log_stick_weights_from_eps(eps, M) @ counts
    post = w2d * np.exp(loglik)
    return eps, post


def test_conditional_smc_single_particle_returns_reference():
    rng = np.random.default_rng(5)
    retained = rng.standard_normal((3, 2))
    lineage = np.zeros(3, dtype=int)
    alloc = np.zeros((3, 4), dtype=int)
    _, path, new_lineage = conditional_smc(alloc, 0.5, 1.0, (retained, lineage), 1, rng)
    np.testing.assert_array_equal(path, retained)
    np.testing.assert_array_equal(new_lineage, lineage)


def test_conditional_smc_flat_likelihood_recovers_prior():
    # no observations: the returned paths are AR(1) prior draws
    rng = np.random.default_rng(6)
    psi = 0.6
    alloc = np.zeros((3, 0), dtype=int)
    path = np.zeros((3, 2))
    lineage = np.zeros(3, dtype=int)
    samples = np.empty((10_000, 3, 2))
    for i in range(samples.shape[0]):
        _, path, lineage = conditional_smc(alloc, psi, 1.0, (path, lineage), 20, rng)
        samples[i] = path
    flat = samples.reshape(-1, 6)
    assert np.abs(flat.mean(axis=0)).max() < 0.05
    assert np.abs(flat.var(axis=0) - 1.0).max() < 0.05
    lag1 = np.corrcoef(samples[:, 0, 0], samples[:, 1, 0])[0, 1]
    assert abs(lag1 - psi) < 0.05


def test_conditional_smc_preserves_reference_path():
    rng = np.random.default_rng(7)
    retained = rng.standard_normal((4, 2))
    lineage = np.array([2, 0, 3, 1])
    alloc = np.tile(np.array([[0, 0, 1, 2, 2]]), (4, 1))
    counts = np.tile(np.bincount(alloc[0], minlength=3), (4, 1)).astype(float)
    system, _, _ = conditional_smc(alloc, 0.3, 1.0, (retained, lineage), 6, rng)
    # the slot indexed by the final lineage entry holds the whole reference
    np.testing.assert_array_equal(system.paths[lineage[-1]], retained)
    # the reference weight at each time was computed from the reference value
    for t in range(4):
        expected = log_stick_weights_from_eps(retained[t], 1.0) @ counts[t]
        assert system.log_weights[lineage[t], t] == pytest.approx(expected)
    # normalized weights are probability vectors
    np.testing.assert_allclose(system.norm_weights.sum(axis=0), 1.0, atol=1e-10)
    assert system.ancestors.min() >= 0 and system.ancestors.max() < 6
    # the retained slot's ancestor is the retained slot at t-1
    for t in range(1, 4):
        assert system.ancestors[lineage[t], t - 1] == lineage[t - 1]


def test_conditional_smc_matches_quadrature_posterior():
    rng = np.random.default_rng(8)
    M = 1.0
    alloc = _micro_alloc()
    counts = np.bincount(alloc[0], minlength=3).astype(float)
    eps_grid, post = _quadrature_posterior(counts, M)
    Z = post.sum()
    xi1_grid = copula_transform(eps_grid[:, 0], CopulaSpec(M))
    oracle_mean = float((post * xi1_grid).sum() / Z)

    path = np.zeros((1, 2))
    lineage = np.zeros(1, dtype=int)
    vals = np.empty(10_000)
    for i in range(vals.size):
        _, path, lineage = conditional_smc(alloc, 0.0, M, (path, lineage), 50, rng)
        vals[i] = copula_transform(path[0, 0], CopulaSpec(M))
    assert abs(vals[200:].mean() - oracle_mean) < 0.01


def test_marginal_likelihood_flat_is_zero():
    rng = np.random.default_rng(9)
    alloc = np.zeros((3, 0), dtype=int)
    path = np.zeros((3, 2))
    system, _, _ = conditional_smc(alloc, 0.2, 1.0, (path, np.zeros(3, dtype=int)), 30, rng)
    assert smc_marginal_likelihood(system) == pytest.approx(0.0, abs=1e-12)


def test_marginal_likelihood_matches_quadrature_constant():
    rng = np.random.default_rng(10)
    M = 1.0
    alloc = _micro_alloc()
    counts = np.bincount(alloc[0], minlength=3).astype(float)
    _, post = _quadrature_posterior(counts, M)
    log_Z = math.log(post.sum())
    path = np.zeros((1, 2))
    system, _, _ = conditional_smc(alloc, 0.0, M, (path, np.zeros(1, dtype=int)), 10_000, rng)
    assert smc_marginal_likelihood(system) == pytest.approx(log_Z, abs=0.02)


def test_marginal_likelihood_invariant_to_particle_permutation():
    rng = np.random.default_rng(11)
    alloc = _micro_alloc()
    path = np.zeros((1, 2))
    system, _, _ = conditional_smc(alloc, 0.0, 1.0, (path, np.zeros(1, dtype=int)), 64, rng)
    perm = rng.permutation(64)
    shuffled = ParticleSystem(system.paths[perm], system.log_weights[perm],
                              system.norm_weights[perm], system.ancestors,
                              system.lineage)
    assert smc_marginal_likelihood(shuffled) == pytest.approx(
        smc_marginal_likelihood(system)
    )


def test_conditional_smc_validation():
    rng = np.random.default_rng(12)
    path = np.zeros((2, 3))
    with pytest.raises(ValueError):
        conditional_smc(np.zeros((2, 0), dtype=int), 1.0, 1.0,
                        (path, np.zeros(2, dtype=int)), 5, rng)
    with pytest.raises(ValueError):
        conditional_smc(np.zeros((2, 0), dtype=int), 0.5, 1.0,
                        (path, np.array([0, 9])), 5, rng)
    with pytest.raises(ValueError):
        conditional_smc(np.zeros((2, 0), dtype=int), 0.5, 1.0,
                        (np.full((2, 3), np.nan), np.zeros(2, dtype=int)), 5, rng)
