"""Latent Gaussian AR(1) paths and their transformations to Beta stick variables.

Three time-dependent stick-variable processes are provided, all with the
same Beta(1, M) marginal at every time point:

* ``Ar1DpProcess`` -- a Gaussian copula transform of a stationary AR(1)
  process, supporting the full range of dependence psi in (-1, 1).
* ``TaddyProcess`` -- a Beta-thinning recursion, positive dependence only.
* ``DeYoreoKottasProcess`` -- sticks built from a squared static draw plus a
  squared AR(1) innovation; forward simulation only (the stick is a
  non-invertible function of two latents).
"""

import math

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

LOG_2PI = math.log(2.0 * math.pi)

# ndtri returns +/-inf at 0 and 1; clamp copula inputs away from the
# boundary so large M cannot push (1-xi)^M into a hard zero.
_XI_EPS = 1e-15


class Ar1Params:
    """Stationary AR(1) with N(0,1) marginals: e_t = psi*e_{t-1} + eta_t.

    The innovation variance is tied to psi as 1 - psi**2 so the process is
    marginally standard normal at every t.
    """

    def __init__(self, psi):
        psi = float(psi)
        if not abs(psi) < 1.0:
            raise ValueError(f"psi must lie strictly inside (-1, 1), got {psi}")
        self.psi = psi

    @property
    def innovation_var(self):
        return 1.0 - self.psi**2

    def __repr__(self):
        return f"Ar1Params(psi={self.psi})"


class CopulaSpec:
    """Beta(a, b) target marginal of the copula transform, with a=1, b=M."""

    def __init__(self, M):
        M = float(M)
        if not (M > 0.0 and np.isfinite(M)):
            raise ValueError(f"total mass M must be positive and finite, got {M}")
        self.M = M
        self.a = 1.0
        self.b = M

    def __repr__(self):
        return f"CopulaSpec(M={self.M})"


def sample_ar1_path(params, T, L, rng):
    """Draw L independent AR(1) columns of length T with N(0,1) marginals.

    Returns a (T, L) array; row 0 is the stationary initial draw and each
    subsequent row applies e_t = psi*e_{t-1} + N(0, 1-psi^2).
    """
    if T < 1 or L < 1:
        raise ValueError("T and L must both be >= 1")
    psi = params.psi
    sd = math.sqrt(params.innovation_var)
    path = np.empty((T, L))
    path[0] = rng.standard_normal(L)
    for t in range(1, T):
        path[t] = psi * path[t - 1] + sd * rng.standard_normal(L)
    return path


def ar1_log_density(path, params):
    """Log density of one or more AR(1) columns under ``params``.

    ``path`` may be a length-T vector or a (T, L) matrix; columns are
    independent, so the matrix case returns the sum over columns.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim == 1:
        path = path[:, None]
    if path.shape[0] < 1:
        raise ValueError("path must contain at least one time point")
    psi = params.psi
    var = params.innovation_var
    first = path[0]
    logp = -0.5 * (LOG_2PI + first**2).sum()
    if path.shape[0] > 1:
        resid = path[1:] - psi * path[:-1]
        n = resid.size
        logp += -0.5 * (n * (LOG_2PI + math.log(var)) + (resid**2).sum() / var)
    return float(logp)


def copula_transform(eps, spec):
    """Map N(0,1) values to Beta(1, M) sticks: xi = 1 - (1 - Phi(eps))^(1/M).

    Evaluated as -expm1(log Phi(-eps) / M), which stays accurate deep in
    both tails where 1 - Phi(eps) underflows.
    """
    eps = np.asarray(eps, dtype=float)
    if not np.all(np.isfinite(eps)):
        raise ValueError("eps must be finite")
    out = -np.expm1(log_ndtr(-eps) / spec.M)
    return float(out) if out.ndim == 0 else out

def log_one_minus_xi(eps, spec):
    """log(1 - xi) = log Phi(-eps) / M, the stable building block of the map."""
    return log_ndtr(-np.asarray(eps, dtype=float)) / spec.M


def inverse_copula(xi, spec):
    """Exact inverse of :func:`copula_transform`: eps = Phi^{-1}(1-(1-xi)^M).

    Computed as -ndtri_exp(M * log1p(-xi)) so the round trip holds to
    ~1e-12 across the whole (0, 1) interval.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0.0) or np.any(xi >= 1.0):
        raise ValueError("xi must lie strictly inside (0, 1)")
    xi = np.clip(xi, _XI_EPS, 1.0 - _XI_EPS)
    out = -ndtri_exp(spec.M * np.log1p(-xi))
    return float(out) if out.ndim == 0 else out


def conditional_xi_sample(xi_prev, psi, spec, rng):
    """One-step transition draw of the copula stick process.

    Draws Z ~ N(psi * Phi^{-1}(1-(1-xi_prev)^M), 1-psi^2) and maps it back
    through the copula, giving a draw from the conditional law of xi_t
    given xi_{t-1}.
    """
    if not abs(psi) < 1.0:
        raise ValueError("psi must lie strictly inside (-1, 1)")
    eps_prev = inverse_copula(xi_prev, spec)
    z = psi * eps_prev + math.sqrt(1.0 - psi**2) * rng.standard_normal(np.shape(eps_prev))
    return copula_transform(z, spec)


def conditional_xi_log_density(xi, xi_prev, psi, spec):
    """Log transition density of xi_t given xi_{t-1} (change of variables).

    With z = Phi^{-1}(1-(1-xi)^M), the density is
    N(z; psi*z_prev, 1-psi^2) * M (1-xi)^{M-1} / phi(z).
    """
    xi = np.asarray(xi, dtype=float)
    z = inverse_copula(xi, spec)
    z_prev = inverse_copula(xi_prev, spec)
    var = 1.0 - psi**2
    log_norm = -0.5 * (LOG_2PI + math.log(var)) - (z - psi * z_prev) ** 2 / (2.0 * var)
    log_phi = -0.5 * (LOG_2PI + z**2)
    log_jac = math.log(spec.M) + (spec.M - 1.0) * np.log1p(-xi) - log_phi
    return log_norm + log_jac


def taddy_xi_step(xi_prev, psi, M, rng):
    """Beta-thinning stick recursion: xi_t = 1 - u*(1 - w*xi_{t-1}).

    u ~ Beta(M, 1-psi) and w ~ Beta(psi, 1-psi); the Beta(1, M) marginal is
    preserved but only positive dependence (psi in (0,1)) is possible.
    """
    if not 0.0 < psi < 1.0:
        raise ValueError("the thinning recursion requires psi in (0, 1)")
    shape = np.shape(xi_prev)
    u = rng.beta(M, 1.0 - psi, size=shape if shape else None)
    w = rng.beta(psi, 1.0 - psi, size=shape if shape else None)
    out = 1.0 - u * (1.0 - w * np.asarray(xi_prev))
    return float(out) if np.ndim(out) == 0 else out


def taddy_autocorrelation(psi, M, k):
    """Lag-k autocorrelation of the thinning recursion: (psi*M/(1+M-psi))^k."""
    if not 0.0 < psi < 1.0:
        raise ValueError("psi must lie in (0, 1)")
    if M <= 0.0:
        raise ValueError("M must be positive")
    if k < 1:
        raise ValueError("lag k must be >= 1")
    return (psi * M / (1.0 + M - psi)) ** k


def dyk_xi_path(psi, M, T, L, rng):
    """Squared-latent stick paths: xi_tl = 1 - exp(-(zeta_l^2 + eta_tl^2)/(2M)).

    zeta_l ~ N(0,1) is drawn once per column and eta columns follow a
    stationary AR(1) with parameter psi, so zeta^2 + eta^2 is chi^2_2 and
    the marginal of xi is Beta(1, M) at every t.
    """
    if not abs(psi) < 1.0:
        raise ValueError("psi must lie strictly inside (-1, 1)")
    if M <= 0.0:
        raise ValueError("M must be positive")
    zeta = rng.standard_normal(L)
    eta = sample_ar1_path(Ar1Params(psi), T, L, rng)
    return -np.expm1(-(zeta**2 + eta**2) / (2.0 * M))


class Ar1DpProcess:
    """Copula-transformed AR(1) stick process (full psi range)."""

    kind = "ar1dp"

    def __init__(self, psi, M):
        self.params = Ar1Params(psi)
        self.spec = CopulaSpec(M)

    @property
    def psi(self):
        return self.params.psi

    @property
    def M(self):
        return self.spec.M

    def initial(self, L, rng):
        return copula_transform(rng.standard_normal(L), self.spec)

    def step(self, xi_prev, rng):
        return conditional_xi_sample(xi_prev, self.psi, self.spec, rng)

    def sample_path(self, T, L, rng):
        eps = sample_ar1_path(self.params, T, L, rng)
        return copula_transform(eps, self.spec)

    def eps_log_density(self, eps):
        """Log density of the latent Gaussian paths (used by the psi update)."""
        return ar1_log_density(eps, self.params)


class TaddyProcess:
    """Beta-thinning stick process (positive dependence only)."""

    kind = "taddy"

    def __init__(self, psi, M):
        if not 0.0 < psi < 1.0:
            raise ValueError("the thinning recursion requires psi in (0, 1)")
        if M <= 0.0:
            raise ValueError("M must be positive")
        self.psi = float(psi)
        self.M = float(M)

    def initial(self, L, rng):
        return rng.beta(1.0, self.M, size=L)

    def step(self, xi_prev, rng):
        return taddy_xi_step(xi_prev, self.psi, self.M, rng)

    def sample_path(self, T, L, rng):
        path = np.empty((T, L))
        path[0] = self.initial(L, rng)
        for t in range(1, T):
            path[t] = self.step(path[t - 1], rng)
        return path

    def autocorrelation(self, k=1):
        return taddy_autocorrelation(self.psi, self.M, k)


class DeYoreoKottasProcess:
    """Squared-latent stick process. Forward simulation only.

    ``initial`` draws and stores the static zeta column so that ``step`` can
    advance the hidden eta state; the stick value itself cannot be inverted
    back to (zeta, eta).
    """

    kind = "dyk"

    def __init__(self, psi, M):
        if not abs(psi) < 1.0:
            raise ValueError("psi must lie strictly inside (-1, 1)")
        if M <= 0.0:
            raise ValueError("M must be positive")
        self.psi = float(psi)
        self.M = float(M)
        self.zeta = None
        self._eta = None

    def _xi(self, eta):
        return -np.expm1(-(self.zeta**2 + eta**2) / (2.0 * self.M))

    def initial(self, L, rng):
        self.zeta = rng.standard_normal(L)
        self._eta = rng.standard_normal(L)
        return self._xi(self._eta)

    def step(self, xi_prev, rng):
        if self._eta is None:
            raise RuntimeError("call initial() before step(); the stick is not invertible")
        sd = math.sqrt(1.0 - self.psi**2)
        self._eta = self.psi * self._eta + sd * rng.standard_normal(self._eta.shape)
        return self._xi(self._eta)

    def sample_path(self, T, L, rng):
        return dyk_xi_path(self.psi, self.M, T, L, rng)


_PROCESS_KINDS = {
    "ar1dp": Ar1DpProcess,
    "taddy": TaddyProcess,
    "dyk": DeYoreoKottasProcess,
}


def weight_process(kind, psi, M):
    """Instantiate a stick process by name: 'ar1dp', 'taddy' or 'dyk'."""
    try:
        cls = _PROCESS_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown process kind {kind!r}; expected one of {sorted(_PROCESS_KINDS)}")
    return cls(psi, M)
