"""Numerically stable scalar kernels shared by all distributions.

Log-binomial coefficients, regularized incomplete gamma/beta, and
Gaussian order-statistic variances (by quadrature).
"""

import numpy as np
from scipy import special as sp

__all__ = [
    "log_binom",
    "reg_upper_inc_gamma",
    "reg_inc_beta",
    "gaussian_orderstat_variance",
]

# Gauss-Legendre nodes/weights on [0,1], shared by all (r,D) queries.
_GL_NODES = 2048
_gl_x, _gl_w = np.polynomial.legendre.leggauss(_GL_NODES)
_gl_x = 0.5 * (_gl_x + 1.0)
_gl_w = 0.5 * _gl_w


def log_binom(n, k):
    """ln C(n,k) via log-gamma. Raises for k > n or negative arguments."""
    n_arr = np.asarray(n)
    k_arr = np.asarray(k)
    if np.any(k_arr > n_arr) or np.any(k_arr < 0) or np.any(n_arr < 0):
        raise ValueError("log_binom requires 0 <= k <= n")
    out = sp.gammaln(n_arr + 1.0) - sp.gammaln(k_arr + 1.0) - sp.gammaln(n_arr - k_arr + 1.0)
    return float(out) if np.isscalar(n) and np.isscalar(k) else out


def reg_upper_inc_gamma(s, x):
    """Regularized upper incomplete gamma Q(s,x) = Gamma(s,x)/Gamma(s)."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("shape s must be positive")
    if np.any(np.asarray(x) < 0):
        raise ValueError("x must be nonnegative")
    out = sp.gammaincc(s, x)
    return float(out) if np.isscalar(s) and np.isscalar(x) else out


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a,b)."""
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("a and b must be positive")
    x_arr = np.asarray(x)
    if np.any(x_arr < 0) or np.any(x_arr > 1):
        raise ValueError("x must lie in [0,1]")
    out = sp.betainc(a, b, x)
    return float(out) if np.isscalar(x) and np.isscalar(a) else out


def _gaussian_orderstat_moments(r, D):
    # E[X_(r)] and E[X_(r)^2] for the r-th of D iid standard normals.
    # Substitute x = Phi^{-1}(u): E[g(X_(r))] = int_0^1 g(Phi^{-1}(u)) beta_{r,D-r+1}(u) du.
    u = _gl_x
    x = sp.ndtri(u)
    log_beta_pdf = (
        (r - 1) * np.log(u)
        + (D - r) * np.log1p(-u)
        - sp.betaln(r, D - r + 1)
    )
    w = _gl_w * np.exp(log_beta_pdf)
    m1 = float(np.sum(w * x))
    m2 = float(np.sum(w * x * x))
    return m1, m2


def gaussian_orderstat_variance(r, D):
    """Variance of the r-th order statistic of D iid standard normals.

    Deterministic Gauss-Legendre quadrature after a probit substitution;
    symmetric in r -> D-r+1.
    """
    r = int(r)
    D = int(D)
    if not (1 <= r <= D):
        raise ValueError("rank must satisfy 1 <= r <= D")
    if D == 1:
        return 1.0
    m1, m2 = _gaussian_orderstat_moments(r, D)
    return m2 - m1 * m1
