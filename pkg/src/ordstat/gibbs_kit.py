"""Reusable conjugate/augmentation update kernels for Gibbs samplers:
multinomial thinning, gamma-Poisson and beta updates, Chinese-restaurant
table counts, sum-logarithmic draws, exact Polya-gamma draws,
multivariate-normal regression updates, and priors over odd orders.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "thin_multinomial",
    "gamma_poisson_update",
    "sample_crt",
    "sample_crt_batch",
    "sample_sum_logarithmic",
    "sample_sum_logarithmic_batch",
    "sample_polya_gamma",
    "mvn_conditional_update",
    "order_posterior_draw",
    "beta_conjugate_update",
    "OddBinomialPrior",
    "ShiftedBinomialPrior",
]


def thin_multinomial(total, weights, rng):
    """Split `total` counts into len(weights) cells with probabilities
    proportional to `weights`."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    s = w.sum()
    if s <= 0:
        if total > 0:
            raise ValueError("cannot thin positive total with all-zero weights")
        return np.zeros_like(w, dtype=np.int64)
    return rng.multinomial(int(total), w / s).astype(np.int64)


def gamma_poisson_update(a, b, sufficient_count, exposure, rng):
    """Draw from Gamma(a + sufficient_count, rate b + exposure)."""
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("gamma hyperparameters must be positive")
    if np.any(np.asarray(exposure) < 0):
        raise ValueError("exposure must be nonnegative")
    shape = np.asarray(a) + np.asarray(sufficient_count)
    rate = np.asarray(b) + np.asarray(exposure)
    return rng.gamma(shape, 1.0 / rate)


def beta_conjugate_update(e, f, successes, failures, rng):
    """Draw from Beta(e + successes, f + failures)."""
    if np.any(np.asarray(e) <= 0) or np.any(np.asarray(f) <= 0):
        raise ValueError("beta hyperparameters must be positive")
    return rng.beta(np.asarray(e) + np.asarray(successes),
                    np.asarray(f) + np.asarray(failures))


def sample_crt(y, alpha, rng):
    """Chinese-restaurant table count: number of tables after seating y
    customers with concentration alpha. Sum of Bernoulli(alpha/(alpha+n-1)),
    n = 1..y; exact for any y."""
    y = int(y)
    if y < 0:
        raise ValueError("y must be nonnegative")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if y == 0:
        return 0
    probs = alpha / (alpha + np.arange(y, dtype=float))
    return int(np.sum(rng.random(y) < probs))


def sample_crt_batch(y, alpha, rng):
    """Vectorized CRT counts for an array of y with shared or per-element
    alpha."""
    y = np.asarray(y, dtype=np.int64)
    n = y.shape[0]
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n,))
    total = int(y.sum())
    if total == 0:
        return np.zeros(n, dtype=np.int64)
    rows = np.repeat(np.arange(n), y)
    cum = np.cumsum(y)
    within = np.arange(total) - np.repeat(cum - y, y)
    probs = alpha[rows] / (alpha[rows] + within)
    hits = (rng.random(total) < probs).astype(np.int64)
    return np.bincount(rows, weights=hits, minlength=n).astype(np.int64)


def _logarithmic_draws(n, p, rng, max_iter=100000):
    # Exact sequential CDF inversion of the logarithmic-series pmf
    # pmf(k) = -p^k / (k ln(1-p)), k >= 1.
    if not (0 < p < 1):
        raise ValueError("p must lie in (0,1)")
    u = rng.random(n)
    k = np.ones(n, dtype=np.int64)
    pmf = -p / np.log1p(-p) * np.ones(n)
    cdf = pmf.copy()
    active = u > cdf
    it = 0
    while np.any(active):
        it += 1
        if it > max_iter:
            raise RuntimeError("logarithmic-series inversion did not terminate")
        idx = np.where(active)[0]
        pmf[idx] *= p * k[idx] / (k[idx] + 1.0)
        k[idx] += 1
        cdf[idx] += pmf[idx]
        active[idx] = u[idx] > cdf[idx]
    return k


def sample_sum_logarithmic(l, p_aug, rng):
    """Sum of l iid logarithmic-series draws with parameter p_aug
    (pmf(k) proportional to p_aug^k / k)."""
    l = int(l)
    if l < 0:
        raise ValueError("l must be nonnegative")
    if l == 0:
        return 0
    return int(_logarithmic_draws(l, p_aug, rng).sum())


def sample_sum_logarithmic_batch(l, p_aug, rng):
    """Vectorized sum-logarithmic draws for an array of l (shared p_aug)."""
    l = np.asarray(l, dtype=np.int64)
    n = l.shape[0]
    total = int(l.sum())
    if total == 0:
        return np.zeros(n, dtype=np.int64)
    rows = np.repeat(np.arange(n), l)
    draws = _logarithmic_draws(total, p_aug, rng)
    return np.bincount(rows, weights=draws, minlength=n).astype(np.int64)


# ---------------------------------------------------------------------------
# Exact Polya-gamma sampling (alternating-series accept/reject for PG(1,c),
# summed for integer b).

_PG_T = 0.64


def _pg_a_coef(n, x):
    if x > _PG_T:
        return np.pi * (n + 0.5) * np.exp(-((n + 0.5) ** 2) * np.pi**2 * x / 2.0)
    return (
        np.pi
        * (n + 0.5)
        * (2.0 / (np.pi * x)) ** 1.5
        * np.exp(-2.0 * (n + 0.5) ** 2 / x)
    )


def _pg_mass_texpon(z):
    # Probability the proposal draws from the exponential (x > T) region.
    from scipy.stats import norm

    fz = np.pi**2 / 8.0 + z**2 / 2.0
    t = _PG_T
    b = np.sqrt(1.0 / t) * (t * z - 1.0)
    a = -np.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = np.log(fz) + fz * t
    xb = x0 - z + norm.logcdf(b)
    xa = x0 + z + norm.logcdf(a)
    qdivp = 4.0 / np.pi * (np.exp(xb) + np.exp(xa))
    return 1.0 / (1.0 + qdivp)


def _pg_rtigauss(z, rng):
    # Inverse-Gaussian(mu=1/z, lambda=1) truncated to (0, T].
    t = _PG_T
    mu_large = (z == 0.0) or (1.0 / z > t)
    if mu_large:
        while True:
            while True:
                e1 = rng.exponential()
                e2 = rng.exponential()
                if e1 * e1 <= 2.0 * e2 / t:
                    break
            x = t / (1.0 + t * e1) ** 2
            if rng.random() <= np.exp(-0.5 * z * z * x):
                return x
    mu = 1.0 / z
    while True:
        y = rng.standard_normal() ** 2
        x = mu + 0.5 * mu * mu * y - 0.5 * mu * np.sqrt(4.0 * mu * y + (mu * y) ** 2)
        if rng.random() > mu / (mu + x):
            x = mu * mu / x
        if x <= t:
            return x


def _pg1_draw(c, rng):
    z = abs(c) / 2.0
    fz = np.pi**2 / 8.0 + z**2 / 2.0
    p_right = _pg_mass_texpon(z)
    while True:
        if rng.random() < p_right:
            x = _PG_T + rng.exponential() / fz
        else:
            x = _pg_rtigauss(z, rng)
        s = _pg_a_coef(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _pg_a_coef(n, x)
                if y <= s:
                    return x / 4.0
            else:
                s += _pg_a_coef(n, x)
                if y > s:
                    break


def sample_polya_gamma(b, c, rng):
    """Exact draw from PG(b, c) for integer b >= 1 (sum of b PG(1, c))."""
    b = int(b)
    if b < 1:
        raise ValueError("b must be a positive integer")
    return float(sum(_pg1_draw(c, rng) for _ in range(b)))


def mvn_conditional_update(precision, linear_term, rng):
    """Draw from N(P^{-1} h, P^{-1}) for precision P and linear term h,
    via Cholesky of the precision (no explicit inversion)."""
    P = np.asarray(precision, dtype=float)
    h = np.asarray(linear_term, dtype=float)
    L = np.linalg.cholesky(P)  # raises LinAlgError when not PD
    # mean: solve P m = h
    w = linalg.solve_triangular(L, h, lower=True)
    mean = linalg.solve_triangular(L.T, w, lower=False)
    # noise: solve L^T x = z gives cov P^{-1}
    z = rng.standard_normal(h.shape[0])
    noise = linalg.solve_triangular(L.T, z, lower=False)
    return mean + noise


@dataclass(frozen=True)
class OddBinomialPrior:
    """Distribution of 2X+1 with X ~ Binomial((d_max-1)/2, q): a prior over
    odd orders {1, 3, ..., d_max}."""

    d_max: int
    q: float

    def __post_init__(self):
        if self.d_max < 1 or self.d_max % 2 == 0:
            raise ValueError("d_max must be an odd positive integer")
        if not (0 <= self.q <= 1):
            raise ValueError("q must lie in [0,1]")

    def support(self):
        return np.arange(1, self.d_max + 1, 2)

    def log_pmf(self, d):
        from scipy.stats import binom

        d = np.asarray(d)
        m = (self.d_max - 1) // 2
        valid = (d >= 1) & (d <= self.d_max) & (d % 2 == 1)
        out = binom.logpmf(np.clip((d - 1) // 2, 0, m), m, self.q)
        return np.where(valid, out, -np.inf)

    def pmf(self, d):
        return np.exp(self.log_pmf(d))

    def sample(self, rng, size=None):
        m = (self.d_max - 1) // 2
        return 2 * rng.binomial(m, self.q, size=size) + 1


@dataclass(frozen=True)
class ShiftedBinomialPrior:
    """(D - 1) ~ Binomial(d_max - 1, q): a prior over orders {1, ..., d_max}."""

    d_max: int
    q: float

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be positive")
        if not (0 <= self.q <= 1):
            raise ValueError("q must lie in [0,1]")

    def support(self):
        return np.arange(1, self.d_max + 1)

    def log_pmf(self, d):
        from scipy.stats import binom

        d = np.asarray(d)
        m = self.d_max - 1
        valid = (d >= 1) & (d <= self.d_max)
        out = binom.logpmf(np.clip(d - 1, 0, m), m, self.q)
        return np.where(valid, out, -np.inf)

    def pmf(self, d):
        return np.exp(self.log_pmf(d))

    def sample(self, rng, size=None):
        return rng.binomial(self.d_max - 1, self.q, size=size) + 1


def order_posterior_draw(y, likelihood_eval, prior, rng):
    """Exact categorical draw over the prior's support with weights
    prior(d) * likelihood_eval(d), in log domain via Gumbel-max."""
    support = prior.support()
    log_prior = np.asarray(prior.log_pmf(support), dtype=float)
    lik = np.array([float(likelihood_eval(int(d))) for d in support])
    if np.any(lik < 0):
        raise ValueError("likelihood_eval returned a negative value")
    with np.errstate(divide="ignore"):
        logits = log_prior + np.log(lik)
    if not np.any(np.isfinite(logits)):
        raise ValueError("all candidate orders have zero posterior mass")
    g = rng.gumbel(size=logits.shape[0])
    return int(support[np.argmax(logits + g)])
