"""Order-statistic distributions over a discrete parent: CDF/PMF,
forward sampling, and Monte Carlo dispersion estimation.

If Z_1..Z_D are iid from the parent with CDF F, the r-th smallest has
CDF sum_{t=r}^{D} C(D,t) F(z)^t (1-F(z))^{D-t}, evaluated here through
the binomial-tail / incomplete-beta identity.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .parents import ParentDistribution

__all__ = [
    "OrderSpec",
    "OrderStatDistribution",
    "DispersionEstimate",
    "os_cdf",
    "os_pmf",
    "os_sample",
    "estimate_dispersion",
    "orderstat_cdf_core",
    "orderstat_sf_core",
    "orderstat_pmf_core",
]


@dataclass(frozen=True)
class OrderSpec:
    """(rank r, order D), 1-based: min r=1, median r=ceil(D/2) (odd D), max r=D."""

    r: int
    D: int

    def __post_init__(self):
        if not (1 <= self.r <= self.D):
            raise ValueError("rank must satisfy 1 <= r <= D")

    @classmethod
    def minimum(cls, D):
        return cls(1, int(D))

    @classmethod
    def median(cls, D):
        D = int(D)
        if D % 2 == 0:
            raise ValueError("median order spec requires odd D")
        return cls((D + 1) // 2, D)

    @classmethod
    def maximum(cls, D):
        return cls(int(D), int(D))


def orderstat_cdf_core(rank, order, F):
    """P(at least `rank` of `order` iid U's land at or below a point with
    parent CDF value F). Conventions: rank <= 0 -> 1, rank > order -> 0.
    Broadcasts over arrays."""
    rank = np.asarray(rank)
    order = np.asarray(order)
    F = np.asarray(F, dtype=float)
    a = np.clip(rank, 1, None).astype(float)
    b = np.clip(order - rank + 1, 1, None).astype(float)
    val = sp.betainc(a, b, np.clip(F, 0.0, 1.0))
    out = np.where(rank <= 0, 1.0, np.where(rank > order, 0.0, val))
    return out if out.ndim else float(out)


def orderstat_sf_core(rank, order, S):
    """Complement P(fewer than `rank` of `order` exceed-or-tie), written in
    terms of the parent survival value S = 1 - F to avoid cancellation."""
    rank = np.asarray(rank)
    order = np.asarray(order)
    S = np.asarray(S, dtype=float)
    a = np.clip(order - rank + 1, 1, None).astype(float)
    b = np.clip(rank, 1, None).astype(float)
    val = sp.betainc(a, b, np.clip(S, 0.0, 1.0))
    out = np.where(rank <= 0, 0.0, np.where(rank > order, 1.0, val))
    return out if out.ndim else float(out)


def orderstat_pmf_core(rank, order, F_lo, F_hi, S_lo, S_hi):
    """pmf of the order statistic at a point with parent cdf/survival values
    F_lo=F(z-1), F_hi=F(z), S_lo=1-F(z-1), S_hi=1-F(z). Broadcasts."""
    lo = orderstat_cdf_core(rank, order, F_hi) - orderstat_cdf_core(rank, order, F_lo)
    hi = orderstat_sf_core(rank, order, S_lo) - orderstat_sf_core(rank, order, S_hi)
    out = np.maximum(np.where(np.asarray(F_lo) > 0.5, hi, lo), 0.0)
    return out if out.ndim else float(out)


class OrderStatDistribution:
    """Distribution of the spec.r-th smallest of spec.D iid parent draws."""

    def __init__(self, parent: ParentDistribution, spec: OrderSpec):
        self.parent = parent
        self.spec = spec

    def __repr__(self):
        return f"OrderStatDistribution({self.parent!r}, r={self.spec.r}, D={self.spec.D})"

    def cdf(self, z):
        return orderstat_cdf_core(self.spec.r, self.spec.D, self.parent.cdf(z))

    def sf(self, z):
        return orderstat_sf_core(self.spec.r, self.spec.D, self.parent.sf(z))

    def pmf(self, z):
        z = np.asarray(z)
        lo = self.cdf(z) - self.cdf(z - 1)
        hi = self.sf(z - 1) - self.sf(z)
        # use the survival-side difference deep in the right tail
        use_hi = np.asarray(self.parent.cdf(z - 1)) > 0.5
        out = np.maximum(np.where(use_hi, hi, lo), 0.0)
        return out if out.ndim else float(out)

    def support_bound(self, tail=1e-12):
        # the order statistic is stochastically dominated by the parent max
        return self.parent.quantile_bound(tail)

    def sample(self, rng, size=None):
        r, D = self.spec.r, self.spec.D
        scalar = size is None
        n = 1 if scalar else int(size)
        draws = self.parent.sample(rng, size=(n, D))
        out = np.partition(draws, r - 1, axis=1)[:, r - 1]
        return int(out[0]) if scalar else out

    def mean_variance(self, tail=1e-12):
        """Deterministic mean/variance by summing the pmf over the
        tail-bounded support."""
        zmax = self.support_bound(tail)
        z = np.arange(zmax + 1)
        p = self.pmf(z)
        m = float(np.sum(p * z))
        v = float(np.sum(p * (z - m) ** 2))
        return m, v


@dataclass(frozen=True)
class DispersionEstimate:
    mean: float
    variance: float
    index: float
    mc_stderr_index: float
    n_samples: int


def os_cdf(dist: OrderStatDistribution, z):
    return dist.cdf(z)


def os_pmf(dist: OrderStatDistribution, z):
    return dist.pmf(z)


def os_sample(dist: OrderStatDistribution, rng, size=None):
    return dist.sample(rng, size=size)


def estimate_dispersion(dist: OrderStatDistribution, n, rng, n_batches=50) -> DispersionEstimate:
    """Sample mean/variance/index of n forward draws; index stderr by
    batch means over n_batches equal blocks."""
    n = int(n)
    if n < 1000:
        raise ValueError("need n >= 1000 samples for a dispersion estimate")
    draws = np.asarray(dist.sample(rng, size=n), dtype=float)
    mean = float(draws.mean())
    var = float(draws.var(ddof=1))
    index = var / mean if mean != 0 else float("nan")

    m = n // n_batches
    blocks = draws[: m * n_batches].reshape(n_batches, m)
    bmean = blocks.mean(axis=1)
    bvar = blocks.var(axis=1, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        bidx = bvar / bmean
    stderr = float(np.std(bidx, ddof=1) / np.sqrt(n_batches))
    return DispersionEstimate(mean, var, index, stderr, n)
