"""Discrete parent distributions: pmf/cdf, full and region-truncated sampling.

Parents are immutable after construction. Parameters may be scalars or
numpy arrays (broadcast elementwise), so a single object can describe a
batch of heterogeneous rates.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as sp
from scipy import stats

__all__ = [
    "SupportRegion",
    "ParentDistribution",
    "PoissonParent",
    "NegBinParent",
    "poisson_cdf",
    "negbin_cdf",
    "sample_truncated",
]


@dataclass(frozen=True)
class SupportRegion:
    """A restriction of the integer support: Full, Below(y), Equal(y),
    Above(y), AtMost(y) or AtLeast(y)."""

    kind: str
    y: Optional[int] = None

    _KINDS = ("full", "below", "equal", "above", "at_most", "at_least")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind != "full" and self.y is None:
            raise ValueError(f"region {self.kind!r} requires a threshold y")

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def below(cls, y):
        return cls("below", int(y))

    @classmethod
    def equal(cls, y):
        return cls("equal", int(y))

    @classmethod
    def above(cls, y):
        return cls("above", int(y))

    @classmethod
    def at_most(cls, y):
        return cls("at_most", int(y))

    @classmethod
    def at_least(cls, y):
        return cls("at_least", int(y))


class ParentDistribution:
    """Contract: log_pmf, pmf, cdf, sf, ppf, sample, sample_truncated.

    All evaluations broadcast over integer arrays. Support is {0,1,2,...}.
    """

    def log_pmf(self, z):
        raise NotImplementedError

    def pmf(self, z):
        return np.exp(self.log_pmf(z))

    def cdf(self, z):
        raise NotImplementedError

    def sf(self, z):
        """P(Z > z), computed without 1-cdf cancellation."""
        raise NotImplementedError

    def ppf(self, q):
        """Smallest integer z with cdf(z) >= q."""
        raise NotImplementedError

    def isf(self, q):
        """Smallest integer z with sf(z) <= q."""
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def quantile_bound(self, tail=1e-12):
        """Integer Z* with P(Z > Z*) <= tail (max over batched params)."""
        return int(np.max(self.isf(tail)))

    def mean(self):
        raise NotImplementedError

    def take(self, idx):
        """Parent restricted to a subset of a parameter batch (identity for
        scalar-parameter parents)."""
        raise NotImplementedError

    # -- truncated sampling ------------------------------------------------

    def sample_truncated(self, rng, region, size=None):
        return sample_truncated(self, region, rng, size=size)

    def sample_at_most_from_uniform(self, y, u):
        """Exact draw from Z | Z <= y by CDF inversion of u ~ U(0,1)."""
        head = self.cdf(y)
        if np.any(head <= 0):
            raise ValueError("region {..<=y} has zero mass")
        # floor away from 0: ppf(0) would fall below the support
        return self.ppf(np.maximum(u * head, 1e-300))

    def sample_at_least_from_uniform(self, y, u):
        """Exact draw from Z | Z >= y by inversion on the conditional tail."""
        y = np.asarray(y)
        tail = self.sf(y - 1)
        if np.any(tail < 1e-300):
            raise ValueError("region {..>=y} has numerically zero mass")
        # Invert the survival function to keep resolution deep in the tail.
        z = self.isf(np.maximum(tail * (1.0 - u), 1e-320))
        return np.maximum(z, y)


class PoissonParent(ParentDistribution):
    """Poisson parent with mean mu (scalar or array)."""

    def __init__(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0):
            raise ValueError("mu must be positive")
        self.mu = mu if mu.ndim else float(mu)

    def __repr__(self):
        return f"PoissonParent(mu={self.mu})"

    def log_pmf(self, z):
        z = np.asarray(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = z * np.log(self.mu) - self.mu - sp.gammaln(np.asarray(z, dtype=float) + 1.0)
        return np.where(z < 0, -np.inf, out)

    def cdf(self, z):
        z = np.asarray(z)
        zf = np.maximum(z, 0)
        out = sp.pdtr(zf, self.mu)
        return np.where(z < 0, 0.0, out)

    def sf(self, z):
        z = np.asarray(z)
        zf = np.maximum(z, 0)
        out = sp.pdtrc(zf, self.mu)
        return np.where(z < 0, 1.0, out)

    def ppf(self, q):
        return stats.poisson.ppf(q, self.mu).astype(np.int64)

    def isf(self, q):
        # scipy's poisson.isf returns NaN for q below ~1e-16; anchor there
        # and walk the exact survival function forward for deeper tails.
        q_in = np.asarray(q, dtype=float)
        shape = np.broadcast_shapes(q_in.shape, np.asarray(self.mu).shape)
        q = np.broadcast_to(q_in, shape).reshape(-1)
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), shape).reshape(-1)
        z = np.atleast_1d(
            stats.poisson.isf(np.maximum(q, 1e-15), mu)
        ).reshape(-1).astype(np.int64)
        active = np.where(q < 1e-15)[0]
        for _ in range(100000):
            if active.size == 0:
                break
            still = sp.pdtrc(z[active], mu[active]) > q[active]
            z[active[still]] += 1
            active = active[still]
        else:
            raise RuntimeError("poisson isf deep-tail walk did not terminate")
        return z.reshape(shape)

    def sample(self, rng, size=None):
        return rng.poisson(self.mu, size=size)

    def mean(self):
        return self.mu

    def take(self, idx):
        return self if np.isscalar(self.mu) else PoissonParent(self.mu[idx])


class NegBinParent(ParentDistribution):
    """Negative binomial with stopping alpha and probability p:
    pmf(z) = C(z+alpha-1, z) p^alpha (1-p)^z,
    mean alpha(1-p)/p, variance alpha(1-p)/p^2, dispersion index 1/p.
    """

    def __init__(self, alpha, p):
        alpha = np.asarray(alpha, dtype=float)
        p = np.asarray(p, dtype=float)
        if np.any(alpha <= 0):
            raise ValueError("alpha must be positive")
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("p must lie in (0,1)")
        self.alpha = alpha if alpha.ndim else float(alpha)
        self.p = p if p.ndim else float(p)

    def __repr__(self):
        return f"NegBinParent(alpha={self.alpha}, p={self.p})"

    def log_pmf(self, z):
        z = np.asarray(z)
        zf = np.asarray(z, dtype=float)
        out = (
            sp.gammaln(zf + self.alpha)
            - sp.gammaln(zf + 1.0)
            - sp.gammaln(np.asarray(self.alpha, dtype=float))
            + self.alpha * np.log(self.p)
            + zf * np.log1p(-self.p)
        )
        return np.where(z < 0, -np.inf, out)

    def cdf(self, z):
        z = np.asarray(z)
        zf = np.maximum(z, 0).astype(float)
        out = sp.betainc(self.alpha, zf + 1.0, self.p)
        return np.where(z < 0, 0.0, out)

    def sf(self, z):
        z = np.asarray(z)
        zf = np.maximum(z, 0).astype(float)
        out = sp.betainc(zf + 1.0, self.alpha, 1.0 - self.p)
        return np.where(z < 0, 1.0, out)

    def ppf(self, q):
        return stats.nbinom.ppf(q, self.alpha, self.p).astype(np.int64)

    def isf(self, q):
        return stats.nbinom.isf(q, self.alpha, self.p).astype(np.int64)

    def sample(self, rng, size=None):
        return rng.negative_binomial(self.alpha, self.p, size=size)

    def mean(self):
        return self.alpha * (1.0 - self.p) / self.p

    def take(self, idx):
        if np.isscalar(self.alpha) and np.isscalar(self.p):
            return self
        alpha = self.alpha if np.isscalar(self.alpha) else self.alpha[idx]
        p = self.p if np.isscalar(self.p) else self.p[idx]
        return NegBinParent(alpha, p)


def poisson_cdf(mu, y):
    """Poisson CDF at integer y (0 below support)."""
    return float(PoissonParent(mu).cdf(int(y)))


def negbin_cdf(alpha, p, y):
    """Negative-binomial CDF at integer y under the adopted convention."""
    return float(NegBinParent(alpha, p).cdf(int(y)))


def sample_truncated(parent, region, rng, size=None):
    """Exact draw from the parent renormalized to `region` (CDF inversion).

    Raises ValueError when the effective region is empty or its mass is
    numerically zero (< 1e-300).
    """
    scalar = size is None
    n = 1 if scalar else int(size)
    kind, y = region.kind, region.y

    if kind == "full":
        out = parent.sample(rng, size=n)
    elif kind == "equal":
        if np.any(parent.pmf(y) <= 0):
            raise ValueError("region Equal(y) has zero mass")
        out = np.full(n, y, dtype=np.int64)
    elif kind in ("below", "at_most"):
        hi = y - 1 if kind == "below" else y
        if hi < 0:
            raise ValueError("region has no support points")
        head = parent.cdf(hi)
        if np.any(head < 1e-300):
            raise ValueError("region mass numerically zero")
        u = rng.random(n)
        out = parent.sample_at_most_from_uniform(hi, u)
    else:  # above / at_least
        lo = y + 1 if kind == "above" else y
        lo = max(lo, 0)
        u = rng.random(n)
        out = parent.sample_at_least_from_uniform(lo, u)

    out = np.asarray(out, dtype=np.int64)
    return int(out[0]) if scalar else out
