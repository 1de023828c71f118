"""Exact conditional simulation of the latent draws behind an observed
order statistic.

Given Y = r-th smallest of D iid parent draws, the latent vector Z_1..Z_D
is recovered one coordinate at a time: each coordinate's category
(below/equal/above Y) is drawn from its exact conditional given the
running sufficient statistics (counts below/equal/above so far), then the
value is drawn from the parent truncated to that category. Optional
short-circuit conditions detect the step after which the remaining
coordinates decouple and can be drawn in bulk.

A brute-force enumeration oracle over a truncated support provides the
correctness reference for tests.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional

import numpy as np

from .orderstats import (
    OrderSpec,
    OrderStatDistribution,
    orderstat_cdf_core,
    orderstat_sf_core,
)
from .parents import ParentDistribution

__all__ = [
    "Category",
    "SufficientStats",
    "AugmentedDraw",
    "prob_os_equals_y",
    "category_probs",
    "sample_conditional",
    "sample_conditional_batch",
    "brute_force_conditional",
    "brute_force_arrays",
]

# category_probs components in (-1e-12, 0) are cancellation noise and get
# clamped; anything below -1e-9 indicates a real bug.
_NEG_CLAMP = -1e-12
_NEG_BUG = -1e-9


class Category(IntEnum):
    BELOW = 0
    EQUAL = 1
    ABOVE = 2


@dataclass(frozen=True)
class SufficientStats:
    """Counts of already-revealed coordinates below / equal to / above Y."""

    n_below: int
    n_equal: int
    n_above: int

    def __post_init__(self):
        if min(self.n_below, self.n_equal, self.n_above) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def d(self):
        return self.n_below + self.n_equal + self.n_above

    def bump(self, cat: Category):
        if cat == Category.BELOW:
            return SufficientStats(self.n_below + 1, self.n_equal, self.n_above)
        if cat == Category.EQUAL:
            return SufficientStats(self.n_below, self.n_equal + 1, self.n_above)
        return SufficientStats(self.n_below, self.n_equal, self.n_above + 1)


@dataclass
class AugmentedDraw:
    values: List[int]
    categories: List[Category]
    break_step: Optional[int]
    n_categorical_steps: int


def _prob_core(n1, n2, n3, r, D, F_lo, F_hi, S_lo, S_hi):
    """P(r-th of D equals Y | n1 below, n2 equal, n3 above revealed),
    vectorized. F_lo=F(Y-1), F_hi=F(Y) and S_lo/S_hi their complements
    (supplied separately so deep tails keep precision)."""
    n1 = np.asarray(n1)
    n2 = np.asarray(n2)
    n3 = np.asarray(n3)
    rp = r - n1
    Dp = D - n1 - n3
    m = Dp - n2  # unrevealed coordinates

    impossible = (n1 >= r) | (n3 >= D - r + 1)
    # P(at least rp-n2 of the remaining m are <= Y)
    A = orderstat_cdf_core(rp - n2, m, F_hi)
    # P(at least rp of the remaining m are <= Y-1), and its complement
    B = orderstat_cdf_core(rp, m, F_lo)
    B_comp = orderstat_sf_core(rp, m, S_lo)
    A_comp = orderstat_sf_core(rp - n2, m, S_hi)

    # A - B, written on whichever side of the unit interval cancels less
    diff = np.where(np.asarray(F_lo) > 0.5, B_comp - A_comp, A - B)

    low = n2 < np.minimum(rp, Dp - rp + 1)
    mid = (rp <= n2) & (n2 < Dp - rp + 1)
    high = (Dp - rp + 1 <= n2) & (n2 < rp)
    out = np.select(
        [impossible, low, mid, high],
        [0.0, np.maximum(diff, 0.0), B_comp, A],
        default=1.0,
    )
    return out


def _parent_anchor_values(parent, Y):
    Y = np.asarray(Y)
    F_lo = np.asarray(parent.cdf(Y - 1), dtype=float)
    F_hi = np.asarray(parent.cdf(Y), dtype=float)
    S_lo = np.asarray(parent.sf(Y - 1), dtype=float)
    S_hi = np.asarray(parent.sf(Y), dtype=float)
    pmf_Y = np.asarray(parent.pmf(Y), dtype=float)
    return F_lo, F_hi, S_lo, S_hi, pmf_Y


def _category_probs_core(n1, n2, n3, r, D, F_lo, F_hi, S_lo, S_hi, pmf_Y):
    """Normalized (p_below, p_equal, p_above) for the next coordinate,
    vectorized over points. Assumes the current state has positive
    probability."""
    num_b = _prob_core(n1 + 1, n2, n3, r, D, F_lo, F_hi, S_lo, S_hi) * F_lo
    num_e = _prob_core(n1, n2 + 1, n3, r, D, F_lo, F_hi, S_lo, S_hi) * pmf_Y
    num_a = _prob_core(n1, n2, n3 + 1, r, D, F_lo, F_hi, S_lo, S_hi) * S_hi
    total = num_b + num_e + num_a
    if np.any(total <= 0):
        raise FloatingPointError("categorical step has zero total mass")
    probs = np.stack([num_b, num_e, num_a]) / total
    if np.any(probs < _NEG_BUG):
        raise FloatingPointError("category probability below -1e-9")
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=0)
    return probs


def prob_os_equals_y(stats: SufficientStats, Y: int, spec: OrderSpec,
                     parent: ParentDistribution) -> float:
    """Probability the r-th of D draws equals Y given revealed counts."""
    if stats.d > spec.D:
        raise ValueError("sufficient statistics exceed the order D")
    F_lo, F_hi, S_lo, S_hi, _ = _parent_anchor_values(parent, int(Y))
    out = _prob_core(stats.n_below, stats.n_equal, stats.n_above,
                     spec.r, spec.D, F_lo, F_hi, S_lo, S_hi)
    return float(out)


def category_probs(stats: SufficientStats, Y: int, spec: OrderSpec,
                   parent: ParentDistribution):
    """Conditional probabilities that the next coordinate falls below /
    equal to / above Y."""
    if stats.d >= spec.D:
        raise ValueError("all coordinates already revealed")
    base = prob_os_equals_y(stats, Y, spec, parent)
    if base <= 0:
        raise ValueError("conditioning event has zero probability")
    F_lo, F_hi, S_lo, S_hi, pmf_Y = _parent_anchor_values(parent, int(Y))
    probs = _category_probs_core(
        np.asarray(stats.n_below), np.asarray(stats.n_equal), np.asarray(stats.n_above),
        spec.r, spec.D, F_lo, F_hi, S_lo, S_hi, pmf_Y,
    )
    return float(probs[0]), float(probs[1]), float(probs[2])


def sample_conditional_batch(Y, r, D, parent, rng, use_breaks=True):
    """Vectorized conditional simulation for a batch of observations.

    Y, r, D: int arrays of shape (n,) (scalars broadcast); parent parameters
    scalar or shape-(n,) arrays. Returns (values, categories, break_step,
    n_cat_steps): values/categories are (n, max(D)) with columns beyond D_i
    zero-filled / -1.
    """
    Y = np.atleast_1d(np.asarray(Y, dtype=np.int64))
    n = Y.shape[0]
    r = np.broadcast_to(np.asarray(r, dtype=np.int64), (n,)).copy()
    D = np.broadcast_to(np.asarray(D, dtype=np.int64), (n,)).copy()
    if np.any((r < 1) | (r > D)):
        raise ValueError("rank must satisfy 1 <= r <= D")

    F_lo, F_hi, S_lo, S_hi, pmf_Y = (
        np.broadcast_to(a, (n,)).astype(float) for a in _parent_anchor_values(parent, Y)
    )
    marg = _prob_core(np.zeros(n, np.int64), np.zeros(n, np.int64), np.zeros(n, np.int64),
                      r, D, F_lo, F_hi, S_lo, S_hi)
    if np.any(marg <= 0):
        raise ValueError("observation has zero probability under (parent, r, D)")

    D_max = int(D.max())
    values = np.zeros((n, D_max), dtype=np.int64)
    cats = np.full((n, D_max), -1, dtype=np.int8)
    n1 = np.zeros(n, np.int64)
    n2 = np.zeros(n, np.int64)
    n3 = np.zeros(n, np.int64)
    break_step = np.full(n, -1, np.int64)
    # 0 = live, 1 = rest >= Y, 2 = rest <= Y, 3 = rest unrestricted
    break_kind = np.zeros(n, np.int8)
    n_cat_steps = np.zeros(n, np.int64)

    # Degenerate shortcut: every coordinate is forced to equal Y.
    forced = ((r == D) & (F_lo == 0.0)) | ((r == 1) & (S_hi == 0.0))
    if np.any(forced):
        idx = np.where(forced)[0]
        col = np.arange(D_max)
        mask = forced[:, None] & (col[None, :] < D[:, None])
        values[mask] = np.repeat(Y[idx], D[idx])
        cats[mask] = Category.EQUAL
        n2[idx] = D[idx]
        break_kind[idx] = 4  # resolved, nothing left to draw
        break_step[idx] = 0

    for step in range(D_max):
        live = (break_kind == 0) & (step < D)
        if not np.any(live):
            break
        idx = np.where(live)[0]
        sub = parent.take(idx) if hasattr(parent, "take") else parent
        probs = _category_probs_core(
            n1[idx], n2[idx], n3[idx], r[idx], D[idx],
            F_lo[idx], F_hi[idx], S_lo[idx], S_hi[idx], pmf_Y[idx],
        )
        u = rng.random(idx.shape[0])
        cum_b = probs[0]
        cum_e = probs[0] + probs[1]
        cat = (u >= cum_b).astype(np.int8) + (u >= cum_e).astype(np.int8)
        n_cat_steps[idx] += 1

        v = np.empty(idx.shape[0], dtype=np.int64)
        below = cat == Category.BELOW
        equal = cat == Category.EQUAL
        above = cat == Category.ABOVE
        uv = rng.random(idx.shape[0])
        if np.any(below):
            bidx = np.where(below)[0]
            pb = sub.take(bidx) if hasattr(sub, "take") else sub
            v[bidx] = pb.sample_at_most_from_uniform(Y[idx[bidx]] - 1, uv[bidx])
        v[equal] = Y[idx[equal]]
        if np.any(above):
            aidx = np.where(above)[0]
            pa = sub.take(aidx) if hasattr(sub, "take") else sub
            v[aidx] = pa.sample_at_least_from_uniform(Y[idx[aidx]] + 1, uv[aidx])

        values[idx, step] = v
        cats[idx, step] = cat
        n1[idx] += below
        n2[idx] += equal
        n3[idx] += above

        if np.any(n1[idx] > r[idx] - 1) or np.any(n3[idx] > D[idx] - r[idx]):
            raise AssertionError("sufficient-stat trajectory left the feasible region")

        # Short-circuit detection (always recorded; only acted on when
        # use_breaks is set).
        li = idx
        rest_any = (n1[li] + n2[li] + n3[li]) < D[li]
        c3 = n2[li] >= np.maximum(r[li] - n1[li], D[li] - r[li] - n3[li] + 1)
        c1 = (n2[li] >= 1) & (n1[li] == r[li] - 1)
        c2 = (n2[li] >= 1) & (n3[li] == D[li] - r[li])
        fired = (c1 | c2 | c3) & rest_any
        if np.any(fired):
            kind = np.where(c3, 3, np.where(c1, 1, 2)).astype(np.int8)
            f = li[fired]
            first = break_step[f] < 0
            break_step[f[first]] = step + 1
            if use_breaks:
                break_kind[f] = kind[fired]

    # Bulk-fill coordinates after a break (flattened row/col indexing so a
    # single truncated draw covers all broken points of a given kind).
    for kind in (1, 2, 3):
        sel = np.where(break_kind == kind)[0]
        if sel.size == 0:
            continue
        m = D[sel] - break_step[sel]
        keep = m > 0
        sel, m = sel[keep], m[keep]
        if sel.size == 0:
            continue
        total = int(m.sum())
        rows = np.repeat(sel, m)
        cum = np.cumsum(m)
        cols = np.repeat(break_step[sel], m) + (np.arange(total) - np.repeat(cum - m, m))
        sub = parent.take(rows) if hasattr(parent, "take") else parent
        u = rng.random(total)
        if kind == 1:
            tail = sub.sample_at_least_from_uniform(Y[rows], u)
        elif kind == 2:
            tail = sub.sample_at_most_from_uniform(Y[rows], u)
        else:
            tail = sub.ppf(u)
        values[rows, cols] = tail
        cats[rows, cols] = np.where(
            tail < Y[rows], Category.BELOW,
            np.where(tail == Y[rows], Category.EQUAL, Category.ABOVE),
        ).astype(np.int8)

    # Exactness assertion: the r-th smallest must equal Y for every point.
    for_check = np.sort(np.where(np.arange(D_max) < D[:, None], values, np.iinfo(np.int64).max), axis=1)
    rth = for_check[np.arange(n), r - 1]
    if np.any(rth != Y):
        raise AssertionError("augmented draw violates the order-statistic constraint")

    return values, cats, break_step, n_cat_steps


def sample_conditional(Y: int, spec: OrderSpec, parent: ParentDistribution,
                       rng, use_breaks: bool = True) -> AugmentedDraw:
    """Exact draw of the D latent coordinates given the observed r-th
    order statistic Y."""
    values, cats, break_step, n_steps = sample_conditional_batch(
        np.array([Y]), spec.r, spec.D, parent, rng, use_breaks=use_breaks
    )
    bs = int(break_step[0])
    return AugmentedDraw(
        values=[int(v) for v in values[0, : spec.D]],
        categories=[Category(int(c)) for c in cats[0, : spec.D]],
        break_step=None if bs < 0 else bs,
        n_categorical_steps=int(n_steps[0]),
    )


def brute_force_arrays(Y: int, spec: OrderSpec, parent: ParentDistribution, z_max: int):
    """All tuples consistent with the conditioning event and their
    normalized probabilities, as arrays (tuples: (m, D), probs: (m,))."""
    r, D = spec.r, spec.D
    if D > 6 or (z_max + 1) ** D > 20_000_000:
        raise ValueError("enumeration bound exceeded (D <= 6, (z_max+1)^D <= 2e7)")
    tail = float(parent.sf(z_max))
    if tail > 1e-10:
        raise ValueError("parent tail mass beyond z_max too large for a sound oracle")
    grids = np.meshgrid(*([np.arange(z_max + 1, dtype=np.int32)] * D), indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)
    rth = np.partition(tuples, r - 1, axis=1)[:, r - 1]
    keep = rth == Y
    tuples = tuples[keep]
    if tuples.shape[0] == 0:
        raise ValueError("no tuples consistent with the event below z_max")
    log_p = np.asarray(parent.log_pmf(np.arange(z_max + 1)), dtype=float)
    w = np.exp(log_p[tuples].sum(axis=1))
    return tuples, w / w.sum()


def brute_force_conditional(Y: int, spec: OrderSpec, parent: ParentDistribution,
                            z_max: int):
    """Enumeration oracle: map from latent tuple to conditional probability."""
    tuples, probs = brute_force_arrays(Y, spec, parent, z_max)
    return {tuple(int(x) for x in t): float(p) for t, p in zip(tuples, probs)}
