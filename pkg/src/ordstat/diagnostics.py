"""Validation machinery: joint-distribution (forward vs Gibbs) tests,
information-rate scoring of heldout data, predictive-interval coverage,
and Monte Carlo dispersion tables."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .orderstats import OrderSpec, OrderStatDistribution, estimate_dispersion
from .parents import NegBinParent, PoissonParent
from .special_fn import gaussian_orderstat_variance
from .models.common import PosteriorSamples, posterior_predictive, predictive_logpmf

__all__ = [
    "GewekeReport",
    "FitScore",
    "geweke_test",
    "score_fit",
    "coverage",
    "dispersion_table",
    "dispersion_table_csv",
]


@dataclass
class GewekeReport:
    stats: dict  # name -> {"z", "forward_mean", "chain_mean", "stderr"}
    n_forward: int
    n_chain: int
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(abs(v["z"]) < self.threshold for v in self.stats.values())

    def to_json_dict(self):
        return {
            "n_forward": self.n_forward,
            "n_chain": self.n_chain,
            "threshold": self.threshold,
            "pass": self.passed,
            "note": "threshold is per-statistic; no multiplicity correction applied",
            "statistics": [
                {"statistic": k, "z": v["z"], "n": self.n_chain, "pass": abs(v["z"]) < self.threshold}
                for k, v in self.stats.items()
            ],
        }


def _batch_means_se(x, n_batches=50):
    x = np.asarray(x, dtype=float)
    m = x.shape[0] // n_batches
    if m < 2:
        raise ValueError("too few draws for batch-means standard errors")
    b = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(np.std(b, ddof=1) / np.sqrt(n_batches))


def geweke_test(adapter, stats, n_forward, n_chain, rng, threshold=4.0,
                n_burn=None) -> GewekeReport:
    """Compare statistic means under (a) independent forward draws of the
    joint (parameters, latents, data) and (b) a chain alternating the Gibbs
    parameter kernel with data resimulation. Both target the same joint
    when every kernel is correct."""
    names = list(stats)
    fwd = np.empty((int(n_forward), len(names)))
    for i in range(int(n_forward)):
        state = adapter.forward(rng)
        fwd[i] = [stats[k](state) for k in names]

    if n_burn is None:
        n_burn = max(100, int(n_chain) // 20)
    state = adapter.forward(rng)
    for _ in range(n_burn):
        state = adapter.transition(state, rng)
    chain = np.empty((int(n_chain), len(names)))
    for i in range(int(n_chain)):
        state = adapter.transition(state, rng)
        chain[i] = [stats[k](state) for k in names]

    report = {}
    for j, name in enumerate(names):
        mf, mc = float(fwd[:, j].mean()), float(chain[:, j].mean())
        se_f = float(np.std(fwd[:, j], ddof=1) / np.sqrt(fwd.shape[0]))
        se_c = _batch_means_se(chain[:, j])
        se = float(np.hypot(se_f, se_c))
        z = 0.0 if (mf == mc) else (mf - mc) / se
        report[name] = {"z": float(z), "forward_mean": mf, "chain_mean": mc,
                        "stderr": se}
    return GewekeReport(stats=report, n_forward=int(n_forward),
                        n_chain=int(n_chain), threshold=threshold)


@dataclass
class FitScore:
    ir: float          # nats per heldout observation
    ig: float          # ir_baseline - ir (nan when no baseline given)
    lppd: float        # total log pointwise predictive density
    n_held: int
    flagged_points: list = field(default_factory=list)


def score_fit(samples: PosteriorSamples, heldout, baseline=None) -> FitScore:
    """Information rate of heldout (unit, y) pairs under the posterior
    predictive mixture; information gain when a baseline fit is supplied.
    Points with zero predictive mass are reported, and drive ir to +inf
    rather than failing silently."""
    heldout = list(heldout)
    if not heldout:
        raise ValueError("heldout set must be nonempty")
    units = [u for u, _ in heldout]
    ys = [y for _, y in heldout]
    lp = predictive_logpmf(samples, units, ys)
    flagged = [i for i, v in enumerate(lp) if not np.isfinite(v)]
    lppd = float(lp.sum())
    ir = float("inf") if flagged else float(-lp.mean())
    ig = float("nan")
    if baseline is not None:
        base = score_fit(baseline, heldout)
        ig = base.ir - ir
    return FitScore(ir=ir, ig=ig, lppd=lppd, n_held=len(heldout),
                    flagged_points=flagged)


def coverage(samples: PosteriorSamples, heldout, level) -> float:
    """Fraction of heldout (unit, y) pairs inside the central equal-tail
    predictive interval at the given level."""
    if not (0 < level < 1):
        raise ValueError("level must lie in (0,1)")
    heldout = list(heldout)
    hits = 0
    for unit, y in heldout:
        z, pmf = posterior_predictive(samples, unit)
        cdf = np.cumsum(pmf)
        lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
        lo = int(z[np.searchsorted(cdf, lo_q)])
        hi = int(z[min(np.searchsorted(cdf, hi_q), len(z) - 1)])
        hits += int(lo <= y <= hi)
    return hits / len(heldout)


_RANK_NAMES = ("min", "med", "max")


def _resolve_rank(rank, D):
    if rank == "min":
        return 1
    if rank == "med":
        if D % 2 == 0:
            return None
        return (D + 1) // 2
    if rank == "max":
        return D
    r = int(rank)
    return r if 1 <= r <= D else None


def dispersion_table(family, ranks, orders, param_grid, n_mc, rng):
    """Monte Carlo dispersion grid. family: 'pois' (param (mu,)) or 'nb'
    (param (alpha, p)). Returns a list of row dicts with a quadrature-based
    large-rate reference index per cell."""
    rows = []
    for params in param_grid:
        if family == "pois":
            parent = PoissonParent(params[0])
            p1, p2 = float(params[0]), ""
            scale = 1.0
        elif family == "nb":
            parent = NegBinParent(params[0], params[1])
            p1, p2 = float(params[0]), float(params[1])
            scale = 1.0 / float(params[1])
        else:
            raise ValueError("family must be 'pois' or 'nb'")
        for D in orders:
            for rank in ranks:
                r = _resolve_rank(rank, D)
                if r is None:
                    continue
                dist = OrderStatDistribution(parent, OrderSpec(r, D))
                est = estimate_dispersion(dist, n_mc, rng)
                rows.append({
                    "family": family,
                    "r": r,
                    "D": D,
                    "param1": p1,
                    "param2": p2,
                    "mean": est.mean,
                    "variance": est.variance,
                    "index": est.index,
                    "stderr": est.mc_stderr_index,
                    "limit_index": scale * gaussian_orderstat_variance(r, D),
                })
    return rows


def dispersion_table_csv(rows) -> str:
    cols = ["family", "r", "D", "param1", "param2", "mean", "variance",
            "index", "stderr", "limit_index"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in cols})
    return buf.getvalue()
