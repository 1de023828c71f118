"""Shared MCMC plumbing: run configuration, the columnar posterior-sample
store, the chain driver, and posterior-predictive evaluation."""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..orderstats import orderstat_pmf_core
from ..parents import NegBinParent, PoissonParent

__all__ = [
    "McmcConfig",
    "PosteriorSamples",
    "run_chains",
    "config_hash",
    "posterior_predictive",
    "predictive_logpmf",
]


@dataclass(frozen=True)
class McmcConfig:
    n_chains: int = 4
    n_warmup: int = 4000
    n_samples: int = 500
    thin: int = 20
    seed: int = 0

    def __post_init__(self):
        if min(self.n_chains, self.n_warmup, self.n_samples, self.thin) < 1:
            raise ValueError("all MCMC config fields must be positive")

    @property
    def total_samples(self):
        return self.n_chains * self.n_samples

    def to_dict(self):
        return {
            "n_chains": self.n_chains,
            "n_warmup": self.n_warmup,
            "n_samples": self.n_samples,
            "thin": self.thin,
            "seed": self.seed,
        }


def config_hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class PosteriorSamples:
    """Thinned post-warmup draws, one (S x dim) matrix per parameter, plus
    run metadata (seed, chain layout, model config hash)."""

    params: dict
    meta: dict = field(default_factory=dict)

    @property
    def n_total(self):
        return next(iter(self.params.values())).shape[0]

    def save(self, outdir):
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "meta.json"), "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        for name, mat in self.params.items():
            arr = np.atleast_2d(np.asarray(mat, dtype=float))
            if arr.shape[0] == 1 and np.asarray(mat).ndim == 1:
                arr = arr.T
            np.savetxt(os.path.join(outdir, f"{name}.csv"), arr,
                       delimiter=",", fmt="%.17g")

    @classmethod
    def load(cls, outdir):
        with open(os.path.join(outdir, "meta.json")) as fh:
            meta = json.load(fh)
        params = {}
        for fn in sorted(os.listdir(outdir)):
            if fn.endswith(".csv"):
                params[fn[:-4]] = np.atleast_2d(
                    np.loadtxt(os.path.join(outdir, fn), delimiter=",", ndmin=2)
                )
        return cls(params=params, meta=meta)


def run_chains(init_fn, sweep_fn, record_fn, cfg: McmcConfig):
    """Generic sequential multi-chain Gibbs driver. Chains use independent
    substreams spawned from the seed, so results are reproducible and
    independent of scheduling."""
    records = []
    chain_ids = []
    root = np.random.SeedSequence(cfg.seed)
    for chain, child in enumerate(root.spawn(cfg.n_chains)):
        rng = np.random.default_rng(child)
        state = init_fn(rng)
        for _ in range(cfg.n_warmup):
            sweep_fn(state, rng)
        for _ in range(cfg.n_samples):
            for _ in range(cfg.thin):
                sweep_fn(state, rng)
            records.append(record_fn(state))
            chain_ids.append(chain)
    return records, np.asarray(chain_ids)


# ---------------------------------------------------------------------------
# Posterior predictive evaluation


def _unit_mixture(samples: PosteriorSamples, unit, column=False):
    """Per-draw (parent, rank, order) arrays describing the predictive
    mixture for one prediction target. With column=True, parent parameters
    are shaped (S, 1) so they broadcast against a row of z values."""
    model = samples.meta.get("model")

    def shape(v):
        return v[:, None] if column else v

    if model == "iid_nb":
        alpha = np.asarray(samples.params["alpha"], dtype=float).reshape(-1)
        p = np.asarray(samples.params["p"], dtype=float).reshape(-1)
        S = alpha.shape[0]
        parent = NegBinParent(shape(alpha), shape(p))
        r = np.full(S, samples.meta["r"], dtype=np.int64)
        D = np.full(S, samples.meta["D"], dtype=np.int64)
    elif model == "factorization":
        i, j = unit
        I, J, K = samples.meta["I"], samples.meta["J"], samples.meta["K"]
        theta = np.asarray(samples.params["theta"], dtype=float).reshape(-1, I, K)
        phi = np.asarray(samples.params["phi"], dtype=float).reshape(-1, K, J)
        mu = np.einsum("sk,sk->s", theta[:, i, :], phi[:, :, j])
        parent = PoissonParent(shape(mu))
        D = np.full(mu.shape[0], samples.meta["D"], dtype=np.int64)
        r = D.copy()
    elif model == "flights":
        k = int(unit)
        a = np.asarray(samples.params["a"], dtype=float)
        b = np.asarray(samples.params["b"], dtype=float)
        c = np.asarray(samples.params["c"], dtype=float)
        orig = samples.meta["route_orig"][k]
        dest = samples.meta["route_dest"][k]
        x = samples.meta["route_dist"][k]
        mu = a[:, orig] + b[:, dest] + c[:, k] * x
        parent = PoissonParent(shape(mu))
        if "D" in samples.params:
            D = np.asarray(samples.params["D"], dtype=float)[:, k].astype(np.int64)
        else:
            D = np.full(mu.shape[0], samples.meta["fixed_d"], dtype=np.int64)
        r = (D + 1) // 2
    else:
        raise ValueError(f"unknown model kind {model!r} in samples metadata")
    return parent, r, D


def predictive_logpmf(samples: PosteriorSamples, units, y_values):
    """log of the S-sample mixture pmf at each (unit, y) pair."""
    y_values = np.asarray(y_values, dtype=np.int64)
    out = np.empty(y_values.shape[0])
    for idx, (unit, y) in enumerate(zip(units, y_values)):
        parent, r, D = _unit_mixture(samples, unit)
        y = int(y)
        pmf = orderstat_pmf_core(
            r, D,
            parent.cdf(y - 1), parent.cdf(y),
            parent.sf(y - 1), parent.sf(y),
        )
        m = float(np.mean(pmf))
        out[idx] = np.log(m) if m > 0 else -np.inf
    return out


def posterior_predictive(samples: PosteriorSamples, unit=None):
    """Full Monte Carlo mixture pmf for one prediction target, over the
    quantile-bounded integer support. Returns (z_grid, pmf)."""
    parent, r, D = _unit_mixture(samples, unit, column=True)
    zmax = int(parent.quantile_bound(1e-12))
    z = np.arange(zmax + 1)
    zc = z[None, :]
    pmf = orderstat_pmf_core(
        r[:, None], D[:, None],
        np.asarray(parent.cdf(zc - 1), dtype=float),
        np.asarray(parent.cdf(zc), dtype=float),
        np.asarray(parent.sf(zc - 1), dtype=float),
        np.asarray(parent.sf(zc), dtype=float),
    )
    return z, pmf.mean(axis=0)
