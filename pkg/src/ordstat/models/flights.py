"""Median-of-D Poisson regression for route-level duration counts:
each observation on route k is the median of D_k iid Poisson draws with
rate mu_k = a_origin + b_dest + c_k * distance_k. D_k is either fixed or
given an odd-binomial prior with a Beta(1,1) hyperprior on its success
probability.

Sweep: augment the D_k latent draws per observation, thin route totals
across the three additive rate components, conjugate gamma updates on the
airport intercepts and distance coefficients, an exact categorical update
of each D_k against the collapsed likelihood, and a beta update of the
order-prior probability.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..augment import sample_conditional_batch
from ..gibbs_kit import OddBinomialPrior
from ..orderstats import orderstat_pmf_core
from ..parents import PoissonParent
from .common import McmcConfig, PosteriorSamples, config_hash, run_chains

__all__ = ["FlightModel", "FlightData", "fit_flights", "simulate_flights"]


@dataclass(frozen=True)
class FlightModel:
    d_max: int = 9
    fixed_d: Optional[int] = None  # when set, skip D_k and rho updates
    a0: float = 1.0  # gamma shape shared by a_j, b_j, c_k priors
    b0: float = 1.0  # gamma rate

    def __post_init__(self):
        if self.d_max < 1 or self.d_max % 2 == 0:
            raise ValueError("d_max must be an odd positive integer")
        if self.fixed_d is not None and (self.fixed_d < 1 or self.fixed_d % 2 == 0):
            raise ValueError("fixed_d must be an odd positive integer")
        if min(self.a0, self.b0) <= 0:
            raise ValueError("hyperparameters must be positive")


class FlightData:
    """Indexed view of (origin, dest, distance, y) records: airports and
    routes get dense integer ids; observations point at their route."""

    def __init__(self, records):
        if not records:
            raise ValueError("no flight records supplied")
        airports = sorted({r[0] for r in records} | {r[1] for r in records})
        self.airports = airports
        amap = {a: i for i, a in enumerate(airports)}
        route_map = {}
        route_orig, route_dest, route_dist = [], [], []
        obs_route, obs_y = [], []
        for orig, dest, dist, y in records:
            if y < 0:
                raise ValueError("counts must be nonnegative")
            key = (orig, dest)
            if key not in route_map:
                route_map[key] = len(route_orig)
                route_orig.append(amap[orig])
                route_dest.append(amap[dest])
                route_dist.append(float(dist))
            k = route_map[key]
            if route_dist[k] != float(dist):
                raise ValueError(f"inconsistent distance for route {key}")
            obs_route.append(k)
            obs_y.append(int(y))
        self.route_orig = np.asarray(route_orig, dtype=np.int64)
        self.route_dest = np.asarray(route_dest, dtype=np.int64)
        self.route_dist = np.asarray(route_dist, dtype=float)
        self.obs_route = np.asarray(obs_route, dtype=np.int64)
        self.obs_y = np.asarray(obs_y, dtype=np.int64)
        self.n_routes = len(route_orig)
        self.n_airports = len(airports)
        self.route_n_obs = np.bincount(self.obs_route, minlength=self.n_routes)


def _route_loglik_by_order(data: FlightData, mu, d_values):
    """(n_routes, n_d) log-likelihood of each route's observations under
    each candidate order d (median rank)."""
    y = data.obs_y
    p_obs = PoissonParent(mu[data.obs_route])
    F_lo = p_obs.cdf(y - 1)
    F_hi = p_obs.cdf(y)
    S_lo = p_obs.sf(y - 1)
    S_hi = p_obs.sf(y)
    out = np.empty((data.n_routes, len(d_values)))
    for col, d in enumerate(d_values):
        r = (d + 1) // 2
        pmf = orderstat_pmf_core(r, d, F_lo, F_hi, S_lo, S_hi)
        with np.errstate(divide="ignore"):
            lp = np.log(pmf)
        out[:, col] = np.bincount(data.obs_route, weights=lp,
                                  minlength=data.n_routes)
    return out


def _sweep(state, data: FlightData, model: FlightModel, rng):
    a, b, c = state["a"], state["b"], state["c"]
    D_k = state["D"]
    mu = a[data.route_orig] + b[data.route_dest] + c * data.route_dist

    # augment every observation's latent draws
    D_obs = D_k[data.obs_route]
    r_obs = (D_obs + 1) // 2
    values, _, _, _ = sample_conditional_batch(
        data.obs_y, r_obs, D_obs, PoissonParent(mu[data.obs_route]), rng
    )
    Z_obs = values.sum(axis=1)
    Z_route = np.bincount(data.obs_route, weights=Z_obs,
                          minlength=data.n_routes).astype(np.int64)

    # thin route totals over the three rate components
    w = np.stack([a[data.route_orig], b[data.route_dest], c * data.route_dist], axis=1)
    Zsplit = rng.multinomial(Z_route, w / w.sum(axis=1, keepdims=True))

    # each observation on route k contributes D_k unit-exposure draws
    expo = data.route_n_obs * D_k
    a_cnt = np.bincount(data.route_orig, weights=Zsplit[:, 0], minlength=data.n_airports)
    a_expo = np.bincount(data.route_orig, weights=expo, minlength=data.n_airports)
    a = rng.gamma(model.a0 + a_cnt, 1.0 / (model.b0 + a_expo))
    b_cnt = np.bincount(data.route_dest, weights=Zsplit[:, 1], minlength=data.n_airports)
    b_expo = np.bincount(data.route_dest, weights=expo, minlength=data.n_airports)
    b = rng.gamma(model.a0 + b_cnt, 1.0 / (model.b0 + b_expo))
    c = rng.gamma(model.a0 + Zsplit[:, 2],
                  1.0 / (model.b0 + expo * data.route_dist))

    state["a"], state["b"], state["c"] = a, b, c

    if model.fixed_d is None:
        mu = a[data.route_orig] + b[data.route_dest] + c * data.route_dist
        prior = OddBinomialPrior(model.d_max, state["rho"])
        d_values = prior.support()
        logits = prior.log_pmf(d_values)[None, :] + _route_loglik_by_order(data, mu, d_values)
        gumb = rng.gumbel(size=logits.shape)
        D_k = d_values[np.argmax(logits + gumb, axis=1)].astype(np.int64)
        state["D"] = D_k
        K = data.n_routes
        state["rho"] = float(rng.beta(1.0 + 0.5 * (D_k.sum() - K),
                                      1.0 + 0.5 * (K * model.d_max - D_k.sum())))
    return state


def fit_flights(records, model: FlightModel, cfg: McmcConfig) -> PosteriorSamples:
    data = records if isinstance(records, FlightData) else FlightData(records)

    def init(rng):
        n_a, n_r = data.n_airports, data.n_routes
        if model.fixed_d is not None:
            D = np.full(n_r, model.fixed_d, dtype=np.int64)
            rho = 0.5
        else:
            D = np.full(n_r, (model.d_max + 1) // 2 | 1, dtype=np.int64)
            rho = 0.5
        return {
            "a": rng.gamma(model.a0, 1.0 / model.b0, size=n_a),
            "b": rng.gamma(model.a0, 1.0 / model.b0, size=n_a),
            "c": rng.gamma(model.a0, 1.0 / model.b0, size=n_r),
            "D": D,
            "rho": rho,
        }

    def sweep(state, rng):
        _sweep(state, data, model, rng)

    def record(state):
        return (state["a"].copy(), state["b"].copy(), state["c"].copy(),
                state["D"].copy(), state["rho"])

    records_out, chain_ids = run_chains(init, sweep, record, cfg)
    meta = {
        "model": "flights",
        "airports": data.airports,
        "route_orig": data.route_orig.tolist(),
        "route_dest": data.route_dest.tolist(),
        "route_dist": data.route_dist.tolist(),
        "d_max": model.d_max,
        "fixed_d": model.fixed_d,
        "hyperparams": {"a0": model.a0, "b0": model.b0},
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "chains": chain_ids.tolist(),
    }
    meta["config_hash"] = config_hash({k: meta[k] for k in
                                       ("model", "route_orig", "route_dest", "route_dist",
                                        "d_max", "fixed_d", "hyperparams", "config")})
    params = {
        "a": np.stack([r[0] for r in records_out]),
        "b": np.stack([r[1] for r in records_out]),
        "c": np.stack([r[2] for r in records_out]),
        "rho": np.asarray([r[4] for r in records_out]),
    }
    if model.fixed_d is None:
        params["D"] = np.stack([r[3] for r in records_out]).astype(float)
    return PosteriorSamples(params=params, meta=meta)


def simulate_flights(n_airports, n_routes, n_obs_per_route, rng, d_values=None,
                     d_max=9, a0=1.0, b0=1.0, dist_scale=1.0):
    """Synthetic records from the model: random route endpoints/distances,
    gamma-prior rates, per-route orders (given or odd-binomial), and
    median-of-D observations. Returns (records, true_D, route_keys)."""
    airports = [f"A{i:02d}" for i in range(n_airports)]
    a = rng.gamma(a0, 1.0 / b0, size=n_airports)
    b = rng.gamma(a0, 1.0 / b0, size=n_airports)
    c = rng.gamma(a0, 1.0 / b0, size=n_routes)
    pairs = set()
    route_o, route_d = [], []
    while len(route_o) < n_routes:
        i, j = rng.integers(0, n_airports, size=2)
        if i != j and (i, j) not in pairs:
            pairs.add((i, j))
            route_o.append(int(i))
            route_d.append(int(j))
    dist = dist_scale * (0.5 + rng.random(n_routes))
    if d_values is None:
        D = 2 * rng.binomial((d_max - 1) // 2, 0.5, size=n_routes) + 1
    else:
        D = np.asarray(d_values, dtype=np.int64)
    mu = a[route_o] + b[route_d] + c * dist
    records = []
    for k in range(n_routes):
        draws = rng.poisson(mu[k], size=(n_obs_per_route, D[k]))
        y = np.sort(draws, axis=1)[:, (D[k] - 1) // 2]
        for v in y:
            records.append((airports[route_o[k]], airports[route_d[k]],
                            float(dist[k]), int(v)))
    keys = [(airports[route_o[k]], airports[route_d[k]]) for k in range(n_routes)]
    return records, D, keys
