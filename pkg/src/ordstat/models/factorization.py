"""Gamma-Poisson matrix factorization observed through a per-entry max:
Y_ij = max of D iid Poisson(mu_ij) draws, mu_ij = sum_k theta_ik phi_kj,
with Gamma(a, b) priors on the factors and an optional heldout mask.

Sweep: augment the D latent draws behind each nonzero observed entry
(zero entries force all-zero latents and are skipped), thin entry totals
across factors with a multinomial, then conjugate gamma updates on theta
rows and phi columns with D-scaled exposures. Heldout entries contribute
neither counts nor exposure.
"""

from dataclasses import dataclass

import numpy as np

from ..augment import sample_conditional_batch
from ..parents import PoissonParent
from .common import McmcConfig, PosteriorSamples, config_hash, run_chains

__all__ = ["FactorizationModel", "fit_factorization", "simulate_factorization",
           "FactorizationGeweke"]


@dataclass(frozen=True)
class FactorizationModel:
    K: int
    D: int
    a_theta: float = 1.0
    b_theta: float = 1.0
    a_phi: float = 1.0
    b_phi: float = 1.0

    def __post_init__(self):
        if self.K < 1 or self.D < 1:
            raise ValueError("K and D must be positive")
        if min(self.a_theta, self.b_theta, self.a_phi, self.b_phi) <= 0:
            raise ValueError("hyperparameters must be positive")


def _augment_entry_totals(Y, rows, cols, mu_entries, D, rng):
    """Total latent counts per (row, col) entry for the max model; only
    nonzero entries need the conditional sampler."""
    n = rows.shape[0]
    Z = np.zeros(n, dtype=np.int64)
    y = Y[rows, cols]
    nz = y > 0
    n_augmented = int(nz.sum())
    if n_augmented:
        if D == 1:
            Z[nz] = y[nz]
        else:
            parent = PoissonParent(mu_entries[nz])
            values, _, _, _ = sample_conditional_batch(y[nz], D, D, parent, rng)
            Z[nz] = values.sum(axis=1)
    return Z, n_augmented


def _sweep(state, Y, obs_mask, model: FactorizationModel, rng):
    K, D = model.K, model.D
    theta, phi = state["theta"], state["phi"]
    I, J = Y.shape
    rows, cols = state["obs_rows"], state["obs_cols"]

    mu = theta @ phi
    Z, n_aug = _augment_entry_totals(Y, rows, cols, mu[rows, cols], D, rng)
    state["n_augmented"] = n_aug

    rates = theta[rows, :] * phi[:, cols].T  # (n_obs, K)
    pvals = rates / rates.sum(axis=1, keepdims=True)
    Zk = rng.multinomial(Z, pvals)  # (n_obs, K)

    S_theta = np.zeros((I, K))
    np.add.at(S_theta, rows, Zk)
    S_phi = np.zeros((J, K))
    np.add.at(S_phi, cols, Zk)

    E_theta = D * (obs_mask @ phi.T)  # (I, K): sum of phi over observed cols
    theta = rng.gamma(model.a_theta + S_theta, 1.0 / (model.b_theta + E_theta))
    E_phi = D * (obs_mask.T @ theta)  # (J, K): sum of theta over observed rows
    phi = rng.gamma(model.a_phi + S_phi, 1.0 / (model.b_phi + E_phi)).T

    state["theta"] = theta
    state["phi"] = phi
    return state


def fit_factorization(Y, heldout_mask, model: FactorizationModel,
                      cfg: McmcConfig) -> PosteriorSamples:
    """Fit to a dense count matrix Y; heldout_mask marks entries excluded
    from the likelihood (None for none)."""
    Y = np.asarray(Y, dtype=np.int64)
    I, J = Y.shape
    if heldout_mask is None:
        heldout_mask = np.zeros((I, J), dtype=bool)
    heldout_mask = np.asarray(heldout_mask, dtype=bool)
    obs_mask = (~heldout_mask).astype(float)
    if np.any(obs_mask.sum(axis=1) == 0) or np.any(obs_mask.sum(axis=0) == 0):
        raise ValueError("a fully heldout row or column leaves its factors unidentified")
    rows, cols = np.nonzero(~heldout_mask)

    def init(rng):
        return {
            "theta": rng.gamma(model.a_theta, 1.0 / model.b_theta, size=(I, model.K)),
            "phi": rng.gamma(model.a_phi, 1.0 / model.b_phi, size=(model.K, J)),
            "obs_rows": rows,
            "obs_cols": cols,
            "n_augmented": 0,
        }

    def sweep(state, rng):
        _sweep(state, Y, obs_mask, model, rng)

    def record(state):
        return (state["theta"].ravel().copy(), state["phi"].ravel().copy())

    records, chain_ids = run_chains(init, sweep, record, cfg)
    theta = np.stack([r[0] for r in records])
    phi = np.stack([r[1] for r in records])
    meta = {
        "model": "factorization",
        "I": I, "J": J, "K": model.K, "D": model.D,
        "hyperparams": {"a_theta": model.a_theta, "b_theta": model.b_theta,
                        "a_phi": model.a_phi, "b_phi": model.b_phi},
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "chains": chain_ids.tolist(),
    }
    meta["config_hash"] = config_hash({k: meta[k] for k in
                                       ("model", "I", "J", "K", "D", "hyperparams", "config")})
    return PosteriorSamples(params={"theta": theta, "phi": phi}, meta=meta)


def simulate_factorization(I, J, K, D, rng, a=1.0, b=1.0):
    """Prior-predictive synthetic matrix: factors from Gamma(a,b), entries
    from the per-entry max of D Poisson draws."""
    theta = rng.gamma(a, 1.0 / b, size=(I, K))
    phi = rng.gamma(a, 1.0 / b, size=(K, J))
    mu = theta @ phi
    Y = rng.poisson(mu[:, :, None] * np.ones(D)).max(axis=2)
    return Y.astype(np.int64), theta, phi


class FactorizationGeweke:
    """Joint-distribution test adapter for a small dense instance."""

    def __init__(self, model: FactorizationModel, I, J, broken=None):
        self.model = model
        self.I, self.J = int(I), int(J)
        self.broken = broken  # None | 'skip_phi' | 'wrong_exposure'
        self._rows, self._cols = np.nonzero(np.ones((self.I, self.J), dtype=bool))
        self._obs = np.ones((self.I, self.J))

    def forward(self, rng):
        m = self.model
        theta = rng.gamma(m.a_theta, 1.0 / m.b_theta, size=(self.I, m.K))
        phi = rng.gamma(m.a_phi, 1.0 / m.b_phi, size=(m.K, self.J))
        mu = theta @ phi
        Y = rng.poisson(mu[:, :, None] * np.ones(m.D)).max(axis=2).astype(np.int64)
        return {"theta": theta, "phi": phi, "Y": Y,
                "obs_rows": self._rows, "obs_cols": self._cols, "n_augmented": 0}

    def transition(self, state, rng):
        m = self.model
        state = _sweep_broken(state, state["Y"], self._obs, m, rng, self.broken)
        mu = state["theta"] @ state["phi"]
        Y = rng.poisson(mu[:, :, None] * np.ones(m.D)).max(axis=2)
        state["Y"] = Y.astype(np.int64)
        return state

    @staticmethod
    def stats():
        return {
            "theta_mean": lambda s: float(np.mean(s["theta"])),
            "phi_mean": lambda s: float(np.mean(s["phi"])),
            "mu_mean": lambda s: float(np.mean(s["theta"] @ s["phi"])),
            "y_mean": lambda s: float(np.mean(s["Y"])),
        }


def _sweep_broken(state, Y, obs_mask, model, rng, broken):
    if broken is None:
        return _sweep(state, Y, obs_mask, model, rng)
    K, D = model.K, model.D
    theta, phi = state["theta"], state["phi"]
    I, J = Y.shape
    rows, cols = state["obs_rows"], state["obs_cols"]
    mu = theta @ phi
    Z, n_aug = _augment_entry_totals(Y, rows, cols, mu[rows, cols], D, rng)
    state["n_augmented"] = n_aug
    rates = theta[rows, :] * phi[:, cols].T
    Zk = rng.multinomial(Z, rates / rates.sum(axis=1, keepdims=True))
    S_theta = np.zeros((I, K))
    np.add.at(S_theta, rows, Zk)
    S_phi = np.zeros((J, K))
    np.add.at(S_phi, cols, Zk)
    scale = 1 if broken == "wrong_exposure" else D
    E_theta = scale * (obs_mask @ phi.T)
    theta = rng.gamma(model.a_theta + S_theta, 1.0 / (model.b_theta + E_theta))
    if broken != "skip_phi":
        E_phi = D * (obs_mask.T @ theta)
        phi = rng.gamma(model.a_phi + S_phi, 1.0 / (model.b_phi + E_phi)).T
    state["theta"] = theta
    state["phi"] = phi
    return state
