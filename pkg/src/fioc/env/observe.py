"""Factored noisy observations through a fixed seeded linear mixing map."""
from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from .types import EnvConfig, WorldState


def raw_features(state: WorldState, n_types: int) -> np.ndarray:
    """Per-object concatenation (pos, vel, mass, radius, one-hot type)."""
    onehot = np.zeros((state.n, n_types))
    onehot[np.arange(state.n), state.type_id] = 1.0
    return np.concatenate(
        [state.pos, state.vel, state.mass[:, None], state.radius[:, None], onehot], axis=1)


def build_mixing(dataset_seed: int, obs_dim: int, mode: str = "orthogonal") -> np.ndarray:
    """Invertible mixing map, constant per dataset seed.

    Orthogonal mode draws a seeded Gaussian matrix and takes its QR factor
    with a fixed sign convention, so latents are recoverable but not
    axis-aligned with the raw features.
    """
    if mode == "identity":
        return np.eye(obs_dim)
    if mode != "orthogonal":
        raise ValueError(f"unknown mixing mode {mode!r}")
    g = rngmod.stream(dataset_seed, "mixing").standard_normal((obs_dim, obs_dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    return q


def observe(state: WorldState, config: EnvConfig, mixing: np.ndarray,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """N observation vectors: mixed raw features plus Gaussian noise."""
    feats = raw_features(state, config.n_types)
    mixed = feats @ mixing.T
    if config.sigma_obs > 0.0 and rng is not None:
        mixed = mixed + rng.normal(0.0, config.sigma_obs, size=mixed.shape)
    return mixed
