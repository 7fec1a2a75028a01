"""Discrete interaction patterns: quantize a pooled pair embedding against a
prototype codebook and decode the chosen code into edge probabilities.

Gradients pass straight through the quantization to the pooled embedding;
codebook vectors learn from the VQ codebook loss and the decoder path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numkit as nk

K_DEFAULT = 16
COMMITMENT_WEIGHT = 0.25


@dataclass
class Codebook:
    prototypes: np.ndarray   # (K, u_dim)
    decoder: nk.DenseNet     # u_dim -> n * n (sigmoid-headed edge probabilities)
    n_objects: int
    commitment: float = COMMITMENT_WEIGHT


def make_codebook(u_dim: int, n_objects: int, k: int = K_DEFAULT, hidden: int = 32,
                  rng: np.random.Generator | None = None) -> Codebook:
    if k < 2:
        raise ValueError("codebook needs at least 2 prototypes")
    protos = (rng.standard_normal((k, u_dim)) * 0.1 if rng is not None
              else np.zeros((k, u_dim)))
    return Codebook(
        prototypes=protos,
        decoder=nk.dense((u_dim, hidden, n_objects * n_objects), rng=rng),
        n_objects=n_objects,
    )


def codebook_params(cb: Codebook, prefix: str) -> dict[str, np.ndarray]:
    out = {f"{prefix}/prototypes": cb.prototypes}
    out.update(nk.net_params(cb.decoder, f"{prefix}/dec"))
    return out


def quantize(cb: Codebook, u: np.ndarray):
    """Nearest prototype by Euclidean distance; ties take the lowest index.

    u (B, u_dim). Returns (z (B,) int, e_z (B, u_dim), losses dict, cache);
    losses are the VQ codebook term ||sg(u) - e_z||^2 and the commitment
    term weighted by cb.commitment, both averaged over the batch.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != cb.prototypes.shape[1]:
        raise ValueError(f"embedding dim {u.shape[1]} != codebook dim {cb.prototypes.shape[1]}")
    d2 = np.sum((u[:, None, :] - cb.prototypes[None, :, :]) ** 2, axis=-1)
    z = np.argmin(d2, axis=1)          # argmin takes the first (lowest) index on ties
    e_z = cb.prototypes[z]
    diff = u - e_z
    losses = {
        "codebook": float(np.mean(np.sum(diff * diff, axis=-1))),
        "commitment": float(cb.commitment * np.mean(np.sum(diff * diff, axis=-1))),
    }
    return z, e_z, losses, (u, z, diff)


def quantize_backward(cb: Codebook, cache, de_z: np.ndarray, grads: dict,
                      prefix: str, loss_scale: float = 1.0) -> np.ndarray:
    """Straight-through: de_z flows to u unchanged; adds VQ-loss gradients.

    loss_scale multiplies the codebook/commitment loss contributions (use the
    weight those losses carry in the total objective).
    """
    u, z, diff = cache
    b = u.shape[0]
    du = de_z.copy()
    du += loss_scale * cb.commitment * 2.0 * diff / b       # commitment pulls u
    dproto = np.zeros_like(cb.prototypes)
    np.add.at(dproto, z, -loss_scale * 2.0 * diff / b)      # codebook pulls e_z
    np.add.at(dproto, z, de_z)                              # straight-through decode path
    key = f"{prefix}/prototypes"
    if key in grads:
        grads[key] += dproto
    else:
        grads[key] = dproto
    return du


def decode_code_to_graph(cb: Codebook, e_z: np.ndarray):
    """Edge-probability matrix from a code; diagonal forcibly zero."""
    e_z = np.atleast_2d(e_z)
    raw, cache = nk.net_forward(cb.decoder, e_z)
    n = cb.n_objects
    probs = 1.0 / (1.0 + np.exp(-raw.reshape(-1, n, n)))
    idx = np.arange(n)
    probs[:, idx, idx] = 0.0
    return probs, (cache, raw, n)


def decode_backward(cb: Codebook, cache, dprobs: np.ndarray, grads: dict,
                    prefix: str) -> np.ndarray:
    net_cache, raw, n = cache
    probs = 1.0 / (1.0 + np.exp(-raw.reshape(-1, n, n)))
    idx = np.arange(n)
    dprobs = dprobs.copy()
    dprobs[:, idx, idx] = 0.0
    draw = (dprobs * probs * (1.0 - probs)).reshape(raw.shape)
    return nk.net_backward(cb.decoder, net_cache, draw, grads, f"{prefix}/dec")


def pool_embeddings(u: np.ndarray) -> np.ndarray:
    """Mean over ordered pairs: one pooled embedding per batch element."""
    return u.mean(axis=1)
