"""Shared pair encoder: ordered-pair embeddings from per-slot latents."""
from __future__ import annotations

import numpy as np

from .. import numkit as nk
from ..graphs import pair_indices


def pairwise_embed(net: nk.DenseNet, s: np.ndarray):
    """u_p = net(s_a, s_a - s_b) for every ordered pair p = (a, b), a != b.

    The (anchor, difference) parameterization is a bijective re-arrangement
    of (s_a, s_b) that surfaces the relative geometry pairwise structure
    lives in. s has shape (B, N, s_dim); returns (u (B, P, u_dim), cache).
    """
    if s.ndim != 3:
        raise ValueError(f"expected (B, N, s_dim) latents, got {s.shape}")
    n = s.shape[1]
    if n < 2:
        raise ValueError("pairwise embedding needs at least 2 objects")
    first, second = pair_indices(n)
    pair_in = np.concatenate([s[:, first], s[:, first] - s[:, second]], axis=-1)
    u, net_cache = nk.net_forward(net, pair_in)
    return u, (net_cache, first, second, s.shape)


def pairwise_embed_backward(net: nk.DenseNet, cache, du: np.ndarray,
                            grads: dict, prefix: str) -> np.ndarray:
    """Push pair-embedding gradients back to the per-slot latents."""
    net_cache, first, second, s_shape = cache
    dpair_in = nk.net_backward(net, net_cache, du, grads, prefix)
    s_dim = s_shape[-1]
    ds = np.zeros(s_shape)
    np.add.at(ds, (slice(None), first), dpair_in[..., :s_dim])
    np.add.at(ds, (slice(None), first), dpair_in[..., s_dim:])
    np.add.at(ds, (slice(None), second), -dpair_in[..., s_dim:])
    return ds
