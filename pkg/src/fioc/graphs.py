"""Shared ordered-pair enumeration for N-object graphs.

Pair p runs over ordered (sender s, receiver r), s != r, row-major in the
sender; the edge weight for p sits at graph[s, r].
"""
from __future__ import annotations

import numpy as np


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    senders, receivers = [], []
    for s in range(n):
        for r in range(n):
            if s != r:
                senders.append(s)
                receivers.append(r)
    return np.array(senders), np.array(receivers)


def weights_to_matrix(w: np.ndarray, n: int) -> np.ndarray:
    """Scatter per-pair weights (..., P) into (..., N, N) with zero diagonal."""
    senders, receivers = pair_indices(n)
    out = np.zeros(w.shape[:-1] + (n, n))
    out[..., senders, receivers] = w
    return out


def matrix_to_weights(g: np.ndarray) -> np.ndarray:
    n = g.shape[-1]
    senders, receivers = pair_indices(n)
    return np.asarray(g, dtype=float)[..., senders, receivers]
