"""Graph-recovery metric: normalized structured Hamming distance.

Counts directed off-diagonal mismatches, normalized by N(N-1) per step and
averaged over the horizon.
"""
from __future__ import annotations

import numpy as np


def nshd(estimated: np.ndarray, ground_truth: np.ndarray) -> float:
    est = np.asarray(estimated)
    ref = np.asarray(ground_truth)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {ref.shape}")
    if est.ndim == 2:
        est, ref = est[None], ref[None]
    if est.ndim != 3 or est.shape[1] != est.shape[2]:
        raise ValueError(f"expected (T, N, N) graph sequences, got {est.shape}")
    n = est.shape[1]
    if n < 2:
        raise ValueError("graphs need at least 2 nodes")
    off = ~np.eye(n, dtype=bool)
    mism = (est.astype(np.uint8) != ref.astype(np.uint8))[:, off]
    return float(mism.sum(axis=1).mean() / (n * (n - 1)))
