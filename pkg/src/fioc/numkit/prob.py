"""Closed-form probability utilities: softmax, Gumbel noise, diagonal-Gaussian KL."""
from __future__ import annotations

import numpy as np


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sample_gumbel(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard Gumbel draws by inverse CDF of uniforms (replayable)."""
    u = rng.random(shape)
    tiny = np.finfo(float).tiny
    return -np.log(-np.log(np.clip(u, tiny, 1.0 - 1e-16)))


def gumbel_softmax(logits: np.ndarray, temperature: float, noise: np.ndarray) -> np.ndarray:
    """Relaxed categorical sample softmax((logits + noise) / temperature).

    Noise is an explicit argument so every stochastic draw is replayable;
    pass zeros for the deterministic relaxation.
    """
    logits = np.asarray(logits, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if noise.shape != logits.shape:
        raise ValueError(f"noise shape {noise.shape} != logits shape {logits.shape}")
    return softmax((logits + noise) / temperature, axis=-1)


def gaussian_kl(mean1: np.ndarray, std1: np.ndarray,
                mean2: np.ndarray, std2: np.ndarray) -> float:
    """KL(N(mean1, diag std1^2) || N(mean2, diag std2^2)), summed over dims."""
    mean1, std1 = np.asarray(mean1, dtype=float), np.asarray(std1, dtype=float)
    mean2, std2 = np.asarray(mean2, dtype=float), np.asarray(std2, dtype=float)
    if np.any(std1 <= 0.0) or np.any(std2 <= 0.0):
        raise ValueError("standard deviations must be positive")
    var_ratio = (std1 / std2) ** 2
    return float(np.sum(np.log(std2 / std1) + 0.5 * (var_ratio + ((mean1 - mean2) / std2) ** 2 - 1.0)))


def gaussian_kl_elementwise(mean1, std1, mean2, std2) -> np.ndarray:
    """Per-dimension KL terms (no sum); used by batched model losses."""
    var_ratio = (std1 / std2) ** 2
    return np.log(std2 / std1) + 0.5 * (var_ratio + ((mean1 - mean2) / std2) ** 2 - 1.0)


def gaussian_logpdf(x: np.ndarray, mean: np.ndarray, std: np.ndarray, axis=-1) -> np.ndarray:
    """Diagonal-Gaussian log density, summed over the trailing axis."""
    z = (x - mean) / std
    return np.sum(-0.5 * z * z - np.log(std) - 0.5 * np.log(2.0 * np.pi), axis=axis)


def bernoulli_kl(q: np.ndarray, p: float) -> np.ndarray:
    """KL(Bernoulli(q) || Bernoulli(p)) elementwise, safe at q in {0, 1}."""
    q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
    if not 0.0 < p < 1.0:
        raise ValueError("prior edge probability must lie strictly inside (0, 1)")
    eps = 1e-12
    return (q * (np.log(q + eps) - np.log(p))
            + (1.0 - q) * (np.log(1.0 - q + eps) - np.log(1.0 - p)))
