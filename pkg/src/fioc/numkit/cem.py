"""Cross-entropy-method minimizer with diagonal elite refit.

The initial mean is always evaluated as a candidate, so the best result can
never be worse than the starting point, and callers may inject extra seed
candidates (e.g. a null plan) into the first population.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CemConfig:
    population: int = 64
    elites: int = 8
    iterations: int = 6
    horizon: int = 1
    init_std: float = 0.5
    refine_rate: float = 0.0
    std_floor: float = 1e-6

    def __post_init__(self) -> None:
        if not 0 < self.elites <= self.population:
            raise ValueError(f"need 0 < elites <= population, got {self.elites}/{self.population}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.init_std <= 0.0:
            raise ValueError("init_std must be positive")


def cem_optimize(objective, dimension: int, config: CemConfig, rng: np.random.Generator,
                 init_mean: np.ndarray | None = None,
                 seed_candidates: np.ndarray | None = None,
                 bound: float | None = None,
                 vectorized: bool = False,
                 trace: list | None = None):
    """Minimize objective over R^dimension; returns (best vector, best value).

    objective maps a vector to a float, or (population, dimension) to a
    (population,) array when vectorized=True. Candidates with non-finite
    scores are discarded; an iteration with no finite score aborts. When a
    list is passed as trace, the best value seen is appended per iteration.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    mean = np.zeros(dimension) if init_mean is None else np.array(init_mean, dtype=float)
    std = np.full(dimension, config.init_std)

    def evaluate(cands: np.ndarray) -> np.ndarray:
        if vectorized:
            return np.asarray(objective(cands), dtype=float)
        return np.array([float(objective(c)) for c in cands])

    best_x, best_val = None, np.inf
    for it in range(config.iterations):
        samples = mean + std * rng.standard_normal((config.population, dimension))
        injected = [mean[None, :]]
        if it == 0 and seed_candidates is not None:
            injected.append(np.atleast_2d(np.asarray(seed_candidates, dtype=float)))
        cands = np.concatenate(injected + [samples], axis=0)
        if bound is not None:
            cands = np.clip(cands, -bound, bound)
        scores = evaluate(cands)
        finite = np.isfinite(scores)
        if not finite.any():
            raise FloatingPointError("objective returned non-finite values on every candidate")
        cands, scores = cands[finite], scores[finite]
        order = np.argsort(scores, kind="stable")
        if scores[order[0]] < best_val:
            best_val = float(scores[order[0]])
            best_x = cands[order[0]].copy()
        elite = cands[order[: config.elites]]
        mean = elite.mean(axis=0)
        std = np.maximum(elite.std(axis=0), config.std_floor)
        if config.refine_rate > 0.0:
            mean = mean - config.refine_rate * _central_diff_grad(evaluate, mean)
            if bound is not None:
                mean = np.clip(mean, -bound, bound)
        if trace is not None:
            trace.append(best_val)
    final_score = evaluate(mean[None, :])[0]
    if np.isfinite(final_score) and final_score < best_val:
        best_val = float(final_score)
        best_x = mean.copy()
    return best_x, best_val


def _central_diff_grad(evaluate, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    probes = np.repeat(x[None, :], 2 * x.size, axis=0)
    for i in range(x.size):
        probes[2 * i, i] += h
        probes[2 * i + 1, i] -= h
    vals = evaluate(probes)
    grad = (vals[0::2] - vals[1::2]) / (2.0 * h)
    return np.where(np.isfinite(grad), grad, 0.0)
