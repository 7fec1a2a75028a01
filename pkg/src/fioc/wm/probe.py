"""Closed-form linear probing of learned features against ground truth.

Ridge regression (lambda = 1e-6) with an intercept, features standardized by
train-split statistics; reports held-out MSE per target group.
"""
from __future__ import annotations

import numpy as np

RIDGE_LAMBDA = 1e-6
HELDOUT_FRACTION = 0.2


class ProbeError(ValueError):
    pass


def ridge_fit(x: np.ndarray, y: np.ndarray, lam: float = RIDGE_LAMBDA) -> np.ndarray:
    """Ridge solution with bias column; returns (d+1, targets) coefficients."""
    xb = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    gram = xb.T @ xb + lam * np.eye(xb.shape[1])
    return np.linalg.solve(gram, xb.T @ y)


def ridge_predict(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    xb = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    return xb @ coef


def linear_probe(features: np.ndarray, target_groups: dict[str, np.ndarray],
                 rng: np.random.Generator | None = None) -> dict[str, float]:
    """Held-out MSE of a ridge read-out per named target group.

    features (S, d); each target group (S, k). Requires at least twice as
    many samples as feature dimensions. Degenerate (zero-variance) feature
    columns are dropped before fitting.
    """
    s, d = features.shape
    if s < 2 * d:
        raise ProbeError(f"need >= {2 * d} samples for {d} features, got {s}")
    order = (rng.permutation(s) if rng is not None else np.arange(s))
    cut = max(1, int(round(s * (1.0 - HELDOUT_FRACTION))))
    train_idx, test_idx = order[:cut], order[cut:]
    if len(test_idx) == 0:
        raise ProbeError("held-out split is empty")

    mean = features[train_idx].mean(axis=0)
    std = features[train_idx].std(axis=0)
    keep = std > 1e-12
    std_safe = np.where(keep, std, 1.0)
    xtr = ((features[train_idx] - mean) / std_safe)[:, keep]
    xte = ((features[test_idx] - mean) / std_safe)[:, keep]
    if xtr.shape[1] == 0:
        xtr = np.zeros((len(train_idx), 1))
        xte = np.zeros((len(test_idx), 1))

    out = {}
    for name, targets in target_groups.items():
        targets = np.asarray(targets, dtype=float)
        if targets.ndim == 1:
            targets = targets[:, None]
        coef = ridge_fit(xtr, targets[train_idx])
        pred = ridge_predict(coef, xte)
        out[name] = float(np.mean((pred - targets[test_idx]) ** 2))
    return out


def attribute_targets(records, n_types: int) -> dict[str, np.ndarray]:
    """Stacked per-slot ground-truth targets across all (episode, t, slot)."""
    pos = np.concatenate([rec.gt_pos.reshape(-1, 2) for rec in records])
    vel = np.concatenate([rec.gt_vel.reshape(-1, 2) for rec in records])
    mass = np.concatenate([rec.mass.reshape(-1, 1) for rec in records])
    radius = np.concatenate([rec.radius.reshape(-1, 1) for rec in records])
    types = np.concatenate([rec.type_id.reshape(-1) for rec in records])
    onehot = np.zeros((types.size, n_types))
    onehot[np.arange(types.size), types] = 1.0
    return {
        "position": pos,
        "velocity": vel,
        "mass_radius": np.concatenate([mass, radius], axis=1),
        "type": onehot,
        "dynamics": np.concatenate([pos, vel], axis=1),
        "statics": np.concatenate([mass, radius, onehot], axis=1),
    }
