"""Bias-corrected adaptive moment optimizer over flat parameter dicts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_init(params: dict[str, np.ndarray], lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    for key in sorted(params):
        state.m[key] = np.zeros_like(params[key])
        state.v[key] = np.zeros_like(params[key])
    return state


def adam_step(state: AdamState, params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray]) -> None:
    """One update, in place on the arrays held by params.

    Keys absent from grads are treated as zero-gradient (parameters still
    decay their moments). Non-finite gradients are rejected outright.
    """
    for key, g in grads.items():
        if key not in params:
            raise KeyError(f"gradient for unknown parameter {key!r}")
        if g.shape != params[key].shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {params[key].shape} for {key!r}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {key!r}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    scale = state.lr * np.sqrt(1.0 - b2 ** t) / (1.0 - b1 ** t)
    for key in sorted(params):
        g = grads.get(key)
        m, v = state.m[key], state.v[key]
        if g is None:
            m *= b1
            v *= b2
        else:
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
        params[key] -= scale * m / (np.sqrt(v) + state.eps * np.sqrt(1.0 - b2 ** t))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if norm > max_norm > 0.0:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm
