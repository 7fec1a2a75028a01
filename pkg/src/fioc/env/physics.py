"""Ballistic self-dynamics and elastic pairwise collisions.

Kernels are batched over a leading axis so planners can roll many candidate
futures at once; the per-object contract functions wrap the batch of one.
Impulses are computed from pre-step velocities and applied only to
approaching pairs, so a still-overlapping pair does not re-collide while
separating.
"""
from __future__ import annotations

import numpy as np

from .types import AGENT, ARENA_HI, ARENA_LO, EnvConfig, ObjectState, WorldState


def reflect(pos: np.ndarray, vel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mirror positions into the arena, negating the velocity per bounce."""
    pos = pos.copy()
    vel = vel.copy()
    for _ in range(16):  # enough bounces for any desk-scale velocity
        below = pos < ARENA_LO
        above = pos > ARENA_HI
        if not (below.any() or above.any()):
            break
        pos = np.where(below, 2.0 * ARENA_LO - pos, pos)
        pos = np.where(above, 2.0 * ARENA_HI - pos, pos)
        vel = np.where(below | above, -vel, vel)
    np.clip(pos, ARENA_LO, ARENA_HI, out=pos)
    return pos, vel


def ballistic(pos, vel, mass, action, dt, drag, noise=None):
    """Self-transition: vel <- (1-drag) vel + action dt / mass + noise,
    pos <- pos + vel dt, with elastic wall reflection. Batched (..., N, 2)."""
    vel = (1.0 - drag) * vel + action * dt / mass[..., None]
    if noise is not None:
        vel = vel + noise
    pos = pos + vel * dt
    return reflect(pos, vel)


def pair_impulse(pos_i, vel_i, m_i, pos_j, vel_j, m_j):
    """Elastic-collision velocity changes for one overlapping pair.

    Returns (dv_i, dv_j); zero when the pair is separating or concentric.
    Momentum and kinetic energy are conserved in exact arithmetic.
    """
    delta = pos_j - pos_i
    dist = float(np.linalg.norm(delta))
    if dist <= 0.0:
        return np.zeros(2), np.zeros(2)
    normal = delta / dist
    closing = float((vel_i - vel_j) @ normal)
    if closing <= 0.0:
        return np.zeros(2), np.zeros(2)
    scale = 2.0 * closing / (m_i + m_j)
    return -m_j * scale * normal, m_i * scale * normal


def interaction_impulse(obj_i: ObjectState, obj_j: ObjectState):
    """Contract wrapper: rejects non-overlapping pairs."""
    gap = float(np.linalg.norm(obj_j.pos - obj_i.pos))
    if gap > obj_i.radius + obj_j.radius:
        raise ValueError(f"objects are not in contact (distance {gap:.4f})")
    return pair_impulse(obj_i.pos, obj_i.vel, obj_i.mass, obj_j.pos, obj_j.vel, obj_j.mass)


def contact_graph(pos: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Binary adjacency: (i, j) = 1 iff center distance <= radius sum, i != j.

    Batched over leading axes; returns uint8 of shape (..., N, N).
    """
    delta = pos[..., :, None, :] - pos[..., None, :, :]
    dist = np.sqrt(np.sum(delta * delta, axis=-1))
    reach = radius[..., :, None] + radius[..., None, :]
    graph = (dist <= reach).astype(np.uint8)
    n = pos.shape[-2]
    idx = np.arange(n)
    graph[..., idx, idx] = 0
    return graph


def collision_deltas(pos, vel, mass, graph):
    """Sum of elastic impulses per object from all active edges.

    Batched: pos/vel (..., N, 2), mass (..., N), graph (..., N, N).
    Impulses use pre-step state only and are gated on approach.
    """
    delta = pos[..., None, :, :] - pos[..., :, None, :]          # i -> j
    dist = np.sqrt(np.sum(delta * delta, axis=-1))
    safe = np.where(dist > 0.0, dist, 1.0)
    normal = delta / safe[..., None]
    rel = vel[..., :, None, :] - vel[..., None, :, :]            # v_i - v_j
    closing = np.sum(rel * normal, axis=-1)
    active = (graph > 0) & (dist > 0.0) & (closing > 0.0)
    m_i = mass[..., :, None]
    m_j = mass[..., None, :]
    scale = np.where(active, 2.0 * closing / (m_i + m_j), 0.0)
    dv = -(m_j * scale)[..., None] * normal
    return dv.sum(axis=-2)


def step_world(state: WorldState, action: np.ndarray, config: EnvConfig,
               rng: np.random.Generator | None = None):
    """Advance one step; returns (next_state, pre-step graph, clipped flag).

    The interaction graph is computed on the pre-step state; impulses for
    all its edges are summed, then every object takes its self-transition.
    Out-of-bound actions are clipped and flagged.
    """
    action = np.asarray(action, dtype=float)
    clipped = bool(np.any(np.abs(action) > config.action_bound))
    action = np.clip(action, -config.action_bound, config.action_bound)
    graph = contact_graph(state.pos, state.radius)
    vel = state.vel + collision_deltas(state.pos, state.vel, state.mass, graph)
    full_action = np.zeros_like(state.pos)
    full_action[AGENT] = action
    noise = None
    if config.sigma_dyn > 0.0 and rng is not None:
        noise = rng.normal(0.0, config.sigma_dyn, size=state.vel.shape)
    pos, vel = ballistic(state.pos, vel, state.mass, full_action,
                         config.dt, config.drag, noise)
    nxt = WorldState(pos, vel, state.mass.copy(), state.radius.copy(),
                     state.type_id.copy(), state.step + 1)
    return nxt, graph, clipped


def self_transition(obj: ObjectState, action, config: EnvConfig, noise=None):
    """Single-object contract: returns the updated (pos, vel)."""
    act = np.zeros(2) if action is None else np.asarray(action, dtype=float)
    n = np.zeros(2) if noise is None else np.asarray(noise, dtype=float)
    pos, vel = ballistic(obj.pos[None, :], obj.vel[None, :], np.array([obj.mass]),
                         act[None, :], config.dt, config.drag, n[None, :])
    return pos[0], vel[0]


def ground_truth_graph(state: WorldState) -> np.ndarray:
    return contact_graph(state.pos, state.radius)


def momentum(state: WorldState) -> np.ndarray:
    return (state.mass[:, None] * state.vel).sum(axis=0)


def kinetic_energy(state: WorldState) -> float:
    return float(0.5 * np.sum(state.mass * np.sum(state.vel**2, axis=1)))
