"""Episode generation, collection policies, and JSON-Lines serialization.

Each episode owns its own rng stream (dataset seed + episode index), so
generation is order-independent and safe to fan out across workers.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .. import rng as rngmod
from .observe import build_mixing, observe
from .physics import step_world
from .tasks import initial_task_state, parse_task, task_reward, validate_task
from .types import AGENT, EnvConfig, WorldState

COLLECTION_POLICIES = ("random", "contact-seeking")


@dataclass
class EpisodeRecord:
    seed: int
    config: EnvConfig
    obs: np.ndarray       # (T, N, obs_dim)
    actions: np.ndarray   # (T, 2)
    rewards: np.ndarray   # (T,)
    graphs: np.ndarray    # (T, N, N) uint8
    gt_pos: np.ndarray    # (T, N, 2)
    gt_vel: np.ndarray    # (T, N, 2)
    mass: np.ndarray      # (T, N)
    radius: np.ndarray    # (T, N)
    type_id: np.ndarray   # (T, N)

    @property
    def horizon(self) -> int:
        return self.obs.shape[0]


def sample_initial_state(config: EnvConfig, rng: np.random.Generator) -> WorldState:
    """Non-overlapping random placement with pool-drawn attributes.

    Objects start in the interior band so episodes are dominated by
    object-object interaction rather than wall play.
    """
    n = config.n_objects
    radius = np.array([rng.choice(config.radius_pool) for _ in range(n)])
    mass = np.array([rng.choice(config.mass_pool) for _ in range(n)])
    type_id = np.array([rng.choice(config.type_pool) for _ in range(n)], dtype=int)
    pos = np.zeros((n, 2))
    for i in range(n):
        lo = max(float(radius[i]), config.spawn_margin)
        for _ in range(256):
            cand = rng.uniform(lo, 1.0 - lo, size=2)
            if all(np.linalg.norm(cand - pos[j]) > radius[i] + radius[j] + 0.01
                   for j in range(i)):
                pos[i] = cand
                break
        else:
            pos[i] = rng.uniform(lo, 1.0 - lo, size=2)
    vel = rng.normal(0.0, config.init_speed, size=(n, 2))
    return WorldState(pos, vel, mass, radius, type_id)


def policy_action(policy: str, state: WorldState, config: EnvConfig,
                  rng: np.random.Generator) -> np.ndarray:
    if policy == "random":
        return rng.uniform(-config.action_bound, config.action_bound, size=2)
    if policy == "contact-seeking":
        # steer toward the nearest other object, with exploration jitter
        gaps = np.linalg.norm(state.pos - state.pos[AGENT], axis=1)
        gaps[AGENT] = np.inf
        target = int(np.argmin(gaps))
        direction = state.pos[target] - state.pos[AGENT]
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 1e-9 else np.zeros(2)
        jitter = rng.normal(0.0, 0.3, size=2)
        act = config.action_bound * (0.85 * direction + 0.15 * jitter)
        return np.clip(act, -config.action_bound, config.action_bound)
    raise ValueError(f"unknown collection policy {policy!r}")


def generate_episode(config: EnvConfig, policy: str, horizon: int,
                     episode_seed: int, mixing: np.ndarray) -> EpisodeRecord:
    rng = rngmod.stream(episode_seed, "episode")
    state = sample_initial_state(config, rng)
    spec = parse_task(config.task)
    validate_task(spec, config.n_objects)
    tstate = initial_task_state(spec)

    obs, actions, rewards, graphs = [], [], [], []
    gt_pos, gt_vel, mass, radius, type_id = [], [], [], [], []
    for _ in range(horizon):
        obs.append(observe(state, config, mixing, rng))
        action = policy_action(policy, state, config, rng)
        gt_pos.append(state.pos.copy())
        gt_vel.append(state.vel.copy())
        mass.append(state.mass.copy())
        radius.append(state.radius.copy())
        type_id.append(state.type_id.copy())
        nxt, graph, _ = step_world(state, action, config, rng)
        reward, tstate = task_reward(state, action, graph, spec, tstate)
        actions.append(action)
        rewards.append(reward)
        graphs.append(graph)
        state = nxt
    return EpisodeRecord(
        seed=episode_seed, config=config,
        obs=np.array(obs), actions=np.array(actions), rewards=np.array(rewards),
        graphs=np.array(graphs, dtype=np.uint8),
        gt_pos=np.array(gt_pos), gt_vel=np.array(gt_vel),
        mass=np.array(mass), radius=np.array(radius),
        type_id=np.array(type_id, dtype=int),
    )


def _episode_job(args):
    config_dict, policy, horizon, episode_seed, mixing = args
    config = EnvConfig(**config_dict)
    return generate_episode(config, policy, horizon, episode_seed, mixing)


def generate_dataset(config: EnvConfig, policy: str, episodes: int, horizon: int,
                     seed: int, threads: int | None = None) -> list[EpisodeRecord]:
    if episodes < 1 or horizon < 1:
        raise ValueError("episodes and horizon must be >= 1")
    if policy not in COLLECTION_POLICIES:
        raise ValueError(f"unknown collection policy {policy!r}")
    mixing = build_mixing(seed, config.obs_dim, config.mixing)
    jobs = [(asdict(config), policy, horizon, seed + i, mixing) for i in range(episodes)]
    threads = threads if threads is not None else worker_count()
    if threads > 1:
        import multiprocessing as mp

        with mp.Pool(threads) as pool:
            return pool.map(_episode_job, jobs)
    return [_episode_job(j) for j in jobs]


def worker_count() -> int:
    raw = os.environ.get("FIOC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def episode_to_json(rec: EpisodeRecord) -> dict:
    steps = []
    for t in range(rec.horizon):
        steps.append({
            "obs": rec.obs[t].tolist(),
            "action": rec.actions[t].tolist(),
            "reward": float(rec.rewards[t]),
            "graph": rec.graphs[t].astype(int).tolist(),
            "gt_state": [
                {"pos": rec.gt_pos[t, i].tolist(), "vel": rec.gt_vel[t, i].tolist(),
                 "mass": float(rec.mass[t, i]), "radius": float(rec.radius[t, i]),
                 "type": int(rec.type_id[t, i])}
                for i in range(rec.obs.shape[1])
            ],
        })
    cfg = asdict(rec.config)
    cfg["mass_pool"] = list(cfg["mass_pool"])
    cfg["radius_pool"] = list(cfg["radius_pool"])
    cfg["type_pool"] = list(cfg["type_pool"])
    return {"seed": rec.seed, "config": cfg, "steps": steps}


def episode_from_json(payload: dict) -> EpisodeRecord:
    cfg = dict(payload["config"])
    cfg["mass_pool"] = tuple(cfg["mass_pool"])
    cfg["radius_pool"] = tuple(cfg["radius_pool"])
    cfg["type_pool"] = tuple(cfg["type_pool"])
    config = EnvConfig(**cfg)
    steps = payload["steps"]
    return EpisodeRecord(
        seed=int(payload["seed"]), config=config,
        obs=np.array([s["obs"] for s in steps], dtype=float),
        actions=np.array([s["action"] for s in steps], dtype=float),
        rewards=np.array([s["reward"] for s in steps], dtype=float),
        graphs=np.array([s["graph"] for s in steps], dtype=np.uint8),
        gt_pos=np.array([[o["pos"] for o in s["gt_state"]] for s in steps], dtype=float),
        gt_vel=np.array([[o["vel"] for o in s["gt_state"]] for s in steps], dtype=float),
        mass=np.array([[o["mass"] for o in s["gt_state"]] for s in steps], dtype=float),
        radius=np.array([[o["radius"] for o in s["gt_state"]] for s in steps], dtype=float),
        type_id=np.array([[o["type"] for o in s["gt_state"]] for s in steps], dtype=int),
    )


def save_jsonl(records: list[EpisodeRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(episode_to_json(rec), separators=(",", ":")))
            fh.write("\n")


def load_jsonl(path) -> list[EpisodeRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(episode_from_json(json.loads(line)))
    return records


def contact_fraction(records: list[EpisodeRecord]) -> float:
    """Fraction of recorded steps with at least one active edge."""
    steps = sum(rec.horizon for rec in records)
    touching = sum(int((rec.graphs.reshape(rec.horizon, -1).sum(axis=1) > 0).sum())
                   for rec in records)
    return touching / steps if steps else 0.0


def verify_static_attributes(rec: EpisodeRecord) -> bool:
    """Statics must be bitwise constant over an episode."""
    return (np.all(rec.mass == rec.mass[0])
            and np.all(rec.radius == rec.radius[0])
            and np.all(rec.type_id == rec.type_id[0]))


__all__ = [
    "COLLECTION_POLICIES", "EpisodeRecord", "contact_fraction", "generate_dataset",
    "generate_episode", "load_jsonl", "policy_action", "sample_initial_state",
    "save_jsonl", "episode_to_json", "episode_from_json", "verify_static_attributes",
    "worker_count",
]
