"""State and configuration records for the bounded 2-D arena."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

ARENA_LO = 0.0
ARENA_HI = 1.0
AGENT = 0  # index 0 is the agent object by convention


@dataclass(frozen=True)
class ObjectState:
    """One circular object: dynamic (pos, vel) plus constant attributes."""

    pos: np.ndarray
    vel: np.ndarray
    mass: float
    radius: float
    type_id: int

    def validate(self) -> None:
        if not (np.all(self.pos >= ARENA_LO) and np.all(self.pos <= ARENA_HI)):
            raise ValueError(f"position {self.pos} outside arena")
        if not 0.0 < self.radius < 0.5:
            raise ValueError(f"radius must lie in (0, 0.5), got {self.radius}")
        if self.mass <= 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")


@dataclass
class WorldState:
    """All N objects, stored struct-of-arrays; index 0 is the agent."""

    pos: np.ndarray       # (N, 2)
    vel: np.ndarray       # (N, 2)
    mass: np.ndarray      # (N,)
    radius: np.ndarray    # (N,)
    type_id: np.ndarray   # (N,) int
    step: int = 0

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    def objects(self) -> list[ObjectState]:
        return [ObjectState(self.pos[i].copy(), self.vel[i].copy(),
                            float(self.mass[i]), float(self.radius[i]), int(self.type_id[i]))
                for i in range(self.n)]

    def copy(self) -> "WorldState":
        return WorldState(self.pos.copy(), self.vel.copy(), self.mass.copy(),
                          self.radius.copy(), self.type_id.copy(), self.step)

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("need at least 2 objects")
        for obj in self.objects():
            obj.validate()


def world_from_objects(objects: list[ObjectState], step: int = 0) -> WorldState:
    return WorldState(
        pos=np.array([o.pos for o in objects], dtype=float),
        vel=np.array([o.vel for o in objects], dtype=float),
        mass=np.array([o.mass for o in objects], dtype=float),
        radius=np.array([o.radius for o in objects], dtype=float),
        type_id=np.array([o.type_id for o in objects], dtype=int),
        step=step,
    )


@dataclass(frozen=True)
class EnvConfig:
    n_objects: int = 3
    dt: float = 0.05
    drag: float = 0.08
    action_bound: float = 1.2
    sigma_obs: float = 0.01
    sigma_dyn: float = 0.0
    # uniform mass keeps pairwise impulses predictable from the sender's
    # attributes alone (the interaction map omits the receiver's constants)
    mass_pool: tuple[float, ...] = (1.0,)
    radius_pool: tuple[float, ...] = (0.10, 0.12, 0.14)
    type_pool: tuple[int, ...] = (0, 1, 2)
    n_types: int = 3
    task: str = "REACH:1"
    seed: int = 0
    mixing: str = "orthogonal"   # or "identity" for diagnostics
    init_speed: float = 0.4      # magnitude scale of initial velocities
    spawn_margin: float = 0.25   # interior band for initial placement

    def __post_init__(self) -> None:
        if self.n_objects < 2:
            raise ValueError("n_objects must be >= 2")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.drag < 1.0:
            raise ValueError("drag must lie in [0, 1)")
        if self.sigma_obs < 0.0 or self.sigma_dyn < 0.0:
            raise ValueError("noise stds must be non-negative")
        if any(r <= 0.0 or r >= 0.5 for r in self.radius_pool):
            raise ValueError("radii must lie in (0, 0.5)")
        if any(m <= 0.0 for m in self.mass_pool):
            raise ValueError("masses must be positive")
        if any(t < 0 or t >= self.n_types for t in self.type_pool):
            raise ValueError("type ids must fit the one-hot width")
        if self.mixing not in ("orthogonal", "identity"):
            raise ValueError(f"unknown mixing tag {self.mixing!r}")

    @property
    def obs_dim(self) -> int:
        # pos(2) + vel(2) + mass + radius + one-hot type
        return 6 + self.n_types

    def with_seed(self, seed: int) -> "EnvConfig":
        return replace(self, seed=seed)
