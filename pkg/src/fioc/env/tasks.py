"""Built-in task rewards over interaction chains.

REACH(j): reward is the negative agent-to-j center distance; success once
the agent touches j. CHAIN(j, k): negative agent-to-j distance until the
(agent, j) contact fires, then negative j-to-k distance, with a +1 bonus
the step each required edge is first achieved, in order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import AGENT, WorldState


@dataclass(frozen=True)
class TaskSpec:
    kind: str                     # "REACH" | "CHAIN"
    targets: tuple[int, ...]

    @property
    def required_edges(self) -> tuple[tuple[int, int], ...]:
        if self.kind == "REACH":
            return ((AGENT, self.targets[0]),)
        j, k = self.targets
        return ((AGENT, j), (j, k))


@dataclass(frozen=True)
class TaskState:
    achieved: tuple[bool, ...]

    @property
    def phase(self) -> int:
        for idx, done in enumerate(self.achieved):
            if not done:
                return idx
        return len(self.achieved)

    @property
    def success(self) -> bool:
        return all(self.achieved)


def parse_task(tag: str) -> TaskSpec:
    try:
        kind, _, rest = tag.partition(":")
        targets = tuple(int(x) for x in rest.split(",")) if rest else ()
    except ValueError as exc:
        raise ValueError(f"malformed task tag {tag!r}") from exc
    if kind == "REACH" and len(targets) == 1:
        spec = TaskSpec("REACH", targets)
    elif kind == "CHAIN" and len(targets) == 2:
        spec = TaskSpec("CHAIN", targets)
    else:
        raise ValueError(f"unknown task tag {tag!r}")
    if AGENT in spec.targets or len(set(spec.targets)) != len(spec.targets):
        raise ValueError(f"task targets must be distinct non-agent objects: {tag!r}")
    return spec


def initial_task_state(spec: TaskSpec) -> TaskState:
    return TaskState(achieved=(False,) * len(spec.required_edges))


def task_reward(state: WorldState, action: np.ndarray, graph: np.ndarray,
                spec: TaskSpec, tstate: TaskState):
    """Reward for (state, action) with the step's contact graph.

    Returns (reward, next task state). Edges must fire in order; each newly
    achieved required edge adds a +1 bonus on top of the phase distance term.
    """
    achieved = list(tstate.achieved)
    bonus = 0.0
    for idx, (a, b) in enumerate(spec.required_edges):
        if achieved[idx]:
            continue
        if idx > 0 and not achieved[idx - 1]:
            break  # must fire in order
        if graph[a, b]:
            achieved[idx] = True
            if spec.kind == "CHAIN":
                bonus += 1.0
    new_state = TaskState(achieved=tuple(achieved))
    phase = min(new_state.phase, len(spec.required_edges) - 1)
    a, b = spec.required_edges[phase]
    distance = float(np.linalg.norm(state.pos[a] - state.pos[b]))
    return -distance + bonus, new_state


def validate_task(spec: TaskSpec, n_objects: int) -> None:
    if any(t >= n_objects for t in spec.targets):
        raise ValueError(f"task references object beyond n_objects={n_objects}")
