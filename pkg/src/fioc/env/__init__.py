from .types import AGENT, ARENA_HI, ARENA_LO, EnvConfig, ObjectState, WorldState, world_from_objects
from .physics import (
    ballistic,
    collision_deltas,
    contact_graph,
    ground_truth_graph,
    interaction_impulse,
    kinetic_energy,
    momentum,
    pair_impulse,
    reflect,
    self_transition,
    step_world,
)
from .observe import build_mixing, observe, raw_features
from .tasks import TaskSpec, TaskState, initial_task_state, parse_task, task_reward, validate_task
from .dataset import (
    COLLECTION_POLICIES,
    EpisodeRecord,
    contact_fraction,
    generate_dataset,
    generate_episode,
    load_jsonl,
    policy_action,
    sample_initial_state,
    save_jsonl,
    verify_static_attributes,
    worker_count,
)
