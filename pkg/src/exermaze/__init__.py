"""Adaptive exercise-maze generation.

A Deep Q-Network builds mazes by iteratively connecting exercise rooms, a
stochastic player simulation estimates how hard each maze feels, and player
ratings steer generation toward a target difficulty.
"""

from .grid import ExerciseKind, RoomGrid, RoomSpec, default_grid, validate_grid
from .maze import (
    Action,
    Maze,
    StateEncoding,
    apply_action,
    crossings,
    encode_state,
    from_json,
    legal_actions,
    new_maze,
    render_ascii,
    to_json,
)
from .sim import (
    ATHLETE,
    AVERAGE,
    NOVICE,
    DifficultyEstimate,
    PlayerProfile,
    TraversalResult,
    estimate_difficulty,
    rate,
    traverse,
)
from .nn import AdamState, QNetwork, adam_step, forward, grad_check, loss_and_gradients
from .dqn import (
    DqnAgent,
    ReplayBuffer,
    TrainConfig,
    Transition,
    evaluate,
    generate_episode,
    load_checkpoint,
    pretrain,
    q_targets,
    save_checkpoint,
    select_action,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AdamState",
    "ATHLETE",
    "AVERAGE",
    "DifficultyEstimate",
    "DqnAgent",
    "ExerciseKind",
    "Maze",
    "NOVICE",
    "PlayerProfile",
    "QNetwork",
    "ReplayBuffer",
    "RoomGrid",
    "RoomSpec",
    "StateEncoding",
    "TrainConfig",
    "Transition",
    "TraversalResult",
    "adam_step",
    "apply_action",
    "crossings",
    "default_grid",
    "encode_state",
    "estimate_difficulty",
    "evaluate",
    "forward",
    "from_json",
    "generate_episode",
    "grad_check",
    "legal_actions",
    "load_checkpoint",
    "loss_and_gradients",
    "new_maze",
    "pretrain",
    "q_targets",
    "rate",
    "render_ascii",
    "save_checkpoint",
    "select_action",
    "to_json",
    "traverse",
    "validate_grid",
]
