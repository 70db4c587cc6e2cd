"""Urban target-tracking lab: occlusion-aware arena, from-scratch DQN, curriculum."""

__version__ = "0.1.0"

from .agent import (
    EpisodeMetrics,
    EvalResult,
    ExplorationParams,
    TrainConfig,
    curriculum_finetune,
    evaluate,
    exploration_probability,
    select_action,
    train,
)
from .environment import (
    Action,
    EnvConfig,
    WorldState,
    generate_environment,
    observe,
    reset,
    step,
)
from .geometry import (
    Cylinder,
    FovSpec,
    Point2,
    Point3,
    check_collision,
    check_occlusion,
    check_visibility,
    fov_diameter,
    segment_cylinder_intersect,
    target_visible,
)
from .qnet import (
    Checkpoint,
    QNetwork,
    ReplayBuffer,
    load_checkpoint,
    save_checkpoint,
)
from .reward import Branch, RewardOutcome, RewardParams, compute_reward, positive_reward

__all__ = [
    "Action",
    "Branch",
    "Checkpoint",
    "Cylinder",
    "EnvConfig",
    "EpisodeMetrics",
    "EvalResult",
    "ExplorationParams",
    "FovSpec",
    "Point2",
    "Point3",
    "QNetwork",
    "ReplayBuffer",
    "RewardOutcome",
    "RewardParams",
    "TrainConfig",
    "WorldState",
    "check_collision",
    "check_occlusion",
    "check_visibility",
    "compute_reward",
    "curriculum_finetune",
    "evaluate",
    "exploration_probability",
    "fov_diameter",
    "generate_environment",
    "load_checkpoint",
    "observe",
    "positive_reward",
    "reset",
    "save_checkpoint",
    "segment_cylinder_intersect",
    "select_action",
    "step",
    "target_visible",
    "train",
]
