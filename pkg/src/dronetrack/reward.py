"""Piecewise step reward: collision, blocked sight line, visible, or lost target.

Branch precedence is fixed: collision beats occlusion beats visibility. A
visible step pays a positive amount that grows as the UAV closes horizontal
distance and flies lower; every other branch pays a penalty and advances the
steps-without-sight counter. The lost-target penalty decays exponentially in
that counter by default; an alternative mode grows it instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import (
    Cylinder,
    FovSpec,
    Point2,
    Point3,
    check_collision,
    target_visible,
)


class Branch(Enum):
    """Which arm of the piecewise reward fired."""

    COLLISION = "collision"
    INTERSECTION = "intersection"
    VISIBLE = "visible"
    NOT_VISIBLE = "not_visible"


@dataclass
class RewardParams:
    """Reward constants. Signs are stored as used: penalties are negative."""

    r_c: float = -1500.0
    r_i: float = -50.0
    r_v_c: float = 3000.0
    h_v_c: float = 1500.0
    r_nv: float = -10.0
    beta: float = 2.0
    # Floor on the distance denominator so the visible reward stays bounded.
    dist_epsilon: float = 0.5
    # When set, the lost-target penalty grows toward r_nv instead of decaying.
    growing_penalty: bool = False


@dataclass(frozen=True)
class RewardOutcome:
    reward: float
    t_nv_next: int
    branch: Branch


def positive_reward(uav: Point3, target: Point2, params: RewardParams) -> float:
    """Reward for a step with the target in clear view.

    Sum of a distance term ``r_v_c / max(ground_distance, dist_epsilon)`` and
    an altitude term ``h_v_c / z``. Requires positive altitude.
    """
    if uav.z <= 0:
        raise ValueError(f"altitude must be positive, got {uav.z}")
    dist = math.hypot(uav.x - target.x, uav.y - target.y)
    return params.r_v_c / max(dist, params.dist_epsilon) + params.h_v_c / uav.z


def compute_reward(
    uav: Point3,
    target: Point2,
    obstacles: list[Cylinder],
    fov: FovSpec,
    t_nv: int,
    params: RewardParams,
) -> RewardOutcome:
    """Evaluate the piecewise reward for the current geometry.

    ``t_nv`` is the steps-without-sight counter before this step. Every
    branch except the visible one increments it, and the lost-target penalty
    uses the incremented value in its exponent, so the first invisible step
    already decays by one beta.
    """
    if any(check_collision(uav, obstacle) for obstacle in obstacles):
        return RewardOutcome(params.r_c, t_nv + 1, Branch.COLLISION)

    report = target_visible(uav, target, obstacles, fov)
    if report.occluded_by is not None:
        return RewardOutcome(params.r_i, t_nv + 1, Branch.INTERSECTION)

    if report.visible:
        return RewardOutcome(positive_reward(uav, target, params), 0, Branch.VISIBLE)

    t_nv_next = t_nv + 1
    decay = math.exp(-params.beta * t_nv_next)
    if params.growing_penalty:
        reward = params.r_nv * (1.0 - decay)
    else:
        reward = params.r_nv * decay
    return RewardOutcome(reward, t_nv_next, Branch.NOT_VISIBLE)
