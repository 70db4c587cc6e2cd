"""Seeded urban arena: square road grid, random-walking ground target, discrete UAV.

The arena is a square of side ``side`` with roads every ``block_size`` units
in both directions; junctions sit at the crossings. Cylindrical obstacles are
placed strictly inside the blocks, never touching a road, so the target
(which stays on roads) can never be inside one. The UAV moves with six
discrete actions: four horizontal translations and one height level up or
down. Altitude is always ``h_min + level * h_c`` for an integer level in
``[0, n_h]``.

Every step advances the UAV, then the target, then scores the new geometry
with the piecewise reward. The target's walk is independent of the UAV, so
two policies evaluated with the same per-episode seed face identical target
trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .geometry import (
    Cylinder,
    FovSpec,
    Point2,
    Point3,
    check_collision,
    target_visible,
)
from .reward import Branch, RewardParams, compute_reward

OBS_DIM = 7
# Steps-without-sight saturates here in the observation encoding.
T_NV_CAP = 50

# Obstacles keep this much clearance from the surrounding roads and from
# each other, so "strictly inside a block" survives float round-off.
_PLACEMENT_MARGIN = 0.5
_PLACEMENT_TRIES = 500


class Action(IntEnum):
    NORTH = 0
    SOUTH = 1
    WEST = 2
    EAST = 3
    UP = 4
    DOWN = 5


class Heading(IntEnum):
    NORTH = 0
    SOUTH = 1
    WEST = 2
    EAST = 3


_HEADING_DX = {Heading.NORTH: 0.0, Heading.SOUTH: 0.0, Heading.WEST: -1.0, Heading.EAST: 1.0}
_HEADING_DY = {Heading.NORTH: 1.0, Heading.SOUTH: -1.0, Heading.WEST: 0.0, Heading.EAST: 0.0}


@dataclass
class EnvConfig:
    """Full arena description; ``obstacles`` is explicit, not re-generated."""

    side: float = 100.0
    block_size: float = 20.0
    obstacles: list[Cylinder] = field(default_factory=list)
    h_min: float = 5.0
    h_max: float = 30.0
    n_h: int = 5
    theta_fov_deg: float = 45.0
    t_max: int = 500
    uav_speed: float = 5.0
    target_speed: float = 2.5
    # Seed used when the obstacle layout was generated; kept so a saved
    # config records how to regenerate it.
    seed: int = 0

    @property
    def h_c(self) -> float:
        return (self.h_max - self.h_min) / self.n_h

    @property
    def fov(self) -> FovSpec:
        return FovSpec(self.theta_fov_deg)

    @property
    def n_obstacles(self) -> int:
        return len(self.obstacles)

    def road_network(self) -> "RoadNetwork":
        return RoadNetwork(self.side, self.block_size)

    def altitude(self, level: int) -> float:
        return self.h_min + level * self.h_c


@dataclass(frozen=True)
class RoadNetwork:
    """Axis-aligned road grid: rails at every multiple of ``block_size``."""

    side: float
    block_size: float

    @property
    def rails(self) -> list[float]:
        count = round(self.side / self.block_size)
        return [i * self.block_size for i in range(count + 1)]

    def junctions(self) -> list[tuple[float, float]]:
        rails = self.rails
        return [(x, y) for x in rails for y in rails]

    def incident_headings(self, x: float, y: float) -> list[Heading]:
        """Directions leading away from a junction along some road."""
        out = []
        if y < self.side:
            out.append(Heading.NORTH)
        if y > 0.0:
            out.append(Heading.SOUTH)
        if x > 0.0:
            out.append(Heading.WEST)
        if x < self.side:
            out.append(Heading.EAST)
        return out

    def on_network(self, x: float, y: float, tol: float = 1e-9) -> bool:
        if not (0.0 <= x <= self.side and 0.0 <= y <= self.side):
            return False
        on_vertical = min(abs(x - r) for r in self.rails) <= tol
        on_horizontal = min(abs(y - r) for r in self.rails) <= tol
        return on_vertical or on_horizontal


@dataclass
class WorldState:
    uav_x: float
    uav_y: float
    level: int
    uav_z: float
    target_x: float
    target_y: float
    heading: Heading
    t: int
    t_nv: int
    last_seen_x: float
    last_seen_y: float
    visible: bool
    done: bool = False

    def uav(self) -> Point3:
        return Point3(self.uav_x, self.uav_y, self.uav_z)

    def target(self) -> Point2:
        return Point2(self.target_x, self.target_y)


class StepInfo(NamedTuple):
    visible: bool
    occluded: bool
    collided: bool
    distance: float
    distance_3d: float
    occluded_by: int | None
    branch: Branch


class StepOutcome(NamedTuple):
    state: WorldState
    reward: float
    done: bool
    info: StepInfo


class UavPose(NamedTuple):
    x: float
    y: float
    level: int
    z: float


def _as_generator(seed_or_rng: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def generate_environment(n_obstacles: int, seed: int, **overrides) -> EnvConfig:
    """Build a seeded arena with ``n_obstacles`` non-overlapping cylinders.

    Each cylinder is dropped strictly inside a randomly chosen block with a
    fixed clearance from the surrounding roads; radii are capped so a disc
    always fits (for the default 20-unit blocks the cap is 9 instead of the
    nominal 10). Same arguments, same layout. ``n_obstacles == 0`` is allowed
    as a degenerate test arena.

    Raises:
        ValueError: when the obstacle count is outside {0} or [2, 7].
        RuntimeError: when placement keeps colliding after bounded retries.
    """
    if n_obstacles != 0 and not 2 <= n_obstacles <= 7:
        raise ValueError(f"n_obstacles must be 0 or within [2, 7], got {n_obstacles}")
    config = EnvConfig(seed=seed, **overrides)
    rng = np.random.default_rng(seed)
    blocks = round(config.side / config.block_size)
    r_cap = min(10.0, config.block_size / 2.0 - 2.0 * _PLACEMENT_MARGIN)
    if r_cap < 2.5:
        raise ValueError(f"block_size {config.block_size} too small to hold any obstacle")

    placed: list[Cylinder] = []
    for _ in range(n_obstacles):
        for attempt in range(_PLACEMENT_TRIES):
            bi = int(rng.integers(blocks))
            bj = int(rng.integers(blocks))
            radius = float(rng.uniform(2.5, r_cap))
            lo = radius + _PLACEMENT_MARGIN
            hi = config.block_size - radius - _PLACEMENT_MARGIN
            cx = bi * config.block_size + float(rng.uniform(lo, hi))
            cy = bj * config.block_size + float(rng.uniform(lo, hi))
            height = float(rng.uniform(1.0, 50.0))
            ok = all(
                math.hypot(cx - other.center.x, cy - other.center.y)
                > radius + other.radius + _PLACEMENT_MARGIN
                for other in placed
            )
            if ok:
                placed.append(Cylinder(Point2(cx, cy), radius, height))
                break
        else:
            raise RuntimeError(f"could not place obstacle after {_PLACEMENT_TRIES} tries")
    config.obstacles = placed
    return config


def reset(config: EnvConfig, seed_or_rng: int | np.random.Generator) -> WorldState:
    """Start an episode: UAV on a random junction at level 0, target on a
    random junction with a random outgoing heading.

    Junctions lie on roads and obstacles never touch roads, so the UAV spawn
    is collision-free; a bounded retry loop guards the degenerate layouts
    anyway.
    """
    rng = _as_generator(seed_or_rng)
    net = config.road_network()
    junctions = net.junctions()

    uav_x = uav_y = 0.0
    for _ in range(200):
        jx, jy = junctions[int(rng.integers(len(junctions)))]
        probe = Point3(jx, jy, config.altitude(0))
        if not any(check_collision(probe, o) for o in config.obstacles):
            uav_x, uav_y = jx, jy
            break
    else:
        raise RuntimeError("no collision-free spawn junction found")

    target_x, target_y = junctions[int(rng.integers(len(junctions)))]
    headings = net.incident_headings(target_x, target_y)
    heading = headings[int(rng.integers(len(headings)))]

    uav = Point3(uav_x, uav_y, config.altitude(0))
    report = target_visible(uav, Point2(target_x, target_y), config.obstacles, config.fov)
    return WorldState(
        uav_x=uav_x,
        uav_y=uav_y,
        level=0,
        uav_z=config.altitude(0),
        target_x=target_x,
        target_y=target_y,
        heading=heading,
        t=0,
        t_nv=0,
        last_seen_x=target_x,
        last_seen_y=target_y,
        visible=report.visible,
        done=False,
    )


def apply_action(state: WorldState, action: Action, config: EnvConfig) -> UavPose:
    """UAV pose after one action; horizontal moves clamp to the arena square,
    vertical moves clamp to levels [0, n_h]."""
    x, y, level = state.uav_x, state.uav_y, state.level
    if action == Action.NORTH:
        y = min(y + config.uav_speed, config.side)
    elif action == Action.SOUTH:
        y = max(y - config.uav_speed, 0.0)
    elif action == Action.WEST:
        x = max(x - config.uav_speed, 0.0)
    elif action == Action.EAST:
        x = min(x + config.uav_speed, config.side)
    elif action == Action.UP:
        level = min(level + 1, config.n_h)
    elif action == Action.DOWN:
        level = max(level - 1, 0)
    else:
        raise ValueError(f"unknown action: {action!r}")
    return UavPose(x, y, level, config.altitude(level))


def _distance_to_next_junction(pos: float, block: float, forward: bool) -> tuple[float, float]:
    """Along-rail distance to the junction ahead, and that junction's coordinate."""
    if forward:
        nxt = (math.floor(pos / block) + 1) * block
        return nxt - pos, nxt
    prev = (math.ceil(pos / block) - 1) * block
    return pos - prev, prev


def target_step(
    state: WorldState, config: EnvConfig, rng: np.random.Generator
) -> tuple[float, float, Heading]:
    """Advance the target one step along its heading.

    A move that would pass a junction stops exactly on it and draws a fresh
    heading uniformly over the junction's incident directions (reversal
    included); the new heading takes effect on the next step. A zero target
    speed leaves the target in place.
    """
    x, y, heading = state.target_x, state.target_y, state.heading
    speed = config.target_speed
    if speed == 0.0:
        return x, y, heading

    net = config.road_network()
    block = config.block_size
    if heading in (Heading.NORTH, Heading.SOUTH):
        dist, junction = _distance_to_next_junction(y, block, heading == Heading.NORTH)
        if speed < dist:
            y += speed * _HEADING_DY[heading]
        else:
            y = junction
    else:
        dist, junction = _distance_to_next_junction(x, block, heading == Heading.EAST)
        if speed < dist:
            x += speed * _HEADING_DX[heading]
        else:
            x = junction
    if speed >= dist:
        options = net.incident_headings(x, y)
        heading = options[int(rng.integers(len(options)))]
    return x, y, heading


def step(
    state: WorldState,
    action: Action,
    config: EnvConfig,
    reward_params: RewardParams,
    rng: np.random.Generator,
    *,
    terminate_on_collision: bool = True,
) -> StepOutcome:
    """One full transition: move UAV, move target, score the new geometry.

    Termination: collision (unless configured otherwise) or reaching the
    step cap. Raises on an already-finished state.
    """
    if state.done:
        raise ValueError("cannot step a finished episode")

    pose = apply_action(state, action, config)
    target_x, target_y, heading = target_step(state, config, rng)

    uav = Point3(pose.x, pose.y, pose.z)
    target = Point2(target_x, target_y)
    outcome = compute_reward(uav, target, config.obstacles, config.fov, state.t_nv, reward_params)
    report = target_visible(uav, target, config.obstacles, config.fov)

    collided = outcome.branch is Branch.COLLISION
    visible = outcome.branch is Branch.VISIBLE
    t_next = state.t + 1
    done = (collided and terminate_on_collision) or t_next >= config.t_max

    distance = math.hypot(pose.x - target_x, pose.y - target_y)
    distance_3d = math.hypot(distance, pose.z)

    new_state = replace(
        state,
        uav_x=pose.x,
        uav_y=pose.y,
        level=pose.level,
        uav_z=pose.z,
        target_x=target_x,
        target_y=target_y,
        heading=heading,
        t=t_next,
        t_nv=outcome.t_nv_next,
        last_seen_x=target_x if visible else state.last_seen_x,
        last_seen_y=target_y if visible else state.last_seen_y,
        visible=visible,
        done=done,
    )
    info = StepInfo(
        visible=visible,
        occluded=report.occluded_by is not None,
        collided=collided,
        distance=distance,
        distance_3d=distance_3d,
        occluded_by=report.occluded_by,
        branch=outcome.branch,
    )
    return StepOutcome(state=new_state, reward=outcome.reward, done=done, info=info)


def observe(state: WorldState, config: EnvConfig) -> np.ndarray:
    """Encode the state for the Q-network; every component lies in [-1, 1].

    The target offset uses the last position at which the target was
    actually seen; it freezes while the target is out of sight. The
    steps-without-sight counter saturates at ``T_NV_CAP``.
    """
    return np.array(
        [
            state.uav_x / config.side,
            state.uav_y / config.side,
            state.level / config.n_h,
            (state.last_seen_x - state.uav_x) / config.side,
            (state.last_seen_y - state.uav_y) / config.side,
            min(state.t_nv, T_NV_CAP) / T_NV_CAP,
            1.0 if state.visible else 0.0,
        ]
    )
