"""Run configuration files: flat INI-style key-value sections, validated on load.

One file carries four sections -- [env], [reward], [exploration], [train] --
whose keys mirror the dataclass fields of the corresponding module. Missing
keys fall back to defaults; unknown keys are rejected so typos cannot
silently change a run. Values with a documented operating range are checked
against it and the error message cites the range.

Obstacles are written as semicolon-separated ``x,y,r,h`` quadruples::

    [env]
    n_obstacles = 2
    obstacles = 30.0,30.0,5.0,25.0; 65.0,45.0,7.5,40.0
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .agent import ExplorationParams, TrainConfig
from .environment import EnvConfig
from .geometry import Cylinder, Point2
from .reward import RewardParams


class ConfigError(ValueError):
    """Invalid, unknown, or out-of-range configuration input."""


@dataclass
class RunSettings:
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    exploration: ExplorationParams = field(default_factory=ExplorationParams)
    train: TrainConfig = field(default_factory=TrainConfig)


# Allowed operating ranges, inclusive. Keys without an entry are only
# type-checked (plus the structural rules in _validate).
_RANGES: dict[tuple[str, str], tuple[float, float]] = {
    ("env", "side"): (100.0, 200.0),
    ("env", "h_min"): (1.0, 10.0),
    ("env", "h_max"): (10.0, 60.0),
    ("env", "n_h"): (5, 20),
    ("env", "theta_fov_deg"): (30.0, 45.0),
    ("env", "t_max"): (1, 500),
    ("reward", "r_c"): (-2000.0, -1000.0),
    ("reward", "r_i"): (-100.0, -30.0),
    ("reward", "r_v_c"): (3000.0, 4500.0),
    ("reward", "h_v_c"): (1500.0, 5000.0),
    ("reward", "r_nv"): (-50.0, -1.0),
    ("reward", "beta"): (1.0, 10.0),
    ("exploration", "p_sat"): (0.1, 0.4),
    ("exploration", "alpha"): (0.1, 5.0),
    ("exploration", "p_ss"): (0.9, 0.95),
    ("exploration", "t_nv_threshold"): (3, 10),
    ("train", "gamma"): (0.0, 1.0),
}

_OBSTACLE_RADIUS_RANGE = (2.5, 10.0)
_OBSTACLE_HEIGHT_RANGE = (1.0, 50.0)

_FIELD_TYPES: dict[str, dict[str, type]] = {
    "env": {
        "side": float,
        "block_size": float,
        "n_obstacles": int,
        "obstacles": str,
        "h_min": float,
        "h_max": float,
        "n_h": int,
        "theta_fov_deg": float,
        "t_max": int,
        "uav_speed": float,
        "target_speed": float,
        "seed": int,
    },
    "reward": {
        "r_c": float,
        "r_i": float,
        "r_v_c": float,
        "h_v_c": float,
        "r_nv": float,
        "beta": float,
        "dist_epsilon": float,
        "growing_penalty": bool,
    },
    "exploration": {
        "p_sat": float,
        "alpha": float,
        "p_ss": float,
        "t_nv_threshold": int,
    },
    "train": {
        "episodes": int,
        "lr_initial": float,
        "lr_final": float,
        "lr_decay": float,
        "gamma": float,
        "batch_size": int,
        "target_sync": int,
        "warmup": int,
        "replay_capacity": int,
        "grad_clip_norm": float,
        "checkpoint_every": int,
        "terminate_on_collision": bool,
        "seed": int,
    },
}


def _parse_scalar(section: str, key: str, raw: str, kind: type):
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def _parse_obstacles(raw: str) -> list[Cylinder]:
    obstacles = []
    text = raw.strip()
    if not text:
        return obstacles
    for i, chunk in enumerate(text.split(";")):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 4:
            raise ConfigError(f"env.obstacles entry {i}: expected 'x,y,r,h', got {chunk!r}")
        try:
            x, y, r, h = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"env.obstacles entry {i}: non-numeric field in {chunk!r}") from None
        obstacles.append(Cylinder(Point2(x, y), r, h))
    return obstacles


def _check_range(section: str, key: str, value) -> None:
    bounds = _RANGES.get((section, key))
    if bounds is None:
        return
    lo, hi = bounds
    if not lo <= value <= hi:
        raise ConfigError(f"{section}.{key}={value} outside allowed range [{lo}, {hi}]")


def load_run_settings(path: str | Path) -> RunSettings:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file: {path}")

    settings = RunSettings()
    targets = {
        "env": settings.env,
        "reward": settings.reward,
        "exploration": settings.exploration,
        "train": settings.train,
    }
    declared_n: int | None = None
    for section in parser.sections():
        if section not in _FIELD_TYPES:
            raise ConfigError(f"unknown section [{section}]")
        known = _FIELD_TYPES[section]
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            if section == "env" and key == "obstacles":
                settings.env.obstacles = _parse_obstacles(raw)
                continue
            if section == "env" and key == "n_obstacles":
                declared_n = int(_parse_scalar(section, key, raw, int))
                continue
            value = _parse_scalar(section, key, raw, known[key])
            _check_range(section, key, value)
            if section == "train" and key == "grad_clip_norm" and value <= 0:
                settings.train.grad_clip_norm = None
                continue
            setattr(targets[section], key, value)
    _validate(settings, declared_n)
    return settings


def _validate(settings: RunSettings, declared_n: int | None) -> None:
    env = settings.env
    for key in ("side", "h_min", "h_max", "n_h", "theta_fov_deg", "t_max"):
        _check_range("env", key, getattr(env, key))
    for key in ("r_c", "r_i", "r_v_c", "h_v_c", "r_nv", "beta"):
        _check_range("reward", key, getattr(settings.reward, key))
    for key in ("p_sat", "alpha", "p_ss", "t_nv_threshold"):
        _check_range("exploration", key, getattr(settings.exploration, key))
    _check_range("train", "gamma", settings.train.gamma)

    if env.block_size <= 0:
        raise ConfigError(f"env.block_size={env.block_size} must be positive")
    blocks = env.side / env.block_size
    if abs(blocks - round(blocks)) > 1e-9 or round(blocks) < 1:
        raise ConfigError(
            f"env.block_size={env.block_size} must evenly divide side={env.side}"
        )
    if env.h_max <= env.h_min:
        raise ConfigError(f"env.h_max={env.h_max} must exceed h_min={env.h_min}")
    h_c = env.h_c
    if not 1.0 <= h_c <= 10.0:
        raise ConfigError(
            f"env height step (h_max-h_min)/n_h={h_c} outside allowed range [1.0, 10.0]"
        )
    if env.uav_speed <= 0:
        raise ConfigError(f"env.uav_speed={env.uav_speed} must be positive")
    if env.target_speed < 0:
        raise ConfigError(f"env.target_speed={env.target_speed} must be non-negative")
    if env.uav_speed < env.target_speed:
        raise ConfigError(
            f"env.uav_speed={env.uav_speed} must be at least target_speed={env.target_speed}"
        )

    n = env.n_obstacles
    if declared_n is not None and declared_n != n:
        raise ConfigError(f"env.n_obstacles={declared_n} but {n} obstacles listed")
    if n != 0 and not 2 <= n <= 7:
        raise ConfigError(f"env.n_obstacles={n} outside allowed range [2, 7] (0 allowed)")
    for i, obstacle in enumerate(env.obstacles):
        lo, hi = _OBSTACLE_RADIUS_RANGE
        if not lo <= obstacle.radius <= hi:
            raise ConfigError(
                f"env.obstacles[{i}].r={obstacle.radius} outside allowed range [{lo}, {hi}]"
            )
        lo, hi = _OBSTACLE_HEIGHT_RANGE
        if not lo <= obstacle.height <= hi:
            raise ConfigError(
                f"env.obstacles[{i}].h={obstacle.height} outside allowed range [{lo}, {hi}]"
            )
        if not (
            obstacle.radius <= obstacle.center.x <= env.side - obstacle.radius
            and obstacle.radius <= obstacle.center.y <= env.side - obstacle.radius
        ):
            raise ConfigError(f"env.obstacles[{i}] does not fit inside the arena")

    train = settings.train
    if train.episodes < 1:
        raise ConfigError(f"train.episodes={train.episodes} must be at least 1")
    if train.lr_initial < 0 or train.lr_final < 0:
        raise ConfigError("train learning rates must be non-negative")
    if train.lr_final > train.lr_initial:
        raise ConfigError(
            f"train.lr_final={train.lr_final} must not exceed lr_initial={train.lr_initial}"
        )
    if not 0 < train.lr_decay <= 1:
        raise ConfigError(f"train.lr_decay={train.lr_decay} must lie in (0, 1]")
    for key in ("batch_size", "target_sync", "warmup", "replay_capacity", "checkpoint_every"):
        if getattr(train, key) < 1:
            raise ConfigError(f"train.{key}={getattr(train, key)} must be at least 1")
    if train.batch_size > train.warmup:
        raise ConfigError(
            f"train.batch_size={train.batch_size} must not exceed warmup={train.warmup}"
        )
    if train.warmup > train.replay_capacity:
        raise ConfigError(
            f"train.warmup={train.warmup} must not exceed replay_capacity={train.replay_capacity}"
        )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_run_settings(path: str | Path, settings: RunSettings) -> None:
    """Write a configuration file that :func:`load_run_settings` reads back."""
    lines = ["[env]"]
    env = settings.env
    for key in ("side", "block_size", "h_min", "h_max", "n_h", "theta_fov_deg",
                "t_max", "uav_speed", "target_speed", "seed"):
        lines.append(f"{key} = {_format_value(getattr(env, key))}")
    lines.append(f"n_obstacles = {env.n_obstacles}")
    quads = "; ".join(
        f"{o.center.x!r},{o.center.y!r},{o.radius!r},{o.height!r}" for o in env.obstacles
    )
    lines.append(f"obstacles = {quads}")

    lines.append("")
    lines.append("[reward]")
    for key in ("r_c", "r_i", "r_v_c", "h_v_c", "r_nv", "beta", "dist_epsilon", "growing_penalty"):
        lines.append(f"{key} = {_format_value(getattr(settings.reward, key))}")

    lines.append("")
    lines.append("[exploration]")
    for key in ("p_sat", "alpha", "p_ss", "t_nv_threshold"):
        lines.append(f"{key} = {_format_value(getattr(settings.exploration, key))}")

    lines.append("")
    lines.append("[train]")
    train = settings.train
    for key in ("episodes", "lr_initial", "lr_final", "lr_decay", "gamma", "batch_size",
                "target_sync", "warmup", "replay_capacity", "checkpoint_every",
                "terminate_on_collision", "seed"):
        lines.append(f"{key} = {_format_value(getattr(train, key))}")
    clip = train.grad_clip_norm
    lines.append(f"grad_clip_norm = {_format_value(clip) if clip is not None else 0.0}")
    lines.append("")
    Path(path).write_text("\n".join(lines))


def settings_as_dict(settings: RunSettings) -> dict:
    """Nested plain-dict view of the settings, for manifests and logs."""
    env = settings.env
    return {
        "env": {
            "side": env.side,
            "block_size": env.block_size,
            "n_obstacles": env.n_obstacles,
            "obstacles": [
                {"x": o.center.x, "y": o.center.y, "r": o.radius, "h": o.height}
                for o in env.obstacles
            ],
            "h_min": env.h_min,
            "h_max": env.h_max,
            "n_h": env.n_h,
            "theta_fov_deg": env.theta_fov_deg,
            "t_max": env.t_max,
            "uav_speed": env.uav_speed,
            "target_speed": env.target_speed,
            "seed": env.seed,
        },
        "reward": {
            "r_c": settings.reward.r_c,
            "r_i": settings.reward.r_i,
            "r_v_c": settings.reward.r_v_c,
            "h_v_c": settings.reward.h_v_c,
            "r_nv": settings.reward.r_nv,
            "beta": settings.reward.beta,
            "dist_epsilon": settings.reward.dist_epsilon,
            "growing_penalty": settings.reward.growing_penalty,
        },
        "exploration": {
            "p_sat": settings.exploration.p_sat,
            "alpha": settings.exploration.alpha,
            "p_ss": settings.exploration.p_ss,
            "t_nv_threshold": settings.exploration.t_nv_threshold,
        },
        "train": {
            "episodes": settings.train.episodes,
            "lr_initial": settings.train.lr_initial,
            "lr_final": settings.train.lr_final,
            "lr_decay": settings.train.lr_decay,
            "gamma": settings.train.gamma,
            "batch_size": settings.train.batch_size,
            "target_sync": settings.train.target_sync,
            "warmup": settings.train.warmup,
            "replay_capacity": settings.train.replay_capacity,
            "grad_clip_norm": settings.train.grad_clip_norm,
            "checkpoint_every": settings.train.checkpoint_every,
            "terminate_on_collision": settings.train.terminate_on_collision,
            "seed": settings.train.seed,
        },
    }
