"""Command-line entry point: train, eval, curriculum, render.

Every run directory receives a ``manifest.json`` recording the resolved
configuration, seed, episode budget and artifact paths, which is enough to
reproduce the run bit for bit. Exit codes: 0 on success, 1 on usage or
configuration errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .agent import (
    curriculum_finetune,
    evaluate,
    train,
)
from .config_io import ConfigError, load_run_settings, settings_as_dict
from .environment import EnvConfig
from .qnet import load_checkpoint, save_checkpoint
from .render_svg import render_sideview, render_topdown

OUTPUT_ROOT_VAR = "DRONETRACK_RUNS"

_TRAJECTORY_KEYS = {
    "t",
    "uav_x",
    "uav_y",
    "uav_z",
    "target_x",
    "target_y",
    "action",
    "reward",
    "branch",
    "visible",
    "occluded_by",
    "done",
}


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dronetrack", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dronetrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy from scratch")
    p_train.add_argument("config", type=Path, help="run configuration file")
    p_train.add_argument("--out", type=Path, default=None, help="output directory")
    p_train.add_argument("--seed", type=int, default=None, help="override train.seed")
    p_train.add_argument("--episodes", type=int, default=None, help="override train.episodes")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    p_eval.add_argument("checkpoint", type=Path)
    p_eval.add_argument("config", type=Path)
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument(
        "--trajectories", type=Path, default=None, help="directory for per-episode logs"
    )

    p_cur = sub.add_parser("curriculum", help="fine-tune a checkpoint on a new arena")
    p_cur.add_argument("checkpoint", type=Path)
    p_cur.add_argument("config", type=Path, help="configuration of the new arena")
    p_cur.add_argument("--out", type=Path, default=None)
    p_cur.add_argument("--seed", type=int, default=None, help="override train.seed")
    p_cur.add_argument("--episodes", type=int, default=None, help="fine-tune episode budget")
    p_cur.add_argument("--eval-episodes", type=int, default=100)
    p_cur.add_argument("--eval-seed", type=int, default=0)
    p_cur.add_argument(
        "--fresh-lr",
        action="store_true",
        help="restart the learning-rate schedule instead of resuming the saved rate",
    )

    p_render = sub.add_parser("render", help="plot a trajectory log as SVG")
    p_render.add_argument("trajectory", type=Path, help="line-delimited trajectory log")
    p_render.add_argument("config", type=Path)
    p_render.add_argument("--out", type=Path, required=True, help="output SVG path")
    p_render.add_argument(
        "--side-view", type=Path, default=None, help="also write an altitude profile SVG"
    )
    return parser


def _resolve_out_dir(out: Path | None, default_name: str) -> Path:
    if out is not None:
        return out
    root = os.environ.get(OUTPUT_ROOT_VAR)
    if root is None:
        raise UsageError(f"--out not given and ${OUTPUT_ROOT_VAR} is not set")
    return Path(root) / default_name


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_dir: Path, payload: dict) -> None:
    (out_dir / "manifest.json").write_text(json.dumps(payload, indent=1, sort_keys=True))


def _load_trajectory(path: Path) -> list[dict]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}: line {lineno}: not valid JSON ({exc.msg})") from None
            if not isinstance(record, dict) or not _TRAJECTORY_KEYS.issubset(record):
                missing = _TRAJECTORY_KEYS - set(record) if isinstance(record, dict) else _TRAJECTORY_KEYS
                raise UsageError(
                    f"{path}: line {lineno}: missing fields {sorted(missing)}"
                )
            records.append(record)
    return records


def _print_metrics(result) -> None:
    for name, value in result.as_dict().items():
        print(f"{name}: {value:.6g}")


def cmd_train(args: argparse.Namespace) -> int:
    settings = load_run_settings(args.config)
    if args.seed is not None:
        settings.train.seed = args.seed
    if args.episodes is not None:
        if args.episodes < 1:
            raise UsageError(f"--episodes must be at least 1, got {args.episodes}")
        settings.train.episodes = args.episodes

    out_dir = _resolve_out_dir(args.out, f"train-seed{settings.train.seed}")
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utc_now()
    result = train(
        settings.env,
        settings.train,
        settings.exploration,
        settings.reward,
        metrics_path=out_dir / "metrics.csv",
        checkpoint_dir=out_dir,
    )
    _write_manifest(
        out_dir,
        {
            "tool": "dronetrack",
            "version": __version__,
            "command": "train",
            "seed": settings.train.seed,
            "episodes": settings.train.episodes,
            "config": settings_as_dict(settings),
            "artifacts": {
                "metrics_csv": "metrics.csv",
                "checkpoint_final": "checkpoint_final.json",
            },
            "started_utc": started,
            "completed_utc": _utc_now(),
        },
    )
    print(f"trained {result.episodes} episodes -> {out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    settings = load_run_settings(args.config)
    ckpt = load_checkpoint(args.checkpoint)
    if args.episodes < 1:
        raise UsageError(f"--episodes must be at least 1, got {args.episodes}")

    collect: list[list[dict]] | None = None
    if args.trajectories is not None:
        collect = []
        args.trajectories.mkdir(parents=True, exist_ok=True)
    result = evaluate(
        ckpt.net,
        settings.env,
        settings.reward,
        args.episodes,
        args.seed,
        terminate_on_collision=settings.train.terminate_on_collision,
        trajectory_records=collect,
    )
    if collect is not None:
        for i, records in enumerate(collect):
            path = args.trajectories / f"episode_{i:04d}.jsonl"
            with open(path, "w") as fh:
                for record in records:
                    fh.write(json.dumps(record) + "\n")
    _print_metrics(result)
    return 0


def cmd_curriculum(args: argparse.Namespace) -> int:
    settings = load_run_settings(args.config)
    ckpt = load_checkpoint(args.checkpoint)
    if args.seed is not None:
        settings.train.seed = args.seed
    if args.episodes is not None:
        if args.episodes < 1:
            raise UsageError(f"--episodes must be at least 1, got {args.episodes}")
        settings.train.episodes = args.episodes

    out_dir = _resolve_out_dir(args.out, f"curriculum-seed{settings.train.seed}")
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utc_now()

    before = evaluate(
        ckpt.net,
        settings.env,
        settings.reward,
        args.eval_episodes,
        args.eval_seed,
        terminate_on_collision=settings.train.terminate_on_collision,
    )
    result = curriculum_finetune(
        ckpt,
        settings.env,
        settings.train,
        settings.exploration,
        settings.reward,
        resume_lr=not args.fresh_lr,
        metrics_path=out_dir / "metrics.csv",
        checkpoint_dir=out_dir,
    )
    after = evaluate(
        result.net,
        settings.env,
        settings.reward,
        args.eval_episodes,
        args.eval_seed,
        terminate_on_collision=settings.train.terminate_on_collision,
    )

    comparison = out_dir / "comparison.csv"
    with open(comparison, "w") as fh:
        fh.write("phase,avg_distance,avg_time,avg_reward\n")
        for phase, res in (("before", before), ("after", after)):
            fh.write(
                f"{phase},{res.avg_distance!r},{res.avg_time!r},{res.avg_reward!r}\n"
            )
    _write_manifest(
        out_dir,
        {
            "tool": "dronetrack",
            "version": __version__,
            "command": "curriculum",
            "seed": settings.train.seed,
            "episodes": settings.train.episodes,
            "eval_episodes": args.eval_episodes,
            "eval_seed": args.eval_seed,
            "resume_lr": not args.fresh_lr,
            "source_checkpoint": str(args.checkpoint),
            "config": settings_as_dict(settings),
            "artifacts": {
                "metrics_csv": "metrics.csv",
                "checkpoint_final": "checkpoint_final.json",
                "comparison_csv": "comparison.csv",
            },
            "started_utc": started,
            "completed_utc": _utc_now(),
        },
    )
    print("before:", " ".join(f"{k}={v:.6g}" for k, v in before.as_dict().items()))
    print("after: ", " ".join(f"{k}={v:.6g}" for k, v in after.as_dict().items()))
    print(f"comparison table -> {comparison}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    settings = load_run_settings(args.config)
    records = _load_trajectory(args.trajectory)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(render_topdown(settings.env, records))
    print(f"wrote {args.out}")
    if args.side_view is not None:
        args.side_view.parent.mkdir(parents=True, exist_ok=True)
        args.side_view.write_text(render_sideview(settings.env, records))
        print(f"wrote {args.side_view}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "curriculum": cmd_curriculum,
    "render": cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse --version/--help exit through here with code 0.
        code = exc.code if exc.code is not None else 0
        return int(code) if isinstance(code, int) else 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
