#!/usr/bin/env python3
"""Train a tracking policy on a seeded arena and compare it to random play.

Runs the full pipeline in one process: arena generation, training, paired
greedy-vs-random evaluation, and an SVG render of one greedy episode. Meant
as a quick smoke run; use the ``dronetrack`` CLI for archived experiments.

Usage:
  python3 scripts/train_demo.py --out runs/demo               # ~1 min
  python3 scripts/train_demo.py --out runs/demo --episodes 2000
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from dronetrack.agent import (
    ExplorationParams,
    TrainConfig,
    evaluate_policy,
    greedy_policy,
    random_policy,
    train,
)
from dronetrack.environment import generate_environment
from dronetrack.render_svg import render_topdown
from dronetrack.reward import RewardParams


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--obstacles", type=int, default=3)
    parser.add_argument("--arena-seed", type=int, default=42)
    parser.add_argument("--episodes", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0, help="training seed")
    parser.add_argument("--eval-episodes", type=int, default=20)
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args()

    env = generate_environment(args.obstacles, seed=args.arena_seed)
    params = RewardParams()
    config = TrainConfig(episodes=args.episodes, seed=args.seed)

    print(f"training {args.episodes} episodes on {args.obstacles}-obstacle arena ...")
    result = train(env, config, ExplorationParams(), params)

    episodes_log: list[list[dict]] = []
    greedy_stats = evaluate_policy(
        greedy_policy(result.net), env, params, episodes=args.eval_episodes,
        seed=0, trajectory_records=episodes_log,
    )
    random_stats = evaluate_policy(
        random_policy(np.random.default_rng(args.seed + 1)), env, params,
        episodes=args.eval_episodes, seed=0,
    )

    print(f"{'metric':>14}  {'greedy':>10}  {'random':>10}")
    for name in ("avg_distance", "avg_time", "avg_reward"):
        print(
            f"{name:>14}  {getattr(greedy_stats, name):>10.2f}"
            f"  {getattr(random_stats, name):>10.2f}"
        )

    args.out.mkdir(parents=True, exist_ok=True)
    svg_path = args.out / "greedy_episode.svg"
    svg_path.write_text(render_topdown(env, episodes_log[0]))
    print(f"wrote {svg_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
