#!/usr/bin/env python3
"""Compare direct training against curriculum fine-tuning on a denser arena.

Trains a policy on a sparse arena, fine-tunes it on a denser one with a
fraction of the budget, and reports how close the transferred policy gets
to one trained on the dense arena from scratch.

Usage:
  python3 scripts/curriculum_demo.py                    # quick (~2 min)
  python3 scripts/curriculum_demo.py --episodes 2000 --finetune-fraction 0.25
"""
from __future__ import annotations

import argparse
from dataclasses import replace

from dronetrack.agent import (
    EvalResult,
    ExplorationParams,
    TrainConfig,
    curriculum_finetune,
    evaluate,
    train,
)
from dronetrack.environment import generate_environment
from dronetrack.reward import RewardParams


def report(label: str, stats: EvalResult) -> None:
    print(
        f"{label:>12}  distance={stats.avg_distance:8.2f}"
        f"  time={stats.avg_time:7.2f}  reward={stats.avg_reward:8.2f}"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sparse", type=int, default=3, help="source obstacle count")
    parser.add_argument("--dense", type=int, default=5, help="target obstacle count")
    parser.add_argument("--arena-seed", type=int, default=42)
    parser.add_argument("--episodes", type=int, default=400)
    parser.add_argument("--finetune-fraction", type=float, default=0.25)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eval-episodes", type=int, default=50)
    args = parser.parse_args()

    sparse_env = generate_environment(args.sparse, seed=args.arena_seed)
    dense_env = generate_environment(args.dense, seed=args.arena_seed)
    exploration = ExplorationParams()
    params = RewardParams()
    config = TrainConfig(episodes=args.episodes, seed=args.seed)
    finetune_episodes = max(1, round(args.episodes * args.finetune_fraction))

    print(f"direct training, {args.sparse} obstacles, {args.episodes} episodes ...")
    sparse_result = train(sparse_env, config, exploration, params)

    print(f"direct training, {args.dense} obstacles, {args.episodes} episodes ...")
    dense_result = train(dense_env, config, exploration, params)

    print(f"fine-tuning {args.sparse}->{args.dense}, {finetune_episodes} episodes ...")
    finetuned = curriculum_finetune(
        sparse_result.checkpoint(),
        dense_env,
        replace(config, episodes=finetune_episodes),
        exploration,
        params,
    )

    dense_stats = evaluate(dense_result.net, dense_env, params,
                           episodes=args.eval_episodes, seed=0)
    finetune_stats = evaluate(finetuned.net, dense_env, params,
                              episodes=args.eval_episodes, seed=0)

    print(f"\nevaluation on the {args.dense}-obstacle arena:")
    report("direct", dense_stats)
    report("fine-tuned", finetune_stats)

    budget = finetune_episodes / args.episodes
    gap = abs(finetune_stats.avg_reward - dense_stats.avg_reward)
    rel = gap / max(abs(dense_stats.avg_reward), 1e-9)
    print(f"\nfine-tuned used {budget:.0%} of the direct budget; "
          f"reward gap {gap:.2f} ({rel:.1%} relative)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
