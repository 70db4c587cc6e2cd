#!/usr/bin/env python3
"""Generate a seeded arena and write it as a run-configuration file.

The obstacle layout is fully determined by --obstacles and --seed, so a
config produced here can be regenerated (or audited) at any time. All other
settings are written at their defaults; edit the file afterwards or override
the training keys on the command line of the main tool.

Usage:
  python3 scripts/make_arena.py --obstacles 3 --seed 42 --out configs/arena3.ini
"""
from __future__ import annotations

import argparse
from pathlib import Path

from dronetrack.config_io import RunSettings, save_run_settings
from dronetrack.environment import generate_environment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--obstacles", type=int, default=3, help="0 or 2..7 cylinders")
    parser.add_argument("--seed", type=int, default=42, help="layout seed")
    parser.add_argument("--side", type=float, default=100.0, help="arena side length")
    parser.add_argument("--out", type=Path, required=True, help="output config path")
    args = parser.parse_args()

    env = generate_environment(args.obstacles, seed=args.seed, side=args.side)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_run_settings(args.out, RunSettings(env=env))

    print(f"wrote {args.out}")
    for i, cyl in enumerate(env.obstacles):
        print(
            f"  obstacle {i}: center=({cyl.center.x:.1f}, {cyl.center.y:.1f}) "
            f"r={cyl.radius:.1f} h={cyl.height:.1f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
