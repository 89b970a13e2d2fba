"""Time constrained inference against forward pass plus Dykstra projection.

Expects the checkpoints written by projection_sweep.py:

    python3 scripts/timing.py --runs runs/projection --seed 0
"""
import argparse
import json
from pathlib import Path

from conecraft.experiments import bench_inference


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", default="runs/projection")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-runs", type=int, default=100)
    ap.add_argument("--batch", type=int, default=256)
    args = ap.parse_args()
    root = Path(args.runs)
    rep = bench_inference(root / f"constrained_{args.seed}" / "checkpoint",
                          root / f"unconstrained_{args.seed}" / "checkpoint",
                          n_runs=args.n_runs, batch=args.batch)
    print(json.dumps(rep, indent=2))


if __name__ == "__main__":
    main()
