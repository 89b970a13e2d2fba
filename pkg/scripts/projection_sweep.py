"""Train both projection variants over several seeds and print the gaps.

    python3 scripts/projection_sweep.py --out runs/projection --seeds 0 1 2
"""
import argparse
import json
from pathlib import Path

from conecraft.experiments import (ProjectionExperimentConfig, load_config,
                                   run_projection_experiment)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIGS / "projection_desk.json"))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out", default="runs/projection")
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    rows = []
    for variant in ("constrained", "unconstrained"):
        for seed in args.seeds:
            cfg = load_config(ProjectionExperimentConfig, args.config,
                              args.override + [f"variant={variant}", f"seed={seed}"])
            log = run_projection_experiment(cfg, out_dir=Path(args.out) / f"{variant}_{seed}")
            s = log.summary
            rows.append(s)
            print(f"{variant:13s} seed {seed}: best val MSE {s['best_val_loss']:.5f} "
                  f"optimum {s['optimum']:.5f} gap {s['gap']:.4f} (epoch {s['best_epoch']})",
                  flush=True)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "sweep.json").write_text(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
