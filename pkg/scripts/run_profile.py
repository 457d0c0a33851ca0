"""Run every experiment at the desk-scale profile and write reports.

    python3 scripts/run_profile.py --out results/profile --workers 4
"""
import argparse
from pathlib import Path

from heavy_ou.harness import EXPERIMENTS, ExperimentConfig
from heavy_ou.levy_model import JumpMeasureSpec, LevyModel
from heavy_ou.simulate import SimConfig, default_eps_cut


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results/profile"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--T", type=float, default=500.0)
    ap.add_argument("--M", type=int, default=1000)
    ap.add_argument("--mode", default="oracle")
    args = ap.parse_args()

    spec = JumpMeasureSpec.stable(1.5, 0.5, 0.5)
    model = LevyModel(1.0, 0.0, spec)
    sim = SimConfig(T=args.T, h=args.h, theta=1.0, eps_cut=default_eps_cut(spec, args.h))
    cfg = ExperimentConfig(model, 1.0, sim, horizons=(args.T,), replications=args.M, mode=args.mode)
    for name, run in EXPERIMENTS.items():
        if name == "joint" and args.mode != "oracle":
            continue
        rep = run(cfg, workers=args.workers)
        rep.write(args.out, force=True)
        print(f"{name:7s} ks={rep.ks_distance:.4f} thr={rep.threshold:.4f} "
              f"{'PASS' if rep.all_passed else 'FAIL'} {rep.runtime_seconds:.1f}s")


if __name__ == "__main__":
    main()
