"""Grid-refinement study for the path-based statistics.

Prints the KS distance of the x2, lamn and mle populations against their limit
samples for a sequence of grid steps at fixed T and seeds. The spread between
the coarsest and finest grid is what the path allowance has to absorb.
"""
import argparse

from heavy_ou import harness
from heavy_ou.harness import ExperimentConfig
from heavy_ou.levy_model import JumpMeasureSpec, LevyModel
from heavy_ou.simulate import SimConfig, default_eps_cut


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--T", type=float, default=500.0)
    ap.add_argument("--M", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = JumpMeasureSpec.stable(1.5, 0.5, 0.5)
    model = LevyModel(1.0, 0.0, spec)
    print("h,ks_x2,ks_lamn,ks_mle")
    for h in args.steps:
        sim = SimConfig(T=args.T, h=h, theta=1.0, eps_cut=default_eps_cut(spec, h))
        cfg = ExperimentConfig(model, 1.0, sim, horizons=(args.T,), replications=args.M)
        row = [harness.EXPERIMENTS[n](cfg, workers=args.workers).ks_distance for n in ("x2", "lamn", "mle")]
        print(f"{h}," + ",".join(f"{v:.4f}" for v in row))
        harness.clear_cache()


if __name__ == "__main__":
    main()
