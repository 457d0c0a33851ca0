"""How far phi_T^2 [eta^T]_T sits from its limit, by rho and T.

Only the jump record is needed, so paths are not simulated: the heavy jumps
above R = T^rho are drawn directly. Prints the KS distance against the limit
sampler next to the truncation level (R phi_T)^2 below which the limit keeps
mass that the statistic cannot have, and the mean of that missing part.
"""
import argparse
import math

import numpy as np

from heavy_ou.harness import ks_two_sample
from heavy_ou.levy_model import JumpMeasureSpec, ScalingFunction, phi, sample_jump_above, tail
from heavy_ou.simulate import path_rng
from heavy_ou.stable_limit import StableLimit, sample_stable


def heavy_qv_draws(spec, T, R, M, seed):
    out = np.empty(M)
    for k in range(M):
        rng = path_rng(seed, k)
        n = rng.poisson(tail(spec, R) * T)
        J = sample_jump_above(spec, R, 1 - rng.uniform(size=n), rng.uniform(size=n))
        out[k] = np.sum(np.asarray(J) ** 2)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--M", type=int, default=1000)
    ap.add_argument("--horizons", type=float, nargs="+", default=[5e2, 5e4, 5e6, 5e8, 5e10])
    ap.add_argument("--rhos", type=float, nargs="+", default=[0.0, 0.4, 0.5, 0.6])
    ap.add_argument("--max-jumps", type=float, default=2e4, help="skip (T, rho) with more expected jumps per path")
    args = ap.parse_args()

    spec = JumpMeasureSpec.stable(args.alpha, 0.5, 0.5)
    lim = StableLimit(args.alpha)
    ref = sample_stable(lim, np.random.default_rng(1), args.M)
    beta = args.alpha / 2
    print("T,rho,truncation_level,missing_mean,ks")
    for T in args.horizons:
        p = phi(ScalingFunction(spec), T)
        for rho in args.rhos:
            R = T**rho
            if tail(spec, R) * T > args.max_jumps:
                continue
            u0 = (R * p) ** 2
            # the limit's Levy measure is beta s^(-1-beta) ds; its mean below u0
            missing = beta / (1 - beta) * u0 ** (1 - beta)
            emp = p**2 * heavy_qv_draws(spec, T, R, args.M, 7)
            print(f"{T:g},{rho},{u0:.4g},{missing:.4g},{ks_two_sample(emp, ref):.4f}")


if __name__ == "__main__":
    main()
