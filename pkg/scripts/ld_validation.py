"""Monte Carlo check that -t log p_hat extrapolates to the analytic exponent.

Planar Brownian bridge from (0, 0.5) to (1, 0.3) against the line v = 0;
the exact exponent is 2 * 0.5 * 0.3 = 0.3.

Usage: python3 scripts/ld_validation.py [--paths 1000000] [--workers 4]
"""

import argparse
import math

import numpy as np

from bridgeexit import (
    Hyperplane,
    RngSpec,
    brownian_crossing_exact,
    crossing_curve,
    ld_slope,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=1_000_000)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument(
        "--t", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05]
    )
    args = ap.parse_args()

    x = np.array([0.0, 0.5])
    y = np.array([1.0, 0.3])
    plane = Hyperplane(np.array([0.0, 1.0]), 0.0)
    cov = np.eye(2)

    ests = crossing_curve(
        x, y, args.t, cov, plane, args.paths, args.steps,
        RngSpec(args.seed), workers=args.workers,
    )
    print(f"{'t':>6}  {'p_hat':>12}  {'exact':>12}  {'-t log p_hat':>12}")
    for est in ests:
        exact = brownian_crossing_exact(x, y, est.t, cov, plane)
        print(
            f"{est.t:>6.3f}  {est.p_hat:>12.6g}  {exact:>12.6g}"
            f"  {est.exponent:>12.6f}"
        )

    fit = ld_slope(ests)
    print(f"\nfit: J = {fit.intercept:.6f} + {fit.slope:.6f} * t")
    print(f"analytic J = {2 * 0.5 * 0.3:.6f}")
    rel = abs(fit.intercept - 0.3) / 0.3
    print(f"intercept relative error: {rel:.2%}")
    if math.isfinite(rel) and rel > 0.05:
        raise SystemExit("intercept off by more than 5%")


if __name__ == "__main__":
    main()
