"""Print the true-vs-frozen exit table for both reference configurations.

Usage: python3 scripts/freezing_report.py [--t 0.05]
"""

import argparse

import numpy as np

from bridgeexit import VerticalBarrier, compare_freezing, hull_white_model

CASES = {
    "wide": (np.array([1.0, 0.2]), np.array([2.0, 0.5]), 2.5),
    "close": (np.array([2.47, 0.08]), np.array([2.48, 0.12]), 2.5),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=float, default=0.05, help="time horizon")
    args = ap.parse_args()

    model = hull_white_model()
    for name, (x, y, x0) in CASES.items():
        mid = 0.5 * (x + y)
        table = compare_freezing(
            model, x, y, VerticalBarrier(x0), [y, mid], t_list=(args.t,)
        )
        print(f"# {name}: x={x}, y={y}, barrier at {x0}, t={args.t}")
        print(f"{'label':>22}  {'J':>10}  {'z*':>18}  {'exp(-J/t)':>10}")
        for row in table.rows:
            r = row.result
            z = f"({r.z_star[0]:.4f}, {r.z_star[1]:.4f})"
            print(
                f"{row.label:>22}  {r.J:>10.6f}  {z:>18}"
                f"  {row.probabilities[0]:>10.4g}"
            )
        print()


if __name__ == "__main__":
    main()
