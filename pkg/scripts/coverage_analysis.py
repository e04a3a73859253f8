"""Partition-entropy coverage grids for the saturation and luminance covers.

    python3 scripts/coverage_analysis.py --out runs/coverage

Writes coverage_<cover>.csv over a uniform value grid and a summary with the
mean entropy density per order, the per-value winner counts, and the
recommended order.
"""

import argparse
import json
from collections import Counter
from pathlib import Path

import numpy as np

from t3cen.cli import int_list
from t3cen.groups import LUMINANCE, SATURATION
from t3cen.lifting import best_order_at, coverage_grid, select_order, write_coverage_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int_list, default=[2, 3, 4, 8, 16])
    ap.add_argument("--grid", type=int, default=1001)
    ap.add_argument("--out", default="runs/coverage")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    values = np.linspace(0.0, 1.0, args.grid)
    summary = {}
    for name, cover in (("sat", SATURATION), ("lum", LUMINANCE)):
        reports = coverage_grid(cover, values, args.orders)
        write_coverage_csv(out / f"coverage_{name}.csv", reports)
        density = {n: float(np.mean([r.entropy_density for r in reports if r.order == n])) for n in args.orders}
        winners = Counter(best_order_at(cover, v, args.orders) for v in values)
        summary[name] = {
            "mean_entropy_density": density,
            "winner_counts": {int(k): v for k, v in sorted(winners.items())},
            "recommended": select_order(cover, [(v, 1.0) for v in values], args.orders),
        }
        print(name, json.dumps(summary[name]))
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
