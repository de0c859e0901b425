#!/usr/bin/env python3
"""Run the three desk-scale presets and emit CSVs (and plots if matplotlib
is available).

    python scripts/run_figures.py --outdir results --seed 1 --workers 4

Roughly 10 minutes at the default 2000 frames per point on two cores.
"""

import argparse
import os
import subprocess
import sys

from uscsim import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    for name in ("fig1-desk", "fig2-desk", "fig3-desk"):
        out = os.path.join(args.outdir, name.replace("-", "_") + ".csv")
        print(f"== {name} -> {out}")
        plan = bench.preset_plan(name, seed=args.seed)
        bench.run_plan(plan, out, workers=args.workers)
        plot = out.replace(".csv", ".png")
        script = os.path.join(os.path.dirname(__file__), "plot_ber.py")
        try:
            subprocess.run([sys.executable, script, out, "-o", plot], check=True)
        except Exception as exc:  # plotting is optional
            print(f"(plot skipped: {exc})")


if __name__ == "__main__":
    main()
