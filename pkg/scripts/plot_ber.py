#!/usr/bin/env python3
"""Plot BER curves from a benchmark CSV.

Picks the x axis automatically: speed sweeps (single SNR) plot BER vs
speed, SNR sweeps plot BER vs SNR; one line per (scheme, detector).

    python scripts/plot_ber.py results.csv -o ber.png
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", help="CSV written by 'uscsim run'")
    ap.add_argument("-o", "--out", default="ber.png")
    args = ap.parse_args()

    rows = load(args.csv)
    snrs = sorted({float(r["snr_db"]) for r in rows})
    speeds = sorted({float(r["speed_kmh"]) for r in rows})
    x_key, x_label = (
        ("snr_db", "SNR (dB)") if len(snrs) > 1 else ("speed_kmh", "UE speed (km/h)")
    )

    curves = defaultdict(list)
    for r in rows:
        label = f"{r['scheme']}/{r['detector']}"
        curves[label].append((float(r[x_key]), float(r["ber"])))

    fig, ax = plt.subplots(figsize=(5.5, 4))
    for label, pts in sorted(curves.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [max(p[1], 1e-7) for p in pts]
        ax.semilogy(xs, ys, marker="o", label=label)
    ax.set_xlabel(x_label)
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
