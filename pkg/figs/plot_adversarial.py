#!/usr/bin/env python3
"""Plot stationary-state error versus adversariality from an adversarial CSV.

Usage: plot_adversarial.py <adversarial.csv> <out.png|out.svg>

One line per median-amplification level m_med; alpha on a linear axis,
trace distance on a log axis (exact alpha = 0 points are clipped to the
axis floor). Reads the CSV only; identical input gives an identical file.
"""

import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fixed"  # deterministic SVG ids
import matplotlib.pyplot as plt

REQUIRED = {"q", "n", "alpha", "m_med", "beta", "distance", "kernel_dim"}
FLOOR = 1e-16


class SchemaMismatch(Exception):
    pass


class EmptyInput(Exception):
    pass


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInput(f"{path} has no header")
        missing = REQUIRED - set(reader.fieldnames)
        if missing:
            raise SchemaMismatch(f"{path} lacks columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path} has no data rows")
    return rows


def plot_adversarial(csv_path, out_path):
    rows = read_rows(csv_path)
    series = {}
    dropped = 0
    for row in rows:
        dist = float(row["distance"])
        if math.isnan(dist):
            dropped += 1
            continue
        series.setdefault(int(row["m_med"]), []).append((float(row["alpha"]), dist))

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for m_med, points in sorted(series.items()):
        points.sort()
        xs = [a for a, _ in points]
        ys = [max(d, FLOOR) for _, d in points]
        ax.plot(xs, ys, marker="o", markersize=4, label=f"m_med = {m_med}")
    ax.set_yscale("log")
    ax.set_xlabel(r"adversariality $\alpha$")
    ax.set_ylabel("trace distance to the thermal state")
    ax.set_title("Estimation-based generator error vs spectrum adversariality")
    ax.legend(fontsize=8)
    fig.tight_layout()
    metadata = {"Date": None} if str(out_path).endswith(".svg") else {}
    fig.savefig(out_path, dpi=150, metadata=metadata)
    plt.close(fig)
    return {"series": len(series), "points": sum(len(p) for p in series.values()),
            "dropped_rows": dropped}


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    try:
        info = plot_adversarial(argv[1], argv[2])
    except (SchemaMismatch, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {argv[2]}: {info['series']} series, {info['points']} points")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
