#!/usr/bin/env python3
"""Plot spectral gap versus attenuation factor from a gap_sweep CSV.

Usage: plot_gap.py <gap_sweep.csv> <out.png|out.svg>

One line per (branch, j) promise plus a horizontal reference at the ideal
generator's gap; gamma on a log axis (gamma = 0 rows anchor the reference
but cannot sit on the log scale and are skipped with a note). The script
only reads the CSV; rerunning on the same input produces an identical file.
"""

import csv
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fixed"  # deterministic SVG ids
import matplotlib.pyplot as plt

REQUIRED = {"branch", "n", "r", "j", "gamma", "gap", "gap_ideal", "kernel_dim"}


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


def plot_gap(csv_path, out_path):
    rows = read_rows(csv_path)
    series = {}
    for row in rows:
        key = (row["branch"], int(row["j"]))
        series.setdefault(key, []).append((float(row["gamma"]), float(row["gap"])))
    ideal = float(rows[0]["gap_ideal"])

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    skipped_zero = 0
    for (branch, j), points in sorted(series.items()):
        points.sort()
        xs = [g for g, _ in points if g > 0]
        ys = [gap for g, gap in points if g > 0]
        skipped_zero += len(points) - len(xs)
        ax.plot(xs, ys, marker="o", markersize=3.5, label=f"branch {branch}, j={j}")
    ax.axhline(ideal, color="black", linestyle="--", linewidth=1, label="ideal generator")
    ax.set_xscale("log")
    ax.set_xlabel(r"attenuation factor $\gamma$")
    ax.set_ylabel(r"spectral gap $\Delta$")
    ax.set_title("Convergence rate of promised generators vs attenuation")
    ax.legend(fontsize=8)
    fig.tight_layout()
    metadata = {"Date": None} if str(out_path).endswith(".svg") else {}
    fig.savefig(out_path, dpi=150, metadata=metadata)
    plt.close(fig)
    return {"series": len(series) + 1, "points": sum(len(p) for p in series.values()),
            "skipped_gamma_zero": skipped_zero}


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    try:
        info = plot_gap(argv[1], argv[2])
    except (SchemaMismatch, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {argv[2]}: {info['series']} series, {info['points']} points")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
