#!/usr/bin/env python3
"""Render failure-rate figures from a results CSV.

Reads the frozen harness CSV schema, groups rows the same way the summarize
table does, and draws one figure per (scenario, delta) group: empirical
failure rates per n with exact binomial confidence bands, and the analytic
bound curve alongside. A sidecar JSON next to each figure records the plotted
values, so downstream checks can compare them against the summarize table
without parsing the image.

No computation happens beyond what the CSV carries plus the confidence
interval; this script never imports the library that produced the CSV.

Usage: render.py --csv results.csv --out figs/ [--format svg|png] [--log-y]
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from scipy.stats import beta as beta_dist

EXPECTED_COLUMNS = [
    "scenario", "n", "delta", "beta", "alpha", "eps", "mode", "trial",
    "seed", "outcome", "exactness", "bound", "wall_ms",
]

# fixed salt keeps SVG element ids stable across runs
matplotlib.rcParams["svg.hashsalt"] = "recon-lab-plots"


def clopper_pearson(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    a = 1.0 - conf
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a / 2.0, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1.0 - a / 2.0, k + 1, n - k))
    return lo, hi


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = [c for c in EXPECTED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SystemExit(f"error: CSV is missing column(s): {', '.join(missing)}")
        return list(reader)


def group_points(rows: list[dict]) -> dict[tuple, list[dict]]:
    """Aggregate exactly like the summarize table, then bucket by figure key."""
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["scenario"], int(row["n"]), int(row["delta"]), row["beta"],
               row["alpha"], int(row["eps"]), row["mode"])
        cells.setdefault(key, []).append(row)
    figures: dict[tuple, list[dict]] = {}
    for key in sorted(cells, key=lambda k: tuple(str(x) for x in k)):
        members = cells[key]
        trials = len(members)
        fails = sum(1 for r in members if r["outcome"] == "violated")
        lo, hi = clopper_pearson(fails, trials)
        point = {
            "scenario": key[0],
            "n": key[1],
            "delta": key[2],
            "beta": key[3],
            "alpha": float(key[4]),
            "eps": key[5],
            "mode": key[6],
            "trials": trials,
            "violations": fails,
            "failure_rate": fails / trials,
            "ci95_lo": lo,
            "ci95_hi": hi,
            "bound": float(members[0]["bound"]),
        }
        figures.setdefault((key[0], key[2], key[3]), []).append(point)
    return figures


def render_figure(fig_key: tuple, points: list[dict], out_dir: Path,
                  fmt: str, log_y: bool) -> Path:
    scenario, delta, beta = fig_key
    points = sorted(points, key=lambda p: (p["n"], p["eps"]))
    xs = [p["n"] for p in points]
    ys = [p["failure_rate"] for p in points]
    lows = [p["failure_rate"] - p["ci95_lo"] for p in points]
    highs = [p["ci95_hi"] - p["failure_rate"] for p in points]
    bounds = [p["bound"] for p in points]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(xs, ys, yerr=[lows, highs], fmt="o", capsize=3,
                label="empirical failure rate (95% CI)")
    ax.plot(xs, bounds, linestyle="--", marker=".", label="analytic bound")
    ax.set_xlabel("n")
    ax.set_ylabel("failure probability")
    ax.set_title(f"{scenario} (delta={delta}, beta={beta})")
    if log_y:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()

    safe_beta = str(beta).replace("/", "-").replace(".", "p")
    stem = f"{scenario}_delta{delta}_beta{safe_beta}"
    img_path = out_dir / f"{stem}.{fmt}"
    fig.savefig(img_path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)

    sidecar = out_dir / f"{stem}.values.json"
    sidecar.write_text(json.dumps(points, indent=2, sort_keys=True) + "\n")
    return img_path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--csv", required=True)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--format", choices=["svg", "png"], default="svg")
    ap.add_argument("--log-y", action="store_true")
    args = ap.parse_args(argv)

    rows = read_rows(Path(args.csv))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        print("warning: no data rows; nothing rendered", file=sys.stderr)
        return 0
    figures = group_points(rows)
    written = []
    for fig_key in sorted(figures, key=lambda k: tuple(str(x) for x in k)):
        points = figures[fig_key]
        if not points:
            print(f"warning: empty group {fig_key}, skipped", file=sys.stderr)
            continue
        written.append(render_figure(fig_key, points, out_dir, args.format, args.log_y))
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
