"""Render figures from the bgtphd CSV outputs.

    python plot_results.py RESULTS_DIR [--tracks tracks.csv] [--figure NAME ...] [--out DIR]

RESULTS_DIR holds aggregate.csv, runtime.csv and manifest.json as written by
`bgtphd run`. Inputs are only read.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

AGGREGATE_COLUMNS = ["scan", "variant", "L", "mean_cardinality", "cardinality_std", "mean_clutter_rate",
                     "rms_tm", "mean_true_cardinality", "mean_detection_prob", "runs"]
RUNTIME_COLUMNS = ["variant", "L", "runs", "failed_runs", "mean_seconds", "min_seconds", "max_seconds"]
TRACK_COLUMNS = ["run", "scan", "kind", "track_id", "birth_time", "x", "y", "p_D"]

FIGURES = ("trajectories", "cardinality", "clutter", "tm", "runtime")


class SchemaError(ValueError):
    pass


def read_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    for col in columns:
        if col not in frame.columns:
            raise SchemaError(f"{path}: missing column '{col}'")
    return frame


def _series(agg: pd.DataFrame):
    for (variant, L), group in agg.groupby(["variant", "L"], sort=True):
        yield f"{variant} L={L}", group.sort_values("scan")


def plot_cardinality(agg: pd.DataFrame, ax) -> None:
    truth = agg.groupby("scan")["mean_true_cardinality"].first()
    ax.step(truth.index, truth.values, where="mid", color="k", label="truth")
    for label, g in _series(agg):
        line, = ax.plot(g["scan"], g["mean_cardinality"], label=label)
        ax.fill_between(g["scan"], g["mean_cardinality"] - g["cardinality_std"],
                        g["mean_cardinality"] + g["cardinality_std"], color=line.get_color(), alpha=0.15)
    ax.set_xlabel("scan")
    ax.set_ylabel("number of trajectories")


def plot_clutter(agg: pd.DataFrame, ax, expected: float) -> None:
    for label, g in _series(agg[agg["variant"] == "robust"]):
        ax.plot(g["scan"], g["mean_clutter_rate"], label=label)
    ax.axhline(expected, color="k", linestyle="--", label=f"true rate {expected:g}")
    ax.set_xlabel("scan")
    ax.set_ylabel("clutter rate")


def plot_tm(agg: pd.DataFrame, ax) -> None:
    for label, g in _series(agg):
        ax.plot(g["scan"], g["rms_tm"], label=label)
    ax.set_xlabel("scan")
    ax.set_ylabel("RMS trajectory metric")


def plot_runtime(runtime: pd.DataFrame, ax) -> None:
    robust = runtime[runtime["variant"] == "robust"].sort_values("L")
    ax.bar([str(v) for v in robust["L"]], robust["mean_seconds"])
    ax.set_xlabel("L")
    ax.set_ylabel("mean seconds per run")


def plot_trajectories(tracks: pd.DataFrame, ax) -> None:
    for (kind, tid), g in tracks.groupby(["kind", "track_id"]):
        g = g.sort_values("scan")
        if kind == "truth":
            ax.plot(g["x"], g["y"], "k-", linewidth=1)
            ax.plot(g["x"].iloc[0], g["y"].iloc[0], "ko")
        else:
            ax.plot(g["x"], g["y"], ".", markersize=3)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")


def render(results: Path | None, figures: list[str], out: Path, tracks: Path | None = None) -> list[Path]:
    """Validate every needed input first, then write one PNG per figure."""
    figures = list(FIGURES) if not figures or "all" in figures else figures
    unknown = [f for f in figures if f not in FIGURES]
    if unknown:
        raise ValueError(f"unknown figure '{unknown[0]}'")

    needs_agg = {"cardinality", "clutter", "tm"} & set(figures)
    agg = read_csv(results / "aggregate.csv", AGGREGATE_COLUMNS) if needs_agg else None
    runtime = read_csv(results / "runtime.csv", RUNTIME_COLUMNS) if "runtime" in figures else None
    expected = None
    if "clutter" in figures:
        expected = float(json.loads((results / "manifest.json").read_text())["expected_clutter_rate"])
    track_frame = None
    if "trajectories" in figures:
        if tracks is None:
            raise ValueError("the trajectories figure needs --tracks")
        track_frame = read_csv(tracks, TRACK_COLUMNS)

    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in figures:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        if name == "cardinality":
            plot_cardinality(agg, ax)
        elif name == "clutter":
            plot_clutter(agg, ax, expected)
        elif name == "tm":
            plot_tm(agg, ax)
        elif name == "runtime":
            plot_runtime(runtime, ax)
        else:
            plot_trajectories(track_frame, ax)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize="small")
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("results", type=Path, nargs="?", help="directory written by `bgtphd run`")
    ap.add_argument("--tracks", type=Path, help="CSV written by `bgtphd export-tracks`")
    ap.add_argument("--figure", action="append", default=[], choices=FIGURES + ("all",))
    ap.add_argument("--out", type=Path, default=Path("figures"))
    args = ap.parse_args(argv)
    figures = args.figure or (list(FIGURES) if args.tracks else [f for f in FIGURES if f != "trajectories"])
    if args.results is None and set(figures) - {"trajectories"}:
        ap.error("RESULTS_DIR is required for these figures")
    try:
        for path in render(args.results, figures, args.out, args.tracks):
            print(path)
    except (SchemaError, ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
