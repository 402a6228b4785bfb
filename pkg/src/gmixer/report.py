"""Render evaluation reports to a delimited table and comparison figures.

Takes one or more eval-report JSON files (as written by a pipeline run)
and emits `metrics.csv` plus a grouped bar chart `metrics.png` so ablation
sweeps can be compared at a glance.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load_report(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    if "per_k" not in report:
        raise ValueError(f"{path} does not look like an eval report (no per_k table)")
    return report


def write_csv(reports: dict[str, dict], out_path) -> None:
    """One row per (run, metric); stable ordering for diff-ability."""
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "metric", "value", "n_queries"])
        for name in sorted(reports):
            rep = reports[name]
            for metric in sorted(rep["per_k"]):
                writer.writerow([name, metric, f"{rep['per_k'][metric]:.6f}", rep["n_queries"]])


def plot_metrics(reports: dict[str, dict], out_path) -> None:
    """Grouped bar chart: metrics on the x axis, one bar series per run."""
    metric_names = sorted({m for rep in reports.values() for m in rep["per_k"]})
    runs = sorted(reports)
    width = 0.8 / max(1, len(runs))

    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(metric_names)), 4.5))
    for i, run in enumerate(runs):
        values = [reports[run]["per_k"].get(m, 0.0) for m in metric_names]
        offsets = [j + i * width for j in range(len(metric_names))]
        ax.bar(offsets, values, width=width, label=run)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(metric_names))])
    ax.set_xticklabels(metric_names, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render(report_paths: list, out_dir) -> tuple[Path, Path]:
    """Build metrics.csv and metrics.png under out_dir; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = {Path(p).stem: load_report(p) for p in report_paths}
    csv_path = out / "metrics.csv"
    png_path = out / "metrics.png"
    write_csv(reports, csv_path)
    plot_metrics(reports, png_path)
    return csv_path, png_path
