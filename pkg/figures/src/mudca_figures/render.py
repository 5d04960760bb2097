"""Render the simulator's figure families from its CSV/summary outputs.

Six kinds, grouped by input shape:

  sweep tables (sweep.csv schema, one file per policy in the input dir):
    throughput_vs_users   sum rate vs user count        (axis = users)
    rate_vs_antennas      sum/admitted rate vs antennas (axis = antennas)
    delay_vs_T            mean delay vs decision period (axis = period)
    rate_vs_param         rate vs any swept axis

  per-run traces:
    delay_timeseries      running-average head-of-line delay per user,
                          from a run directory's queues.csv
    per_user_delay        final per-user time-average delay bars, one bar
                          group per run directory containing summary.txt

Input files must match the simulator's schemas; a missing column raises
FigureError naming it, and nothing is written on failure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGURE_KINDS = ("throughput_vs_users", "rate_vs_antennas", "rate_vs_param",
                "delay_timeseries", "delay_vs_T", "per_user_delay")

_SWEEP_COLUMNS = ("policy", "axis", "value", "sum_rate", "admitted_rate",
                  "mean_delay")


class FigureError(Exception):
    """Bad figure spec or input files that do not match the schemas."""


@dataclass
class FigureSpec:
    kind: str
    input_dir: Path
    output_path: Path
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {', '.join(FIGURE_KINDS)}")
        self.input_dir = Path(self.input_dir)
        self.output_path = Path(self.output_path)


def _read_rows(path: Path, required: Sequence[str]) -> List[Dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    raise FigureError(f"missing column '{column}' in {path}")
            rows = list(reader)
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise FigureError(f"no data rows in {path}")
    return rows


def _sweep_files(spec: FigureSpec) -> List[Path]:
    if spec.input_dir.is_file():
        return [spec.input_dir]
    files = sorted(spec.input_dir.glob("*.csv"))
    if not files:
        raise FigureError(f"no CSV files in {spec.input_dir}")
    return files


def _load_sweeps(spec: FigureSpec, expected_axis: Optional[str],
                 y_field: str) -> Dict[str, List[Tuple[float, float]]]:
    """One labelled series per sweep file; y falls back from admitted_rate
    to sum_rate when the admission column is empty."""
    series: Dict[str, List[Tuple[float, float]]] = {}
    for path in _sweep_files(spec):
        rows = _read_rows(path, _SWEEP_COLUMNS)
        axis = rows[0]["axis"]
        if expected_axis is not None and axis != expected_axis:
            raise FigureError(
                f"{path} sweeps axis '{axis}', expected '{expected_axis}'")
        label = rows[0]["policy"] or path.stem
        points = []
        for row in rows:
            y_raw = row[y_field]
            if y_field == "admitted_rate" and not y_raw:
                y_raw = row["sum_rate"]
            points.append((float(row["value"]), float(y_raw)))
        series[label] = sorted(points)
    return series


def _plot_series(series, xlabel, ylabel, title, output_path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, points in series.items():
        xs, ys = zip(*points)
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.4)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(output_path, dpi=120)
    plt.close(fig)


def _render_sweep(spec: FigureSpec, expected_axis, y_field, xlabel, ylabel):
    series = _load_sweeps(spec, expected_axis, y_field)
    _plot_series(series, xlabel, ylabel, spec.title, spec.output_path)


def _render_delay_timeseries(spec: FigureSpec):
    path = spec.input_dir / "queues.csv" if spec.input_dir.is_dir() \
        else spec.input_dir
    rows = _read_rows(path, ("slot",))
    hol_columns = [c for c in rows[0] if c.startswith("hol_")]
    if not hol_columns:
        raise FigureError(f"missing column 'hol_*' in {path}")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    count = len(rows)
    for column in hol_columns:
        running, acc = [], 0.0
        for i, row in enumerate(rows):
            acc += float(row[column])
            running.append(acc / (i + 1))
        ax.plot(range(count), running, label=f"user {column[4:]}")
    ax.set_xlabel("slot")
    ax.set_ylabel("time-average head-of-line delay (slots)")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)


def _read_summary(path: Path) -> Dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}") from None
    pairs = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            pairs[key] = value
    return pairs


def _render_per_user_delay(spec: FigureSpec):
    if spec.input_dir.is_file():
        summaries = [spec.input_dir]
    else:
        summaries = sorted(spec.input_dir.glob("*/summary.txt"))
        direct = spec.input_dir / "summary.txt"
        if direct.exists():
            summaries.insert(0, direct)
    if not summaries:
        raise FigureError(f"no summary.txt files under {spec.input_dir}")

    runs = []
    for path in summaries:
        pairs = _read_summary(path)
        delays = {int(k.rsplit("_", 1)[1]): float(v)
                  for k, v in pairs.items() if k.startswith("time_avg_delay_")}
        if not delays:
            raise FigureError(f"missing column 'time_avg_delay_*' in {path}")
        label = pairs.get("policy", path.parent.name)
        runs.append((label, delays))

    user_ids = sorted(runs[0][1])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    width = 0.8 / len(runs)
    for idx, (label, delays) in enumerate(runs):
        xs = [i + idx * width for i in range(len(user_ids))]
        ax.bar(xs, [delays.get(uid, 0.0) for uid in user_ids],
               width=width, label=label)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(user_ids))])
    ax.set_xticklabels([f"user {uid}" for uid in user_ids])
    ax.set_ylabel("time-average delay (slots)")
    if spec.title:
        ax.set_title(spec.title)
    if len(runs) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path. Inputs are never
    modified, and no file is written when validation fails."""
    if spec.kind == "throughput_vs_users":
        _render_sweep(spec, "users", "sum_rate", "number of users",
                      "sum rate (bit/s/Hz)")
    elif spec.kind == "rate_vs_antennas":
        _render_sweep(spec, "antennas", "admitted_rate", "BS antennas",
                      "sum rate (bit/s/Hz)")
    elif spec.kind == "rate_vs_param":
        _render_sweep(spec, None, "admitted_rate", "swept parameter",
                      "sum rate (bit/s/Hz)")
    elif spec.kind == "delay_vs_T":
        _render_sweep(spec, "period", "mean_delay", "decision period (frames)",
                      "mean time-average delay (slots)")
    elif spec.kind == "delay_timeseries":
        _render_delay_timeseries(spec)
    else:
        _render_per_user_delay(spec)
    return spec.output_path
