"""Report serialization (JSON / flat CSV) and dependency-free SVG plots."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np

from .pipeline import ExperimentReport

CSV_FIELDS = ["dataset", "method", "fold", "seed", "tp", "fn", "fp", "tn", "f_measure", "g_mean", "f_plus_g"]
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_csv(report: ExperimentReport) -> str:
    rows = []
    for c in report.cells:
        d = c.to_dict()
        rows.append([d[k] if not isinstance(d[k], float) else repr(d[k]) for k in CSV_FIELDS])
    return csv_text(CSV_FIELDS, rows)


def emit_report(report: ExperimentReport, out_dir, formats=("json", "csv")) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    if "json" in formats:
        p = out_dir / "results.json"
        atomic_write_text(p, report_json(report))
        written.append(p)
    if "csv" in formats:
        p = out_dir / "results.csv"
        atomic_write_text(p, report_csv(report))
        written.append(p)
    return written


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def scatter_svg(X, labels, origin=None, title: str = "", width: int = 480, height: int = 400) -> str:
    """Class-coloured 2-D scatter; synthetic rows (origin == 1) drawn as squares.

    Every data row becomes exactly one element carrying ``class="pt"``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError("scatter plot needs 2-D points")
    labels = np.asarray(labels)
    origin = np.zeros(len(X), dtype=int) if origin is None else np.asarray(origin)
    m = 30
    sx = _scale(X[:, 0].min(), X[:, 0].max(), m, width - m)
    sy = _scale(X[:, 1].min(), X[:, 1].max(), height - m, m)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>']
    for (x, y), lab, o in zip(X, labels, origin):
        # soft labels arrive as p(positive); colour by the nearer class
        color = PALETTE[1] if float(lab) >= 0.5 else PALETTE[0]
        cx, cy = sx(x), sy(y)
        if o == 1:
            parts.append(f'<rect class="pt synthetic" x="{cx - 2.5:.2f}" y="{cy - 2.5:.2f}" width="5" height="5" '
                         f'fill="none" stroke="{color}"/>')
        else:
            parts.append(f'<circle class="pt real" cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="{color}" '
                         f'fill-opacity="0.7"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_chart_svg(xs, series: dict[str, list[float]], title: str = "", xlabel: str = "IR",
                   ylabel: str = "", width: int = 520, height: int = 380) -> str:
    """Metric-vs-x line chart with one categorical x-tick per x value."""
    xs = list(xs)
    m_l, m_r, m_t, m_b = 55, 120, 30, 45
    ys = [v for vals in series.values() for v in vals]
    lo, hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    pad = 0.05 * (hi - lo or 1.0)
    sy = _scale(lo - pad, hi + pad, height - m_b, m_t)
    step = (width - m_l - m_r) / max(len(xs) - 1, 1)
    px = [m_l + i * step for i in range(len(xs))]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
             f'<line x1="{m_l}" y1="{height - m_b}" x2="{width - m_r}" y2="{height - m_b}" stroke="black"/>',
             f'<line x1="{m_l}" y1="{m_t}" x2="{m_l}" y2="{height - m_b}" stroke="black"/>']
    for x, label in zip(px, xs):
        parts.append(f'<g class="xtick"><line x1="{x:.1f}" y1="{height - m_b}" x2="{x:.1f}" '
                     f'y2="{height - m_b + 5}" stroke="black"/><text x="{x:.1f}" y="{height - m_b + 18}" '
                     f'text-anchor="middle" font-size="11">{escape(str(label))}</text></g>')
    for v in np.linspace(lo, hi, 5):
        parts.append(f'<text x="{m_l - 6}" y="{sy(v) + 4:.1f}" text-anchor="end" font-size="10">{v:.3f}</text>')
    parts.append(f'<text x="{(m_l + width - m_r) / 2:.1f}" y="{height - 8}" text-anchor="middle" '
                 f'font-size="12">{escape(xlabel)}</text>')
    parts.append(f'<text x="14" y="{height / 2:.1f}" transform="rotate(-90 14 {height / 2:.1f})" '
                 f'text-anchor="middle" font-size="12">{escape(ylabel)}</text>')
    for i, (name, vals) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{x:.1f},{sy(v):.1f}" for x, v in zip(px, vals))
        parts.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = m_t + 16 * i
        parts.append(f'<text x="{width - m_r + 10}" y="{ly + 4}" font-size="11" fill="{color}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def metric_by_dataset_svgs(report: ExperimentReport, metric: str = "g_mean") -> str:
    """One line per method across the report's datasets (x-ticks are dataset names)."""
    series = {m: [float(report.values(ds, m, metric).mean()) for ds in report.datasets] for m in report.methods}
    return line_chart_svg(report.datasets, series, title=f"mean {metric}", xlabel="dataset", ylabel=metric)
