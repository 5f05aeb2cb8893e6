"""Machine-readable report emission: JSON, CSV, and dependency-free SVG plots.

Four plot types accompany each run: a content-vs-speaker importance bar
chart, a per-speaker-label importance heatmap, a batch-sequence line plot,
and a box plot of batch scores. The SVG writer is deliberately minimal and
embeds no timestamps, so reruns reproduce artifacts byte for byte.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .explain import AttributionMatrix
from .trq import TrqReport

REPORT_FORMATS = ("json", "csv", "svg")


def canonical_json(obj) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(value: float) -> str:
    return repr(float(value))


class _Svg:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]

    def rect(self, x, y, w, h, fill, stroke="none"):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0):
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, points, stroke="steelblue", width=1.5):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def circle(self, x, y, r, fill="steelblue"):
        self.parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{fill}"/>')

    def text(self, x, y, content, size=11, anchor="start"):
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" '
            f'font-size="{size}" text-anchor="{anchor}">{content}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _heat_color(value: float) -> str:
    # white -> dark blue ramp
    v = min(max(value, 0.0), 1.0)
    r = int(round(255 * (1 - 0.85 * v)))
    g = int(round(255 * (1 - 0.70 * v)))
    b = 255
    return f"rgb({r},{g},{b})"


def importance_bar_svg(report: TrqReport) -> str:
    """Two bars: mean |attribution| of the content and speaker segments."""
    per_dim = report.per_dim_mean_abs
    speaker = float(per_dim[: report.d_s].mean())
    content = float(per_dim[report.d_s :].mean())
    svg = _Svg(360, 260)
    top, bottom, base_w = 40, 220, 90
    peak = max(speaker, content, 1e-30)
    for i, (label, value, color) in enumerate(
        [("speaker", speaker, "indianred"), ("content", content, "steelblue")]
    ):
        h = (bottom - top) * value / peak
        x = 70 + i * 140
        svg.rect(x, bottom - h, base_w, h, color)
        svg.text(x + base_w / 2, bottom + 18, label, anchor="middle")
        svg.text(x + base_w / 2, bottom - h - 6, f"{value:.3e}", size=10, anchor="middle")
    svg.text(180, 20, "segment mean |attribution|", anchor="middle")
    svg.line(50, bottom, 330, bottom)
    return svg.render()


def label_importance_matrix(attr: AttributionMatrix) -> np.ndarray:
    """Per-speaker-label mean |attribution|, shape (n_labels, d_s + d_c)."""
    labels = np.asarray(attr.target_class)
    n_labels = int(labels.max()) + 1
    out = np.zeros((n_labels, attr.values.shape[1]))
    for lab in range(n_labels):
        rows = attr.values[labels == lab]
        if len(rows):
            out[lab] = np.abs(rows).mean(axis=0)
    return out


def importance_heatmap_svg(attr: AttributionMatrix) -> str:
    """Speaker-label rows against feature dimensions, normalized per plot."""
    matrix = label_importance_matrix(attr)
    n_labels, n_dims = matrix.shape
    left, top = 60, 40
    cell_w = max(2.0, min(12.0, 720.0 / n_dims))
    cell_h = max(4.0, min(16.0, 400.0 / n_labels))
    width = int(left + n_dims * cell_w + 20)
    height = int(top + n_labels * cell_h + 40)
    svg = _Svg(width, height)
    peak = matrix.max() or 1.0
    for i in range(n_labels):
        for j in range(n_dims):
            svg.rect(
                left + j * cell_w, top + i * cell_h, cell_w, cell_h,
                _heat_color(matrix[i, j] / peak),
            )
    boundary_x = left + attr.d_s * cell_w
    svg.line(boundary_x, top, boundary_x, top + n_labels * cell_h, stroke="black", width=1.5)
    svg.text(left, 20, "per-label mean |attribution| (speaker | content)")
    svg.text(left - 8, top + 10, "label", size=9, anchor="end")
    return svg.render()


def batch_sequence_svg(report: TrqReport) -> str:
    """Batch-order line plot of per-batch mean scores."""
    scores = report.batch_scores
    svg = _Svg(480, 260)
    left, right, top, bottom = 60, 450, 40, 210
    lo, hi = float(scores.min()), float(scores.max())
    if hi == lo:
        hi = lo + 1.0
    xs = (
        np.linspace(left, right, len(scores))
        if len(scores) > 1
        else np.array([(left + right) / 2])
    )
    ys = bottom - (scores - lo) / (hi - lo) * (bottom - top)
    points = list(zip(xs, ys))
    if len(points) > 1:
        svg.polyline(points)
    for x, y in points:
        svg.circle(x, y, 3)
    svg.line(left, bottom, right, bottom)
    svg.line(left, top, left, bottom)
    svg.text(left, 20, "mean score per batch")
    svg.text(left - 6, bottom + 4, f"{lo:.4f}", size=9, anchor="end")
    svg.text(left - 6, top + 4, f"{hi:.4f}", size=9, anchor="end")
    return svg.render()


def batch_box_svg(report: TrqReport) -> str:
    """Box plot (quartiles and extrema) of per-batch mean scores."""
    scores = np.sort(report.batch_scores)
    q1, med, q3 = (float(np.quantile(scores, q)) for q in (0.25, 0.5, 0.75))
    lo, hi = float(scores[0]), float(scores[-1])
    svg = _Svg(260, 300)
    top, bottom, cx, half_w = 40, 260, 130, 40
    span = (hi - lo) or 1.0

    def y_of(v: float) -> float:
        return bottom - (v - lo) / span * (bottom - top)

    svg.line(cx, y_of(lo), cx, y_of(q1))
    svg.line(cx, y_of(q3), cx, y_of(hi))
    svg.line(cx - 20, y_of(lo), cx + 20, y_of(lo))
    svg.line(cx - 20, y_of(hi), cx + 20, y_of(hi))
    svg.rect(cx - half_w, y_of(q3), 2 * half_w, max(y_of(q1) - y_of(q3), 0.5),
             "lightsteelblue", stroke="black")
    svg.line(cx - half_w, y_of(med), cx + half_w, y_of(med), stroke="black", width=2.0)
    svg.text(cx, 20, "batch score spread", anchor="middle")
    svg.text(cx + half_w + 6, y_of(med) + 4, f"{med:.4f}", size=9)
    return svg.render()


def emit_report(
    report: TrqReport,
    attr: AttributionMatrix,
    formats: tuple[str, ...],
    out_dir: Path | str,
) -> list[Path]:
    """Write the requested report artifacts and return their paths."""
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise ValueError(f"unknown report format '{fmt}'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "json" in formats:
        path = out_dir / "trq_report.json"
        path.write_text(canonical_json(report.to_dict()), encoding="utf-8")
        written.append(path)

    if "csv" in formats:
        path = out_dir / "per_dimension.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dim", "segment", "mean_abs_attribution"])
            for j, value in enumerate(report.per_dim_mean_abs):
                segment = "speaker" if j < report.d_s else "content"
                writer.writerow([j, segment, _fmt(value)])
        written.append(path)
        path = out_dir / "batch_scores.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["batch", "mean_score"])
            for i, value in enumerate(report.batch_scores):
                writer.writerow([i, _fmt(value)])
        written.append(path)

    if "svg" in formats:
        for name, text in (
            ("importance_bar.svg", importance_bar_svg(report)),
            ("importance_heatmap.svg", importance_heatmap_svg(attr)),
            ("batch_sequence.svg", batch_sequence_svg(report)),
            ("batch_box.svg", batch_box_svg(report)),
        ):
            path = out_dir / name
            path.write_text(text, encoding="utf-8")
            written.append(path)

    return written
