import csv
import json

import numpy as np
import pytest

from timbreshap.explain import AttributionMatrix
from timbreshap.report import (
    canonical_json,
    emit_report,
    importance_heatmap_svg,
    label_importance_matrix,
)
from timbreshap.trq import TrqReport, compute_trq_report


def sample_attr(n=8, d_s=2, d_c=5, n_labels=4, seed=0):
    rng = np.random.default_rng(seed)
    return AttributionMatrix(
        values=rng.standard_normal((n, d_s + d_c)),
        target_class=np.arange(n, dtype=np.int64) % n_labels,
        d_s=d_s,
        d_c=d_c,
    )


def test_emit_report_writes_requested_formats(tmp_path):
    attr = sample_attr()
    report = compute_trq_report(attr, batch_size=4)
    written = emit_report(report, attr, ("json", "csv", "svg"), tmp_path)
    names = {p.name for p in written}
    assert names == {
        "trq_report.json",
        "per_dimension.csv",
        "batch_scores.csv",
        "importance_bar.svg",
        "importance_heatmap.svg",
        "batch_sequence.svg",
        "batch_box.svg",
    }


def test_report_json_round_trip(tmp_path):
    attr = sample_attr()
    report = compute_trq_report(attr, batch_size=4)
    emit_report(report, attr, ("json",), tmp_path)
    parsed = TrqReport.from_dict(
        json.loads((tmp_path / "trq_report.json").read_text(encoding="utf-8"))
    )
    assert parsed.to_dict() == report.to_dict()


def test_two_batch_report_shapes(tmp_path):
    attr = sample_attr(n=8)
    report = compute_trq_report(attr, batch_size=4)
    assert len(report.batch_scores) == 2
    emit_report(report, attr, ("csv", "svg"), tmp_path)
    with open(tmp_path / "batch_scores.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3  # header + 2 batches
    line_plot = (tmp_path / "batch_sequence.svg").read_text()
    assert line_plot.count("<circle") == 2


def test_per_dimension_csv_contents(tmp_path):
    attr = sample_attr(d_s=2, d_c=5)
    report = compute_trq_report(attr, batch_size=4)
    emit_report(report, attr, ("csv",), tmp_path)
    with open(tmp_path / "per_dimension.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["dim", "segment", "mean_abs_attribution"]
    assert len(rows) == 1 + 7
    segments = [row[1] for row in rows[1:]]
    assert segments == ["speaker"] * 2 + ["content"] * 5
    values = np.array([float(row[2]) for row in rows[1:]])
    assert np.allclose(values, report.per_dim_mean_abs, rtol=1e-15)


def test_label_importance_matrix_dimensions_and_values():
    attr = sample_attr(n=12, d_s=3, d_c=4, n_labels=5)
    matrix = label_importance_matrix(attr)
    assert matrix.shape == (5, 7)
    # independent recomputation per label
    for lab in range(5):
        rows = attr.values[attr.target_class == lab]
        expected = np.abs(rows).mean(axis=0) if len(rows) else np.zeros(7)
        assert np.allclose(matrix[lab], expected, atol=1e-15)


def test_heatmap_svg_has_cell_per_label_dim():
    attr = sample_attr(n=12, d_s=3, d_c=4, n_labels=5)
    svg = importance_heatmap_svg(attr)
    # one background rect + 5 * 7 cells
    assert svg.count("<rect") == 1 + 5 * 7


def test_emit_report_rejects_unknown_format(tmp_path):
    attr = sample_attr()
    report = compute_trq_report(attr, batch_size=4)
    with pytest.raises(ValueError, match="unknown report format"):
        emit_report(report, attr, ("pdf",), tmp_path)


def test_emission_is_byte_stable(tmp_path):
    attr = sample_attr()
    report = compute_trq_report(attr, batch_size=4)
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    emit_report(report, attr, ("json", "csv", "svg"), a_dir)
    emit_report(report, attr, ("json", "csv", "svg"), b_dir)
    for file_a in sorted(a_dir.iterdir()):
        file_b = b_dir / file_a.name
        assert file_a.read_bytes() == file_b.read_bytes()


def test_canonical_json_stable_key_order():
    assert canonical_json({"b": 1, "a": [1.5, 2]}) == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'
