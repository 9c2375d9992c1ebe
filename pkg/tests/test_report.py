import csv
import io
import json
import re

import numpy as np

from wsos.pipeline import run_experiment
from wsos.report import emit_report, line_chart_svg, report_json, scatter_svg

from conftest import blobs
from test_pipeline import small_cfg


def test_emit_report_four_cells(tmp_path):
    rep = run_experiment([blobs(20, 6, seed=1)], ["smote_nn", "rus_nn"], small_cfg())
    assert len(rep.cells) == 4
    paths = emit_report(rep, tmp_path / "out")
    assert {p.name for p in paths} == {"results.json", "results.csv"}
    rows = list(csv.reader(io.StringIO((tmp_path / "out" / "results.csv").read_text())))
    assert len(rows) == 5
    doc = json.loads((tmp_path / "out" / "results.json").read_text())
    assert doc["schema_version"] == 1 and len(doc["cells"]) == 4
    assert report_json(rep) == (tmp_path / "out" / "results.json").read_text()
    assert not list((tmp_path / "out").glob("*.tmp*"))


def test_scatter_has_one_element_per_point():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 2))
    lab = np.r_[np.zeros(80), np.ones(20)]
    svg = scatter_svg(X, lab)
    assert svg.count('class="pt') == 100
    origin = np.r_[np.zeros(90), np.ones(10)]
    assert scatter_svg(X, lab, origin).count('class="pt') == 100


def test_line_chart_ticks():
    svg = line_chart_svg(["10", "30", "50", "100"], {"proposed": [0.9, 0.8, 0.7, 0.6], "smote_nn": [0.8, 0.6, 0.5, 0.4]})
    assert len(re.findall(r'<g class="xtick"', svg)) == 4
    assert svg.startswith("<svg") or svg.startswith("<?xml")
