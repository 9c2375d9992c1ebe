import csv
import json
import shutil
from pathlib import Path

import pytest

from wsos.cli import main

from rawdata import make_remote

FIXTURES = Path(__file__).parent / "fixtures"


def test_unknown_flag_is_usage_error(capsys):
    assert main(["bench", "--frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand(capsys):
    assert main([]) == 2


def test_bench_tiny_config(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["bench", "--config", str(FIXTURES / "tiny.json"), "--out-dir", str(out), "--quiet"]) == 0
    for name in ("results.json", "results.csv", "resolved-config.json", "g_mean_by_dataset.svg"):
        assert (out / name).exists()
    resolved = json.loads((out / "resolved-config.json").read_text())
    assert resolved["pipeline"]["bef"]["K"] == 2
    assert resolved["pipeline"]["gss"]["p_delta"] == 0.5
    doc = json.loads((out / "results.json").read_text())
    assert len(doc["cells"]) == 2 * 3 * 2


def test_bad_config_names_field(tmp_path, capsys):
    rc = main(["bench", "--config", str(FIXTURES / "tiny.json"), "--set", "pipeline.bef.K=0",
               "--out-dir", str(tmp_path)])
    assert rc == 1
    assert "pipeline.bef.K" in capsys.readouterr().err


def test_gen_train_eval_resample_plot(tmp_path, capsys):
    data = tmp_path / "d.csv"
    assert main(["gen-data", "--dims", "3", "--n-negative", "80", "--ir", "8", "--seed", "1", "--out", str(data)]) == 0
    assert (tmp_path / "d.csv.resolved.json").exists()
    with open(data) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 90 and sum(r["label"] == "1" for r in rows) == 10

    model = tmp_path / "m.json"
    small = ["--set", "pipeline.train.epochs=20", "--set", "pipeline.csnca.max_iters=10"]
    assert main(["train", "--data", str(data), "--out", str(model), *small]) == 0
    capsys.readouterr()
    assert main(["eval", "--model", str(model), "--data", str(data)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert set(res["metrics"]) == {"f_measure", "g_mean", "f_plus_g"}

    soft = tmp_path / "soft.csv"
    assert main(["resample", "--data", str(data), "--out", str(soft), "--set", "pipeline.csnca.d=2", *small]) == 0
    with open(soft) as fh:
        srows = list(csv.DictReader(fh))
    assert list(srows[0]) == ["f1", "f2", "p_neg", "p_pos", "origin"]
    assert all(float(r["p_pos"]) > 0.5 for r in srows if r["origin"] == "synthetic")

    svg = tmp_path / "s.svg"
    assert main(["plot", "--data", str(soft), "--soft", "--out", str(svg)]) == 0
    assert svg.read_text().count('class="pt') == len(srows)


def test_plot_results_by_ir(tmp_path):
    cfg = json.loads((FIXTURES / "tiny.json").read_text())
    cfg["datasets"] = [{"name": f"ir{ir}", "synthetic": {"dims": 2, "n_negative": 400, "imbalance_ratio": ir}}
                       for ir in (10, 30, 50, 100)]
    cfg["methods"] = ["smote_nn"]
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    out = tmp_path / "r"
    assert main(["bench", "--config", str(tmp_path / "c.json"), "--out-dir", str(out), "--quiet"]) == 0
    svg = tmp_path / "ir.svg"
    assert main(["plot", "--results", str(out / "results.json"), "--out", str(svg)]) == 0
    assert svg.read_text().count('<g class="xtick"') == 4


def test_fetch_and_prep_commands(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("IMB_DATA_DIR", str(tmp_path / "data"))
    man = make_remote(tmp_path)
    assert main(["fetch", "abalone", "--manifest", str(man)]) == 0
    shutil.rmtree(tmp_path / "remote")  # second run must be served from the cache
    assert main(["fetch", "abalone", "--manifest", str(man)]) == 0
    out = tmp_path / "ab.csv"
    assert main(["prep", "abalone", "--ir", "50", "--manifest", str(man), "--out", str(out)]) == 0
    with open(out) as fh:
        labels = [r["label"] for r in csv.DictReader(fh)]
    assert labels.count("0") == 2000 and labels.count("1") == 40

    cached = tmp_path / "data" / "raw" / "abalone" / "abalone.data"
    cached.write_text("corrupt\n")
    capsys.readouterr()
    assert main(["fetch", "abalone", "--manifest", str(man)]) == 1
    assert "re-run fetch with --force" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    assert main(["eval", "--model", str(tmp_path / "missing.json"), "--data", str(tmp_path / "x.csv")]) == 1
    assert "error" in capsys.readouterr().err
