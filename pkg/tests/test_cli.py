import json
import os

import pytest

from crashquery.cli import main
from crashquery.geo.fixture import write_fixture_dir


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixture") / "data"
    write_fixture_dir(str(path), seed=1)
    return str(path)


def _run(argv):
    try:
        main(argv)
    except SystemExit as exc:
        return exc.code or 0
    return 0


def test_query_success(data_dir, tmp_path, capsys):
    out = str(tmp_path / "out")
    code = _run(["query", "--query", "show crashes in Quincy",
                 "--data", data_dir, "--out", out])
    assert code == 0
    printed = capsys.readouterr().out
    assert "Showing Crash" in printed
    assert os.path.exists(os.path.join(out, "map.geojson"))
    assert os.path.exists(os.path.join(out, "summary.txt"))
    assert os.path.exists(os.path.join(out, "audit.jsonl"))
    doc = json.load(open(os.path.join(out, "map.geojson")))
    assert any(f["properties"]["role"] == "primary" for f in doc["features"])


def test_query_ranking_table(data_dir, tmp_path, capsys):
    out = str(tmp_path / "out")
    code = _run(["query", "--query", "top 5 schools by pedestrian crashes within 500m in Boston",
                 "--data", data_dir, "--out", out, "--format", "csv"])
    assert code == 0
    table = open(os.path.join(out, "table.csv")).read().strip().splitlines()
    assert table[0] == "rank,id,name,crash_count"
    assert len(table) == 6
    assert "repair:" in capsys.readouterr().out


def test_query_html_viewer(data_dir, tmp_path):
    out = str(tmp_path / "out")
    code = _run(["query", "--query", "show crashes in Quincy",
                 "--data", data_dir, "--out", out, "--format", "html"])
    assert code == 0
    assert os.path.exists(os.path.join(out, "map.html"))


def test_interpretation_failure_exit_2(data_dir, tmp_path):
    code = _run(["query", "--query", "purchase me a sandwich",
                 "--data", data_dir, "--out", str(tmp_path / "out")])
    assert code == 2


def test_repair_rejection_exit_3(data_dir, tmp_path):
    code = _run(["query", "--query", "show crashes in Atlantis",
                 "--data", data_dir, "--out", str(tmp_path / "out")])
    assert code == 3


def test_ambiguous_anchor_exit_5(data_dir, tmp_path, capsys):
    code = _run(["query", "--query", "show crashes near Main School",
                 "--data", data_dir, "--out", str(tmp_path / "out")])
    assert code == 5
    printed = capsys.readouterr().out
    assert printed.count("Main School") >= 2
    assert "--pick-anchor" in printed


def test_pick_anchor_resolves(data_dir, tmp_path, capsys):
    code = _run(["query", "--query", "show crashes near Main School",
                 "--data", data_dir, "--out", str(tmp_path / "out"), "--pick-anchor", "1"])
    assert code == 0


def test_execution_error_exit_4(data_dir, tmp_path):
    # dataset directory without the Crash layer: executor error, not silence
    import shutil

    partial = tmp_path / "partial"
    shutil.copytree(data_dir, partial)
    os.remove(partial / "Crash.geojson")
    code = _run(["query", "--query", "show crashes in Quincy",
                 "--data", str(partial), "--out", str(tmp_path / "out")])
    assert code == 4


def test_missing_data_usage_error_64(tmp_path):
    code = _run(["query", "--query", "show crashes", "--out", str(tmp_path / "out")])
    assert code == 64


def test_fixture_command(tmp_path, capsys):
    out = str(tmp_path / "fx")
    code = _run(["fixture", "--out", out, "--seed", "3", "--crashes", "50"])
    assert code == 0
    assert os.path.exists(os.path.join(out, "Crash.geojson"))
    assert "Crash: 50" in capsys.readouterr().out


def test_eval_command(data_dir, tmp_path, capsys):
    report_path = str(tmp_path / "report.json")
    code = _run(["eval", "--data", data_dir, "--report", report_path])
    assert code == 0
    printed = capsys.readouterr().out
    assert "| **Overall** |" in printed
    report = json.load(open(report_path))
    assert report["totals"]["exec_success"] == 80
    assert report["totals"]["intent_complete"] == 80


def test_eval_overrides_accounting(data_dir, capsys):
    code = _run(["eval", "--data", data_dir, "--overrides"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "'value_normalization': 22" in printed
    assert "'structural': 3" in printed
