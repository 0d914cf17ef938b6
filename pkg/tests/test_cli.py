import json
import xml.dom.minidom

import pytest
import yaml

from coarsehx.cli import main
from coarsehx.config import validate_config
from coarsehx.limit import DirectSystem, limit_report
from coarsehx.report import bars_from_table, emit_barcode_plot


def write(tmp_path, cfg, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def test_validate_ok_and_diagnostics(tmp_path, capsys):
    good = write(tmp_path, {"generator": {"kind": "path", "length": 9}})
    assert main(["validate", "--config", good]) == 0
    bad = write(tmp_path, {"generator": {"kind": "path", "length": 9}, "edge_list": "e.txt",
                           "degrees": [], "horizon": 2, "window": 2}, "bad.yaml")
    assert main(["validate", "--config", bad]) == 2
    out = capsys.readouterr().out
    assert "degrees nonempty" in out and "exactly one source" in out and "horizon" in out


def test_validate_unreadable(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_validate_config_all_at_once():
    _, diags = validate_config({"degrees": [], "horizon": 1, "bogus": 1})
    assert len(diags) >= 4


def test_run_bundle_and_determinism(tmp_path):
    cfg = write(tmp_path, {"generator": {"kind": "grid", "n": 2, "side": 17},
                           "subset": {"type": "column"}, "degrees": [0, 1, 2],
                           "oracle": {"enabled": False}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert {"manifest.json", "asdim.json", "limit.json", "separation.json", "scenario.json",
            "barcode.svg", "homology.json"} <= set(files)
    for name in files:
        if name != "manifest.json":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
    man = json.loads((a / "manifest.json").read_text())
    assert man["status"] == "ok" and "timings_seconds" in man and man["version"]
    h = man["config_hash"]
    for name in files:
        if name.endswith(".json"):
            assert json.loads((a / name).read_text())["config_hash"] == h
    asd = json.loads((a / "asdim.json").read_text())
    assert asd["lower_bound"] == 2


def test_constraint_failure_exit_2(tmp_path):
    cfg = write(tmp_path, {"generator": {"kind": "path", "length": 5},
                           "subset": {"type": "list", "ids": [0, 1, 2, 3, 4]}})
    out = tmp_path / "o"
    assert main(["separate", "--config", cfg, "--out", str(out)]) == 2
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"


def test_horizon_below_window_flag(tmp_path):
    cfg = write(tmp_path, {"generator": {"kind": "path", "length": 9}})
    assert main(["limit", "--config", cfg, "--horizon", "1", "--out", str(tmp_path / "o")]) == 2


def test_oracle_and_limit_from_dump(tmp_path):
    cfg = write(tmp_path, {"generator": {"kind": "cycle", "length": 8}, "degrees": [0, 1],
                           "oracle": {"enabled": True, "lambdas": [1, 2]},
                           "allow_window_cap_override": True})
    o = tmp_path / "o"
    assert main(["oracle", "--config", cfg, "--out", str(o), "--oracle-budget", "12"]) == 0
    assert json.loads((o / "oracle.json").read_text())["all_equal"] is True
    assert main(["homology", "--config", cfg, "--out", str(o)]) == 0
    assert main(["limit", "--config", cfg, "--out", str(tmp_path / "l"),
                 "--from", str(o / "homology.json")]) == 0
    assert main(["limit", "--config", cfg, "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "l" / "limit.json").read_bytes() == (tmp_path / "m" / "limit.json").read_bytes()
    assert main(["oracle", "--config", cfg, "--out", str(o), "--oracle-budget", "4"]) == 2


def test_generate_and_edge_list_source(tmp_path):
    cfg = write(tmp_path, {"generator": {"kind": "cycle", "length": 10}})
    o = tmp_path / "g"
    assert main(["generate", "--config", cfg, "--out", str(o)]) == 0
    cfg2 = write(tmp_path, {"edge_list": str(o / "space.edges"), "degrees": [1],
                            "allow_window_cap_override": True}, "e.yaml")
    assert main(["homology", "--config", cfg2, "--out", str(tmp_path / "h")]) == 0
    ranks = json.loads((tmp_path / "h" / "homology.json").read_text())["ranks"]["1"]
    assert ranks[0] == 1


def test_barcode_bars():
    const = DirectSystem.from_matrices([1] * 4, [[[1]]] * 3)
    assert bars_from_table(limit_report(const).table) == [(1, None)]
    dying = DirectSystem.from_matrices([1, 1, 1], [[[1]], [[0]]])
    assert bars_from_table(limit_report(dying).table) == [(1, 3), (3, None)]
    two = DirectSystem.from_matrices([2, 1], [[[1, 0]]])
    assert sorted(bars_from_table(limit_report(two).table), key=str) == [(1, 2), (1, None)]


def test_barcode_svg_is_valid(tmp_path):
    reps = {0: limit_report(DirectSystem.from_matrices([0, 0], [[]])),
            1: limit_report(DirectSystem.from_matrices([1] * 4, [[[1]]] * 3))}
    p = emit_barcode_plot(reps, tmp_path / "b.svg")
    doc = xml.dom.minidom.parse(str(p))
    assert len(doc.getElementsByTagName("rect")) == 1
    assert len(doc.getElementsByTagName("polygon")) == 1
    assert "(empty)" in p.read_text()
