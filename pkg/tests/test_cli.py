import csv
import json

import numpy as np
import pytest

from wabsim import scenario_path
from wabsim.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, main
from wabsim.summary import load_summary


@pytest.fixture(scope="module")
def vehicular_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("veh")
    assert main(["run", str(scenario_path("vehicular")), "--out", str(out)]) == EXIT_OK
    return out


def test_validate_shipped(capsys):
    for name in ("vehicular", "o2i"):
        assert main(["validate", str(scenario_path(name))]) == EXIT_OK
    assert json.loads(capsys.readouterr().out.split("\n}\n")[0] + "}")["violations"] == []


def test_validate_mt_under_wab_gnb(tmp_path, vehicular_dict, capsys):
    d = vehicular_dict
    d["nodes"] += [
        {"id": "wab2-mt", "role": "WabMt", "chassis": "wab2", "donor": "wab1-gnb"},
        {"id": "wab2-gnb", "role": "WabGnb", "chassis": "wab2"},
    ]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    assert main(["validate", str(p)]) == EXIT_FAIL
    assert "DepthExceeded" in capsys.readouterr().out


def test_malformed_json_names_line(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{\n "name": "x",\n "duration_s": ,\n}')
    assert main(["validate", str(p)]) == EXIT_IO
    assert "line 3" in capsys.readouterr().err


def test_bad_field_is_named(tmp_path, vehicular_dict, capsys):
    vehicular_dict["nodes"][0]["role"] = "Satellite"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(vehicular_dict))
    assert main(["validate", str(p)]) == EXIT_IO
    assert "nodes[0].role" in capsys.readouterr().err


def test_run_writes_outputs(vehicular_run):
    names = {p.name for p in vehicular_run.iterdir()}
    assert {"records.csv", "events.jsonl", "summary.json"} <= names
    for line in (vehicular_run / "events.jsonl").read_text().splitlines()[:20]:
        json.loads(line)


def test_summary_matches_csv(vehicular_run):
    s = load_summary(vehicular_run)
    with open(vehicular_run / "records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    dl = np.array([float(r["e2e_dl"]) for r in rows])
    ul = np.array([float(r["e2e_ul"]) for r in rows])
    assert s.n_records == len(rows)
    assert s.mean_dl_bps == pytest.approx(dl.mean(), rel=1e-12)
    assert s.peak_dl_bps == dl.max()
    assert s.mean_ul_bps == pytest.approx(ul.mean(), rel=1e-12)
    assert s.peak_fr2_rsrp_dbm == max(float(r["fr2_rsrp"]) for r in rows)
    ssb = [r["ssb"] for r in rows]
    assert s.ssb_switches == sum(a != b for a, b in zip(ssb, ssb[1:]))
    assert s.peak_fr2_rsrp_dbm == pytest.approx(-83, abs=2)


def test_same_seed_same_files(tmp_path):
    for sub in ("a", "b"):
        main(["run", str(scenario_path("vehicular")), "--out", str(tmp_path / sub), "--seed", "5"])
    for f in ("records.csv", "events.jsonl", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_calibrate_check_passes(vehicular_run, capsys):
    assert main(["calibrate-check", str(vehicular_run)]) == EXIT_OK
    doc = json.loads((vehicular_run / "calibration.json").read_text())
    assert doc["passed"] and len(doc["targets"]) == 6


def test_fr1_efficiency_one_fails_dl_target(tmp_path, vehicular_dict, capsys):
    vehicular_dict["radio"] = {"fr1": {"efficiency": {"dl": 1.0}}}
    p = tmp_path / "perturbed.json"
    p.write_text(json.dumps(vehicular_dict))
    out = tmp_path / "run"
    assert main(["run", str(p), "--out", str(out)]) == EXIT_OK
    assert main(["calibrate-check", str(out)]) == EXIT_FAIL
    assert "FAIL  los_mean_dl_bps" in capsys.readouterr().out


def test_o2i_table(tmp_path):
    out = tmp_path / "o2i"
    assert main(["run", str(scenario_path("o2i")), "--out", str(out), "--format", "json"]) == EXIT_OK
    s = load_summary(out)
    per_position = [r for r in s.se_table if r["system"] == "wab" and r["wab_position"] == "1"]
    assert len(per_position) == 5
    assert all(r["dl_se"] is not None and r["ul_se"] is not None for r in per_position)
    assert main(["calibrate-check", str(out)]) == EXIT_OK


def test_empty_directory(tmp_path):
    assert main(["calibrate-check", str(tmp_path)]) == EXIT_IO


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(scenario_path("vehicular")), "--out", str(blocker / "x")]) == EXIT_IO
