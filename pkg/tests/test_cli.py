import json

import pytest

from arznet import cli, scenario

MERGE_DOC = {
    "roads": [
        {"id": "r1", "rho_max": 180.0, "v_ref": 100.0, "gamma": 1.2, "rho0": 30.0,
         "length": 1.0, "cells": 40},
        {"id": "r2", "rho_max": 180.0, "v_ref": 100.0, "gamma": 1.2, "q_desired": 2000.0,
         "length": 1.0, "cells": 40},
        {"id": "r3", "rho_max": 90.0, "v_ref": 100.0, "gamma": 1.7, "rho0": 10.0,
         "length": 1.0, "cells": 40},
    ],
    "junctions": [
        {"kind": "merge", "in": ["r1", "r2"], "out": ["r3"], "priority": 0.5},
    ],
    "sim": {"t_end": 0.05, "cfl": 0.5},
}


@pytest.fixture
def merge_file(tmp_path):
    path = tmp_path / "merge.json"
    path.write_text(json.dumps(MERGE_DOC))
    return path


class TestScenarioParsing:
    def test_roundtrip(self, merge_file):
        sc = scenario.load(merge_file)
        again = scenario.parse(scenario.dump(sc))
        assert again == sc

    def test_duplicate_ids_rejected(self):
        doc = json.loads(json.dumps(MERGE_DOC))
        doc["roads"][1]["id"] = "r1"
        with pytest.raises(scenario.ScenarioError, match="duplicate"):
            scenario.parse(doc)

    def test_both_density_and_flux_rejected(self):
        doc = json.loads(json.dumps(MERGE_DOC))
        doc["roads"][0]["q_desired"] = 1000.0
        with pytest.raises(scenario.ScenarioError, match="exactly one"):
            scenario.parse(doc)

    def test_unknown_junction_road(self):
        doc = json.loads(json.dumps(MERGE_DOC))
        doc["junctions"][0]["in"] = ["r1", "nope"]
        with pytest.raises(scenario.ScenarioError, match="unknown road"):
            scenario.parse(doc)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        with pytest.raises(scenario.ScenarioError, match="line 2"):
            scenario.load(path)


class TestCliCommands:
    def test_solve_exit_zero(self, merge_file, capsys):
        assert cli.main(["solve", "--scenario", str(merge_file)]) == 0
        out = capsys.readouterr().out
        assert "kind: merge" in out
        assert "ratio:" in out

    def test_simulate_writes_outputs(self, merge_file, tmp_path, capsys):
        out = tmp_path / "run"
        code = cli.main(["simulate", "--scenario", str(merge_file), "--out", str(out)])
        assert code == 0
        assert (out / "fluxes.csv").exists()
        assert (out / "profiles.csv").exists()
        ledger = (out / "ledger.csv").read_text().splitlines()
        assert ledger[0].startswith("quantity,")
        assert len(ledger) == 3

    def test_capacity_drop_direct(self, merge_file, tmp_path, capsys):
        out = tmp_path / "cap"
        code = cli.main([
            "capacity-drop", "--scenario", str(merge_file),
            "--sweep", "1000,2000,3500", "--direct", "--out", str(out),
        ])
        assert code == 0
        rows = (out / "capacity_drop.csv").read_text().splitlines()
        assert rows[0].startswith("desired1,")
        assert len(rows) == 4

    def test_pareto_dump(self, merge_file, tmp_path, capsys):
        out = tmp_path / "pareto"
        code = cli.main([
            "pareto-dump", "--scenario", str(merge_file),
            "--out", str(out), "--grid", "100",
        ])
        assert code == 0
        assert (out / "feasible.csv").exists()

    def test_missing_scenario_is_exit_two(self, tmp_path, capsys):
        assert cli.main(["solve", "--scenario", str(tmp_path / "nope.json")]) == 2

    def test_capacity_drop_rejects_non_merge(self, tmp_path, capsys):
        doc = json.loads(json.dumps(MERGE_DOC))
        doc["junctions"] = []
        path = tmp_path / "plain.json"
        path.write_text(json.dumps(doc))
        code = cli.main(["capacity-drop", "--scenario", str(path), "--sweep", "100"])
        assert code == 2
