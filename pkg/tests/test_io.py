import json

import numpy as np
import pytest

from pagar_lab import example1
from pagar_lab.io import (load_demonstrations, load_mdp, load_train_config,
                          read_csv, save_demonstrations, save_mdp, write_csv,
                          write_json, dump_schemas)


class TestMdpRoundTrip:
    def test_example1_round_trip(self, tmp_path):
        mdp = example1.build_mdp()
        f1, f2 = example1.features()
        path = tmp_path / "mdp.json"
        save_mdp(mdp, path, features={"s2": f1, "s6": f2})
        loaded, features = load_mdp(path)
        assert loaded.n_states == mdp.n_states
        assert loaded.terminals == mdp.terminals
        assert loaded.available_actions == mdp.available_actions
        assert np.allclose(loaded.transition, mdp.transition)
        assert np.allclose(loaded.initial, mdp.initial)
        assert set(features) == {"s2", "s6"}
        assert np.allclose(features["s2"], f1)

    def test_schema_rejects_bad_documents(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n_states": 2}))
        with pytest.raises(ValueError, match="invalid MDP spec"):
            load_mdp(path)

    def test_schema_rejects_bad_probability(self, tmp_path):
        doc = {"n_states": 1, "n_actions": 1,
               "transitions": [[0, 0, 0, 1.7]],
               "initial": [[0, 1.0]], "terminals": [0], "gamma": 0.9}
        path = tmp_path / "bad2.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="invalid MDP spec"):
            load_mdp(path)


class TestDemosRoundTrip:
    def test_round_trip(self, tmp_path):
        demos = example1.demonstrations()
        path = tmp_path / "demos.json"
        save_demonstrations(demos, path)
        loaded = load_demonstrations(path)
        assert loaded.trajectories == demos.trajectories

    def test_rejects_missing_final_state(self, tmp_path):
        path = tmp_path / "demos.json"
        path.write_text(json.dumps({"trajectories": [{"steps": [[0, 0]]}]}))
        with pytest.raises(ValueError, match="invalid demonstration"):
            load_demonstrations(path)


class TestReports:
    def test_csv_has_metadata_and_header(self, tmp_path):
        path = tmp_path / "report.csv"
        write_csv(path, ["x", "y"], [(1, 2.0), (3, 4.5)], seed=7,
                  config={"a": 1})
        meta, header, rows = read_csv(path)
        assert meta.startswith("# pagar-lab")
        assert "seed=7" in meta and "config=" in meta
        assert header == ["x", "y"]
        assert rows == [["1", "2.0"], ["3", "4.5"]]

    def test_json_report_carries_tool_stamp(self, tmp_path):
        path = tmp_path / "r.json"
        write_json(path, {"value": 1.5}, seed=3)
        doc = json.loads(path.read_text())
        assert doc["tool"].startswith("pagar-lab")
        assert doc["seed"] == 3
        assert doc["value"] == 1.5

    def test_train_config_schema(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"variant": "plain", "n_iters": 5}))
        assert load_train_config(path)["n_iters"] == 5
        path.write_text(json.dumps({"variant": "bogus"}))
        with pytest.raises(ValueError, match="invalid train"):
            load_train_config(path)

    def test_dump_schemas_writes_three_files(self, tmp_path):
        dump_schemas(tmp_path)
        names = {p.name for p in tmp_path.iterdir()}
        assert names == {"mdp.schema.json", "demonstrations.schema.json",
                         "train_config.schema.json"}
