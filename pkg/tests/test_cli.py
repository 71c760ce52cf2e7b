from __future__ import annotations

import json
import subprocess
import sys

import pytest

from stringnet.cli import main
from test_engine import doomed_config


def events(path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestSimulate:
    def test_bundled_18v18(self, tmp_path):
        out = tmp_path / "a"
        assert main(["simulate", "--scenario", "s18.json", "--out", str(out), "--seed", "7"]) == 0
        ev = events(out / "events.jsonl")
        assert sum(e["event"] == "herd complete" for e in ev) == 3
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["herd_success"] and metrics["breach_count"] == 0 and metrics["seed"] == 7
        assert metrics["split_event_count"] == 2
        enclose, herd = metrics["time_to_enclose_per_group"], metrics["time_to_herd_per_group"]
        assert set(enclose) == set(herd) and len(herd) == 3
        assert all(metrics["time_to_gather"] <= enclose[g] <= herd[g] for g in herd)
        header = (out / "trajectory.csv").open().readline().strip()
        assert header == "t,agent_id,class,x,y,vx,vy,phase,group_id,swarm_id"
        svg = (out / "trajectory.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<line") > 0

    def test_missing_file(self, tmp_path, capsys):
        assert main(["simulate", "--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
        assert "not found" in capsys.readouterr().err

    def test_invalid_config_lists_violations(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(doomed_config().replace(u_a_max=3.0).dumps())
        assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "speed ordering" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_field(self, tmp_path):
        d = json.loads(doomed_config().dumps())
        d["extra"] = 1
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(d))
        assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_timeout(self, tmp_path):
        out = tmp_path / "t"
        assert main(["simulate", "--scenario", "s18.json", "--max-time", "1", "--out", str(out)]) == 3
        ev = events(out / "events.jsonl")
        assert ev[-1]["event"] == "timeout"
        assert not json.loads((out / "metrics.json").read_text())["herd_success"]

    def test_breach_exit_code(self, tmp_path):
        path = tmp_path / "doomed.json"
        path.write_text(doomed_config().dumps())
        out = tmp_path / "b"
        assert main(["simulate", "--scenario", str(path), "--out", str(out)]) == 1
        assert json.loads((out / "metrics.json").read_text())["breach_count"] >= 1


class TestBenchAssign:
    def test_450_rows(self, tmp_path):
        out = tmp_path / "b"
        assert main(["bench-assign", "--n-swarms-min", "2", "--n-swarms-max", "10", "--instances", "50",
                     "--seed", "1", "--out", str(out)]) == 0
        lines = (out / "bench.csv").read_text().splitlines()
        assert lines[0] == "instance_id,n_swarms,exact_cost,exact_time_s,hier_cost,hier_time_s,gap_percent"
        assert len(lines) == 451
        assert all(float(line.split(",")[-1]) >= 0 for line in lines[1:])
        assert (out / "bench.svg").read_text().startswith("<svg")

    def test_zero_instances(self, tmp_path):
        out = tmp_path / "z"
        assert main(["bench-assign", "--instances", "0", "--out", str(out)]) == 0
        assert (out / "bench.csv").read_text() == \
            "instance_id,n_swarms,exact_cost,exact_time_s,hier_cost,hier_time_s,gap_percent\n"

    def test_timing_flag(self, tmp_path):
        out = tmp_path / "t"
        assert main(["bench-assign", "--n-swarms-min", "3", "--n-swarms-max", "3", "--instances", "2",
                     "--timing", "--out", str(out)]) == 0
        row = (out / "bench.csv").read_text().splitlines()[1].split(",")
        assert float(row[3]) > 0 and float(row[5]) > 0

    def test_bad_range(self):
        with pytest.raises(SystemExit) as exc:
            main(["bench-assign", "--n-swarms-min", "5", "--n-swarms-max", "3"])
        assert exc.value.code == 2


class TestCluster:
    def write(self, tmp_path, text):
        path = tmp_path / "in.csv"
        path.write_text(text)
        return str(path)

    def test_three_collinear(self, tmp_path, capsys):
        path = self.write(tmp_path, "id,r_x,r_y,v_x,v_y\na,0,0,0,0\nb,0.5,0,0,0\nc,1,0,0,0\nd,10,0,0,0\n")
        assert main(["cluster", "--input", path, "--eps", "0.6", "--min-pts", "3"]) == 0
        assert capsys.readouterr().out == "id,cluster_id\na,0\nb,0\nc,0\nd,-1\n"

    def test_output_dir(self, tmp_path):
        path = self.write(tmp_path, "0,0,0,0,0\n1,0.5,0,0,0\n2,1,0,0,0\n")
        assert main(["cluster", "--input", path, "--eps", "0.6", "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "clusters.csv").read_text() == "id,cluster_id\n0,0\n1,0\n2,0\n"

    def test_empty(self, tmp_path, capsys):
        assert main(["cluster", "--input", self.write(tmp_path, ""), "--eps", "1"]) == 0
        assert capsys.readouterr().out == ""

    def test_non_numeric(self, tmp_path, capsys):
        path = self.write(tmp_path, "id,r_x,r_y,v_x,v_y\n0,0,0,0,0\n1,zero,0,0,0\n")
        assert main(["cluster", "--input", path, "--eps", "1"]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_wrong_field_count(self, tmp_path, capsys):
        assert main(["cluster", "--input", self.write(tmp_path, "0,0,0,0\n"), "--eps", "1"]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert main(["cluster", "--input", str(tmp_path / "nope.csv"), "--eps", "1"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "stringnet", "bench-assign", "--instances", "1",
                          "--n-swarms-max", "3", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "bench.csv").exists()
