import json
import os

import pytest

from sdifflab import cli, lab

NAMES = [
    "basis-identities",
    "ns-taylor-green",
    "euler-conservation",
    "sg-equivalence",
    "time-reversal",
    "hjb-colehopf",
    "burgers-from-value",
    "dpp",
    "feynman-kac",
    "flow-volume",
    "nelson",
    "generator",
    "cylinder-gradient",
    "hj-vanishing-viscosity",
]

QUICK = {"experiment": "ns-taylor-green", "dt": 0.01, "T": 0.1, "stride": 5, "energy_T": 0.02}


class TestRegistry:
    def test_names_in_order(self):
        assert [n for n, _ in lab.list_experiments()] == NAMES

    def test_every_criterion_covered(self):
        covered = sorted({c for e in lab.EXPERIMENTS.values() for c in e.criteria})
        assert covered == list(range(1, 13))

    def test_descriptions_present(self):
        assert all(len(desc) > 20 for _, desc in lab.list_experiments())


class TestResolve:
    def test_defaults_merge(self):
        exp, cfg = lab.resolve({"experiment": "time-reversal", "nu": 0.2})
        assert exp.name == "time-reversal"
        assert cfg["nu"] == 0.2 and cfg["dt"] == exp.defaults["dt"]

    @pytest.mark.parametrize(
        "config,match",
        [
            ({"experiment": "nope"}, "unknown experiment"),
            ({}, "unknown experiment"),
            ({"experiment": "time-reversal", "viscosity": 0.1}, "unknown key"),
            ({"experiment": "time-reversal", "nu": "fast"}, "expected float"),
            ([1, 2], "JSON object"),
        ],
    )
    def test_errors(self, config, match):
        with pytest.raises(lab.ConfigError, match=match):
            lab.resolve(config)

    def test_load_config_reports_position(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{\n  "experiment": "dpp",\n  "nu": ,\n}')
        with pytest.raises(lab.ConfigError, match=r"bad.json:3:\d+"):
            lab.load_config(str(p))


class TestRun:
    def test_report(self, tmp_path):
        rep = lab.run({**QUICK, "output_dir": str(tmp_path)})
        assert rep.passed
        assert rep.criteria == [3]
        files = sorted(os.listdir(tmp_path / "ns-taylor-green"))
        assert "report.json" in files and any(f.endswith(".csv") for f in files)
        data = json.loads((tmp_path / "ns-taylor-green" / "report.json").read_text())
        assert data["passed"] is True
        assert data["config"]["dt"] == 0.01
        assert {"name", "passed", "value", "tolerance"} <= set(data["checks"][0])

    def test_failing_check(self):
        rep = lab.run({**QUICK, "tol": -1.0})
        assert not rep.passed
        assert "FAIL" in rep.summary()

    def test_criteria_table(self):
        ok = lab.Report("a", {}, [lab.check("x", 0.0, 1.0)], criteria=[7])
        bad = lab.Report("b", {}, [lab.check("y", 2.0, 1.0)], criteria=[7, 8])
        assert lab.criteria_table([ok]) == {7: True}
        assert lab.criteria_table([ok, bad]) == {7: False, 8: False}


class TestCli:
    def test_list(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert [line.split()[0] for line in out] == NAMES

    def test_run_pass(self, capsys):
        code = cli.main(["run", "time-reversal", "--T", "0.01", "--dt", "0.001", "--seed", "3"])
        assert code == 0
        assert "time-reversal: PASS" in capsys.readouterr().out

    def test_run_json(self, capsys, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(QUICK))
        assert cli.main(["run", "ns-taylor-green", "--config", str(p), "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["experiment"] == "ns-taylor-green"

    def test_run_fail_exit_code(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({**QUICK, "tol": -1.0}))
        assert cli.main(["run", "ns-taylor-green", "--config", str(p)]) == 1

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "nope"],
            ["run", "hjb-colehopf", "--psi-spec", "[[1], "],
            ["run", "euler-conservation", "--paths", "10"],
        ],
    )
    def test_config_errors(self, argv, capsys):
        assert cli.main(argv) == 2
        assert "config error" in capsys.readouterr().err

    def test_config_file_mismatch(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"experiment": "dpp"}))
        assert cli.main(["run", "nelson", "--config", str(p)]) == 2

    def test_bad_choice_exits(self):
        with pytest.raises(SystemExit):
            cli.main(["run", "ns-taylor-green", "--scheme", "euler"])
