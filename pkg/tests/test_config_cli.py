import json

import numpy as np
import pytest

from varfrac import cli
from varfrac.config import CONFIG_SCHEMA, ConfigError, config_hash, load_config, parse_config
from varfrac.io import read_nodal_csv

BASE = {"task": "solve", "domain": {"N": 1, "n_x": 8, "n_y": 8, "tau": 3.0},
        "order": {"kind": "constant", "value": 0.5}}


def cfg(**over):
    raw = json.loads(json.dumps(BASE))
    for k, v in over.items():
        raw[k] = v
    return raw


def write(tmp_path, raw, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def read_report(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, ln.split(","))) for ln in lines[1:]]


class TestParse:
    def test_defaults(self):
        c = parse_config(BASE)
        assert c.domain.gamma == "auto" and c.p == 2.0 and c.seed == 0
        assert c.outputs == {"vtk": True, "trace": True, "report": True}

    @pytest.mark.parametrize("mutate", [
        lambda r: r.pop("task"),
        lambda r: r.update(task="dance"),
        lambda r: r["domain"].update(n_x=1),
        lambda r: r["domain"].update(N=3),
        lambda r: r["order"].update(value=1.5),
        lambda r: r.update(extra=1),
        lambda r: r.update(p=1.5),
        lambda r: r.update(p=3.0),
        lambda r: r.update(compare="spectral", order={"kind": "step", "cells": [
            {"box": [[0, 0.5]], "value": 0.3}, {"box": [[0.5, 1]], "value": 0.6}]}),
        lambda r: r.update(task="convergence_study", ladder=[8]),
        lambda r: r.update(task="inequality_suite", suite="improved_trace", domain={"N": 2, "n_x": 4, "n_y": 4}),
        lambda r: r.update(rhs={"name": "nodal_csv"}),
        lambda r: r.update(order={"kind": "step", "cells": [{"box": [[0, 1], [0, 1]], "value": 0.3}]}),
    ])
    def test_rejected(self, mutate):
        raw = json.loads(json.dumps(BASE))
        mutate(raw)
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_schema_is_valid_draft(self):
        import jsonschema
        jsonschema.Draft202012Validator.check_schema(CONFIG_SCHEMA)

    def test_hash_ignores_key_order_and_whitespace(self):
        a = {"b": 1, "a": [1, 2]}
        b = json.loads('{ "a": [1,2],\n "b": 1 }')
        assert config_hash(a) == config_hash(b)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(bad)
        arr = tmp_path / "arr.json"
        arr.write_text("[]")
        with pytest.raises(ConfigError):
            load_config(arr)


class TestMakeFunction:
    def test_sin_mode_two_dimensional(self):
        from varfrac.config import FunctionSpec
        f = cli.make_function(FunctionSpec("sin_mode", (1, 2), 2.0), 2)
        x = np.array([[0.5, 0.25]])
        assert f(x) == pytest.approx([2.0])

    def test_bump_support(self):
        from varfrac.config import FunctionSpec
        f = cli.make_function(FunctionSpec("bump", radius=0.2), 1)
        vals = f(np.array([0.5, 0.69, 0.71]))
        assert vals[0] == pytest.approx(1.0) and vals[1] > 0 and vals[2] == 0

    def test_unknown(self):
        from varfrac.config import FunctionSpec
        with pytest.raises(ConfigError):
            cli.make_function(FunctionSpec("nope"), 1)


class TestExitCodes:
    def test_ok_and_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert cli.run(write(tmp_path, BASE), out) == cli.EXIT_OK
        assert {p.name for p in out.iterdir()} == {"report.csv", "trace.csv", "solution.vtk"}
        text = (out / "report.csv").read_text()
        assert f"# config_sha256: {config_hash(BASE)}" in text
        assert "# varfrac_version: " in text

    def test_schema_error_writes_nothing(self, tmp_path, capsys):
        out = tmp_path / "out"
        raw = cfg(domain={"N": 1, "n_x": 0, "n_y": 8})
        assert cli.run(write(tmp_path, raw), out) == cli.EXIT_CONFIG
        assert not out.exists()
        assert "domain/n_x" in capsys.readouterr().err

    def test_nonconvergence_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        raw = cfg(solver={"tol": 1e-14, "max_iter": 2})
        assert cli.run(write(tmp_path, raw), out) == cli.EXIT_NONCONVERGENCE
        assert not out.exists()

    def test_violation_exit_writes_report(self, tmp_path, monkeypatch):
        def fake(*args, **kwargs):
            return [{"suite": "trace", "id": 0, "lhs": 2.0, "rhs": 1.0, "margin": -1.0, "holds": False}]
        monkeypatch.setattr(cli, "run_suite", fake)
        raw = cfg(task="inequality_suite", suite="trace", n_samples=1)
        out = tmp_path / "out"
        assert cli.run(write(tmp_path, raw), out) == cli.EXIT_INEQUALITY
        rows = read_report(out / "report.csv")
        assert rows[0]["holds"] == "false"

    def test_main_argparse(self, tmp_path):
        path = write(tmp_path, BASE)
        assert cli.main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 0
        with pytest.raises(SystemExit):
            cli.main([])

    def test_bad_thread_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VARFRAC_THREADS", "many")
        assert cli.run(write(tmp_path, BASE), tmp_path / "o") == cli.EXIT_CONFIG

    def test_thread_env_accepted(self, monkeypatch):
        monkeypatch.setenv("VARFRAC_THREADS", "3")
        assert cli._resolve_threads(None) == 3
        assert cli._resolve_threads(2) == 2
        with pytest.raises(ConfigError):
            cli._resolve_threads(0)


class TestOutputs:
    def test_byte_reproducible(self, tmp_path):
        path = write(tmp_path, cfg(compare="spectral"))
        for d in ("a", "b"):
            assert cli.run(path, tmp_path / d) == 0
        for name in ("report.csv", "trace.csv", "solution.vtk"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_output_switches(self, tmp_path):
        raw = cfg(outputs={"vtk": False, "trace": False})
        out = tmp_path / "o"
        assert cli.run(write(tmp_path, raw), out) == 0
        assert [p.name for p in out.iterdir()] == ["report.csv"]

    def test_nodal_csv_round_trip(self, tmp_path):
        x = np.linspace(0, 1, 9)[1:-1]
        (tmp_path / "h.csv").write_text("x1,h\n" + "".join(f"{a},{np.sin(np.pi * a)}\n" for a in x))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        cli.run(write(tmp_path, cfg(rhs={"name": "nodal_csv", "path": "h.csv"}), "a.json"), out_a)
        cli.run(write(tmp_path, cfg(rhs={"name": "sin_mode", "k": 1}), "b.json"), out_b)
        va, vb = read_nodal_csv(out_a / "trace.csv"), read_nodal_csv(out_b / "trace.csv")
        assert va.shape == (7,)
        # interpolated vs exact load differ at the quadrature level only
        np.testing.assert_allclose(va, vb, rtol=2e-2)

    def test_nodal_csv_wrong_length(self, tmp_path):
        (tmp_path / "h.csv").write_text("1\n2\n3\n")
        raw = cfg(rhs={"name": "nodal_csv", "path": "h.csv"})
        assert cli.run(write(tmp_path, raw), tmp_path / "o") == cli.EXIT_CONFIG
        assert not (tmp_path / "o").exists()

    def test_zero_rhs_convergence(self, tmp_path):
        raw = cfg(task="convergence_study", ladder=[4, 8], rhs={"name": "zero"})
        out = tmp_path / "o"
        assert cli.run(write(tmp_path, raw), out) == 0
        rows = read_report(out / "report.csv")
        assert [float(r["error"]) for r in rows] == [0.0, 0.0]

    def test_misaligned_step_warns(self, tmp_path, capsys):
        order = {"kind": "step", "cells": [{"box": [[0, 0.3]], "value": 0.3},
                                           {"box": [[0.3, 1]], "value": 0.6}]}
        raw = cfg(order=order)
        assert cli.run(write(tmp_path, raw), tmp_path / "o") == 0
        assert "off the x grid lines" in capsys.readouterr().err

    @pytest.mark.parametrize("task,extra", [
        ("apply", {"compare": "spectral"}),
        ("extend", {"data": {"name": "bump"}}),
        ("penalty_study", {"penalty": {"mus": [10.0, 100.0]}}),
        ("oracle_compare", {}),
        ("poincare", {"taus": [1.0, 2.0], "domain": {"N": 1, "n_x": 8, "n_y": 8, "gamma": 1}}),
        ("inequality_suite", {"suite": "hardy_classical", "n_samples": 3}),
    ])
    def test_every_task_runs(self, tmp_path, task, extra):
        raw = cfg(task=task, **extra)
        out = tmp_path / "o"
        assert cli.run(write(tmp_path, raw), out) == 0
        assert read_report(out / "report.csv")

    def test_two_dimensional_solve(self, tmp_path):
        raw = cfg(domain={"N": 2, "n_x": 4, "n_y": 4, "tau": 2.0}, rhs={"name": "sin_mode", "k": [1, 1]})
        out = tmp_path / "o"
        assert cli.run(write(tmp_path, raw), out) == 0
        assert "DIMENSIONS 5 5 5" in (out / "solution.vtk").read_text()
