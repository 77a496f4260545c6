import csv
import json
import math
from pathlib import Path

import jsonschema
import pytest

from ratio_lab import __version__
from ratio_lab.cli import main
from ratio_lab.construction import interior_triangle_point, ratio_lower_bound
from ratio_lab.records import ENV_OUT_DIR, RunRecord, load_schema, resolve_out_dir


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv(ENV_OUT_DIR, raising=False)
    return tmp_path / "runs"


def run(out, *argv):
    return main(["--out-dir", str(out), *argv])


def only_record(out):
    dirs = [p for p in out.iterdir() if p.is_dir() and p.name != "cache"]
    assert len(dirs) == 1
    return json.loads((dirs[0] / "record.json").read_text()), dirs[0]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def validate(record):
    jsonschema.validate(record, load_schema())


def test_solve_defaults(out, capsys):
    assert run(out, "solve", "--n", "2", "--eps", "0.1") == 0
    rec, folder = only_record(out)
    validate(rec)
    c = interior_triangle_point(2, 0.9)
    assert rec["inputs"]["c1"] == pytest.approx(c.c1)
    assert rec["outputs"]["ratio"] >= ratio_lower_bound(2, 0.1, c.c2)
    assert rec["tool_version"] == __version__
    assert "ratio = " in capsys.readouterr().out
    sol = json.loads((folder / "solution.json").read_text())
    assert len(sol["r"]) == len(sol["u"])
    rows = read_rows(folder / "profile.csv")
    assert list(rows[0]) == ["r", "u", "sub", "super", "m"]
    assert all(float(r["sub"]) <= float(r["u"]) <= float(r["super"]) * (1 + 1e-12) for r in rows)


def test_solve_one_dim(out):
    assert run(out, "solve", "--n", "1", "--eps", "0.01", "--d-rule", "sqrt") == 0
    rec, folder = only_record(out)
    assert 1 < rec["outputs"]["ratio"] < 3
    assert read_rows(folder / "profile.csv")[0]["sub"] == ""


def test_solve_bad_eps(out, capsys):
    assert run(out, "solve", "--n", "2", "--eps", "1.5") == 1
    assert "eps must be in (0,1)" in capsys.readouterr().err


def test_usage_errors_exit_one(out):
    with pytest.raises(SystemExit) as info:
        run(out, "solve", "--n", "2")
    assert info.value.code == 1
    assert run(out, "solve", "--n", "2", "--eps", "0.1", "--d-rule", "fixed") == 1
    assert run(out, "verify", "--suite", "sub", "--n", "1") == 1
    assert run(out, "sweep", "--n", "2", "--log-range", "0.1,0.2") == 1


def test_solve_explicit_grid(out):
    assert run(out, "solve", "--n", "2", "--eps", "0.1", "--inner", "32", "--outer", "64") == 0
    rec, _ = only_record(out)
    assert rec["outputs"]["grid_size"] == 97


def test_solve_non_convergence_exit_two(out, monkeypatch):
    import ratio_lab.cli as cli
    from ratio_lab.solver import NonConvergence

    def boom(*a, **k):
        raise NonConvergence("forced")

    monkeypatch.setattr(cli, "solve_steady", boom)
    assert run(out, "solve", "--n", "2", "--eps", "0.1") == 2


def test_same_command_same_id_and_outputs(out):
    assert run(out, "solve", "--n", "3", "--eps", "0.2") == 0
    rec1, folder = only_record(out)
    csv1 = (folder / "profile.csv").read_bytes()
    assert run(out, "solve", "--n", "3", "--eps", "0.2") == 0
    rec2, _ = only_record(out)
    assert rec1["id"] == rec2["id"]
    assert rec1["outputs"] == rec2["outputs"]
    assert (folder / "profile.csv").read_bytes() == csv1


def test_env_overrides_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT_DIR, str(tmp_path / "env"))
    assert resolve_out_dir("elsewhere") == tmp_path / "env"
    assert main(["--out-dir", str(tmp_path / "flag"), "solve", "--n", "2", "--eps", "0.2"]) == 0
    assert (tmp_path / "env").is_dir()
    assert not (tmp_path / "flag").exists()


def test_globals_after_subcommand(tmp_path, monkeypatch):
    monkeypatch.delenv(ENV_OUT_DIR, raising=False)
    assert main(["solve", "--n", "2", "--eps", "0.2", "--out-dir", str(tmp_path / "late")]) == 0
    assert (tmp_path / "late").is_dir()


def test_sweep(out):
    assert run(out, "sweep", "--n", "2", "--eps-list", "0.2,0.1,0.05,0.02,0.01") == 0
    rec, folder = only_record(out)
    validate(rec)
    rows = read_rows(folder / "sweep.csv")
    assert list(rows[0]) == ["eps", "log_eps_abs", "d", "ratio", "lower_bound", "ratio_minus_bound", "error"]
    c2 = rec["inputs"]["c2"]
    for row in rows:
        eps = float(row["eps"])
        assert float(row["lower_bound"]) == ratio_lower_bound(2, eps, c2)
        assert float(row["ratio_minus_bound"]) >= 0
        assert float(row["log_eps_abs"]) == pytest.approx(-math.log(eps))
    assert rec["outputs"]["monotone"]


def test_sweep_one_dim_below_three(out):
    assert run(out, "sweep", "--n", "1", "--log-range", "1e-4,1e-2,3", "--d-rule", "sqrt") == 0
    rec, _ = only_record(out)
    assert all(row["ratio"] < 3 for row in rec["outputs"]["rows"])
    assert all(row["lower_bound"] is None for row in rec["outputs"]["rows"])


def test_sweep_resume_reuses_cache(out, monkeypatch, capsys):
    argv = ("sweep", "--n", "2", "--eps-list", "0.2,0.1")
    assert run(out, *argv) == 0
    _, folder = only_record(out)
    first = (folder / "sweep.csv").read_bytes()

    import ratio_lab.cli as cli

    def no_solves(*a, **k):
        raise AssertionError("should not solve")

    monkeypatch.setattr(cli, "sweep_ratio", no_solves)
    assert run(out, "--resume", *argv) == 0
    assert (folder / "sweep.csv").read_bytes() == first
    assert "resumed 2" in capsys.readouterr().err


def test_sweep_failures_exit_two(out, monkeypatch):
    import ratio_lab.cli as cli
    from ratio_lab.optimizer import SweepRow

    monkeypatch.setattr(cli, "sweep_ratio", lambda n, eps, *a, **k: [SweepRow(e, 0.1, error="boom") for e in eps])
    assert run(out, "sweep", "--n", "2", "--eps-list", "0.2,0.1") == 2


def test_verify_sandwich_pass(out, capsys):
    assert run(out, "verify", "--suite", "sandwich", "--n", "2", "--eps", "0.1") == 0
    rec, folder = only_record(out)
    validate(rec)
    assert json.loads((folder / "report.json").read_text())["passed"]
    text = capsys.readouterr().out
    assert "worst=" in text and "r=" in text


def test_verify_ceiling_lists_ratios(out, capsys):
    assert run(out, "verify", "--suite", "ceiling") == 0
    text = capsys.readouterr().out
    assert text.count("ratio=") == 3


def test_verify_outside_triangle_fails(out):
    assert run(out, "verify", "--suite", "sub", "--c1", "0.4", "--c2", "0.9", "--n", "2") == 3
    rec, _ = only_record(out)
    validate(rec)
    assert not rec["outputs"]["passed"]


def test_verify_all_one_dim(out):
    assert run(out, "verify", "--suite", "all", "--n", "1", "--eps", "0.01") == 0
    rec, _ = only_record(out)
    names = [r["check_name"] for r in rec["outputs"]["reports"]]
    assert names == ["energy_identity", "growth_order", "one_dim_ceiling", "gas"]


def test_optimize_and_trace(out):
    assert run(out, "optimize", "--n", "2", "--budget", "20") == 0
    rec, folder = only_record(out)
    validate(rec)
    trace = (folder / "trace.csv").read_bytes()
    assert rec["outputs"]["evaluations"] <= 20
    assert run(out, "optimize", "--n", "2", "--budget", "20") == 0
    assert (folder / "trace.csv").read_bytes() == trace


def test_plotdata_kinds(out, tmp_path, capsys):
    run(out, "solve", "--n", "2", "--eps", "0.1")
    solve_id = only_record(out)[0]["id"]
    capsys.readouterr()
    assert run(out, "plotdata", "--record", solve_id, "--kind", "profile") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "r,u,sub,super"

    run(out, "sweep", "--n", "2", "--eps-list", "0.2,0.1,0.05")
    capsys.readouterr()
    sweep_id = next(p.parent.name for p in out.glob("*/record.json") if p.parent.name != solve_id)
    target = tmp_path / "scaling.csv"
    assert run(out, "plotdata", "--record", str(out / sweep_id), "--kind", "scaling", "--output", str(target)) == 0
    rows = read_rows(target)
    assert list(rows[0]) == ["log_eps_abs", "ratio", "lower_bound"]
    assert len(rows) == 3

    assert run(out, "plotdata", "--record", solve_id, "--kind", "trace") == 1


def test_plotdata_trace(out, capsys):
    run(out, "optimize", "--n", "1", "--budget", "12")
    rid = only_record(out)[0]["id"]
    capsys.readouterr()
    assert run(out, "plotdata", "--record", rid, "--kind", "trace") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "evaluation,ratio"
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(len(lines) - 1))


def test_plotdata_unknown_record(out, capsys):
    assert run(out, "plotdata", "--record", "deadbeef", "--kind", "profile") == 1
    assert "unknown record" in capsys.readouterr().err


def test_record_id_is_content_hash():
    a = RunRecord("solve", {"n": 2, "eps": 0.1})
    b = RunRecord("solve", {"eps": 0.1, "n": 2}, timestamp=0.0)
    assert a.id == b.id and len(a.id) == 16
    assert RunRecord("solve", {"n": 2, "eps": 0.2}).id != a.id


def test_schema_rejects_malformed():
    rec = RunRecord("solve", {"n": 2}, {"ratio": 1.0}).to_dict()
    with pytest.raises(jsonschema.ValidationError):
        validate(rec)


def test_schema_file_is_valid():
    jsonschema.Draft202012Validator.check_schema(load_schema())
    assert Path(__file__).parent.parent.joinpath("src/ratio_lab/schemas/record.schema.json").is_file()
