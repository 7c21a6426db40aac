import gzip
import json

import numpy as np
import pytest
import yaml

from heteroclinic import CrossSection, build_grid, seed_phi
from heteroclinic.cli import main
from heteroclinic.config import ConfigError, ExperimentConfig, load_config
from heteroclinic.io import read_field_csv, write_field_csv

FAST = ["--override", "grid.T=5", "--override", "grid.h_x=0.05"]


def write(tmp_path, doc, name="c.yaml"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else yaml.safe_dump(doc))
    return str(p)


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_minimize_closed_form(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["minimize", "--out", str(out)] + FAST) == 0
    s = summary(out)
    assert s["passed"] and s["exit_code"] == 0 and s["schema_version"] == "1"
    assert abs(s["results"]["closed_form_relative_error"]) < 5e-3
    assert s["config"]["grid"]["T"] == 5 and s["config"]["kind"] == "minimize"
    assert "PASS" in capsys.readouterr().out
    assert sorted(s["artifacts"]) == ["field.csv", "summary.json", "trace.csv"]


def test_field_and_trace_csv_format(tmp_path):
    out = tmp_path / "o"
    main(["minimize", "--quiet", "--out", str(out)] + FAST)
    lines = (out / "field.csv").read_text().splitlines()
    assert lines[0] == "x,y,u,residual,A"
    assert len(lines) - 1 == 201 * 3
    first = lines[1].split(",")
    assert first[:3] == ["-5", "0", "1"] and first[3] == "nan" and first[4] == "0.5"
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,J,grad_norm"
    J = [float(r.split(",")[1]) for r in trace[1:]]
    assert all(b <= a for a, b in zip(J, J[1:]))


def test_three_dimensional_csv(tmp_path):
    g = build_grid(1, 0.5, CrossSection((1.0, 2.0), (3, 3)))
    p = tmp_path / "f.csv"
    U = seed_phi(0, g)
    write_field_csv(p, U, np.zeros(g.shape), np.ones(g.shape))
    assert p.read_text().splitlines()[0] == "x,y,z,u,residual,A"
    assert np.array_equal(read_field_csv(p, g).values, U.values)


def test_gzip_and_custom_seed_roundtrip(tmp_path):
    out = tmp_path / "o"
    assert main(["minimize", "--quiet", "--out", str(out), "--override", "output.gzip=true"] + FAST) == 0
    with gzip.open(out / "field.csv.gz", "rt") as fh:
        assert fh.readline().strip() == "x,y,u,residual,A"
    theta = summary(out)["results"]["theta"]
    out2 = tmp_path / "o2"
    seeded = FAST + ["--override", "solve.seed.kind=custom", "--override", f"solve.seed.path={out / 'field.csv.gz'}"]
    assert main(["minimize", "--quiet", "--out", str(out2)] + seeded) == 0
    s2 = summary(out2)
    assert s2["results"]["iterations"] <= 2 and s2["results"]["theta"] == pytest.approx(theta, rel=1e-12)


def test_validate_reports_three_potential_entries(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "--quiet", "--out", str(out)]) == 0
    checks = summary(out)["results"]["potential"]["checks"]
    assert [c["name"] for c in checks] == ["V1", "V2", "V3"] and all(c["passed"] for c in checks)


def test_beta_override_tau(tmp_path):
    out = tmp_path / "b"
    cfg = write(tmp_path, {"beta": {"grid": {"T": 1, "h_x": 0.1, "cross": {"extents": [1.0], "nodes": [11]}},
                                    "gradient_tolerance": 1e-7}})
    assert main(["beta", "--quiet", "--config", cfg, "--out", str(out), "--override", "tau=0.2"]) == 0
    s = summary(out)
    assert s["results"]["tau"] == 0.2 and s["results"]["beta"] > 0


def test_sweep_rows(tmp_path):
    out = tmp_path / "s"
    args = ["sweep-eps", "--quiet", "--out", str(out), "--override", "coefficient.kind=class2",
            "--override", "coefficient.eps_list=[1.0, 0.5, 0.1]", "--override", "grid.T=8",
            "--override", "grid.h_x=0.1"]
    assert main(args) == 0
    res = summary(out)["results"]
    assert [r["epsilon"] for r in res["rows"]] == [1.0, 0.5, 0.1]
    assert res["theta_0"] < res["theta_inf"]


def test_unknown_override_key(capsys):
    assert main(["minimize", "--override", "grid.bogus=1"]) == 2
    assert "unknown key 'bogus'" in capsys.readouterr().err
    assert main(["minimize", "--override", "no_equals_sign"]) == 2


def test_schema_errors_carry_line_numbers(tmp_path, capsys):
    cfg = write(tmp_path, "kind: minimize\ngrid:\n  T: 4\n  h_x: 0.3\nsolve:\n  nope: 1\n")
    assert main(["run", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:2: grid" in err and "1/h_x" in err
    assert f"{cfg}:6: solve.nope" in err


def test_config_errors():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/c.yaml")
    with pytest.raises(ConfigError, match="eps_list"):
        load_config(None, ["coefficient.eps_list=[0.1, 1.0]"])
    with pytest.raises(ConfigError, match="custom seed needs"):
        load_config(None, ["solve.seed.kind=custom"])


def test_wrong_kind_for_experiment(tmp_path, capsys):
    assert main(["compare-levels", "--out", str(tmp_path / "x")] + FAST) == 2
    assert "class1" in capsys.readouterr().err


def test_solver_failure_exit_3_keeps_artifacts(tmp_path):
    out = tmp_path / "n"
    assert main(["minimize", "--quiet", "--out", str(out), "--override", "solve.max_iterations=3"] + FAST) == 3
    assert (out / "field.csv").exists() and not summary(out)["converged"]


def test_assertion_failure_exit_4(tmp_path):
    out = tmp_path / "a"
    args = ["minimize", "--quiet", "--out", str(out), "--override", "checks.closed_form_rtol=1e-9"] + FAST
    assert main(args) == 4
    s = summary(out)
    assert s["converged"] and not s["checks"]["closed_form_level"]


def test_summary_reproduces_run(tmp_path):
    out = tmp_path / "r1"
    main(["minimize", "--quiet", "--out", str(out)] + FAST)
    s = summary(out)
    cfg = ExperimentConfig.model_validate(s["config"])
    cfg_path = write(tmp_path, yaml.safe_dump(s["config"]), "replay.yaml")
    out2 = tmp_path / "r2"
    assert cfg.grid.T == 5
    assert main(["run", "--quiet", "--config", cfg_path, "--out", str(out2)]) == 0
    s2 = summary(out2)
    assert s2["results"] == s["results"] and s2["checks"] == s["checks"]
