import json
import subprocess
import sys

import pytest

from lsicert.cli import RunConfig, UsageError, main, parse_config, run


@pytest.fixture
def model(tmp_path):
    f = tmp_path / "m.toml"
    f.write_text('variant = "quadratic"\nprecision = [[1.0, 0.2], [0.2, 1.0]]\n')
    return f


@pytest.fixture
def bad_model(tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text('variant = "quadratic"\nprecision = [[1.0, 0.6], [0.6, 1.0]]\n')
    return f


def test_parse_certify_defaults(model):
    cfg = parse_config(["certify", "--model", str(model)])
    assert cfg == RunConfig(command="certify", model=str(model))


def test_parse_simulate_steps(model):
    cfg = parse_config(["simulate", "--model", str(model), "--steps", "12", "--backend", "gaussian"])
    assert cfg.steps == 12 and cfg.backend == "gaussian"


def test_grid_points_capacity():
    with pytest.raises(UsageError, match="exceeds capacity 64"):
        parse_config(["simulate", "--grid-points", "128"])


@pytest.mark.parametrize(
    "argv",
    [
        ["certify"],
        ["certify", "--model", "/nonexistent.toml"],
        ["certify", "--bogus"],
        ["frobnicate"],
        ["lattice", "--J", "0.1"],
        ["simulate", "--steps", "0"],
    ],
)
def test_usage_errors(argv, model):
    if argv[0] == "simulate":
        argv += ["--model", str(model)]
    with pytest.raises(UsageError):
        parse_config(argv)


def test_main_exit_codes(model, bad_model, capsys):
    assert main(["certify", "--model", str(model)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["delta"] == pytest.approx(0.6, rel=1e-15) and out["lsi_lower"] == pytest.approx(0.3, rel=1e-15)
    assert out["pass"] is True
    assert main(["certify", "--model", str(bad_model)]) == 1
    assert json.loads(capsys.readouterr().out)["pass"] is False
    assert main(["certify"]) == 2


def test_certify_out_file(model, tmp_path, capsys):
    out = tmp_path / "cert.json"
    assert main(["certify", "--model", str(model), "--out", str(out)]) == 0
    assert set(json.loads(out.read_text())) >= {"rho", "norm_a1", "norm_a2", "delta", "lsi_lower", "alt_denominator", "lipschitz_bound", "pass"}
    assert "delta" in capsys.readouterr().out


def test_config_file_and_precedence(model, tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(f'model = "{model}"\nsteps = 5\ngrid-points = 10\n')
    cfg = parse_config(["simulate", "--config", str(cfgfile), "--steps", "7"])
    assert cfg.steps == 7 and cfg.grid_points == 10 and cfg.model == str(model)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(UsageError, match="unknown option"):
        parse_config(["simulate", "--model", str(model), "--config", str(bad)])


def test_threads_env(model, monkeypatch):
    monkeypatch.setenv("LSI_CERTIFY_THREADS", "3")
    assert parse_config(["certify", "--model", str(model)]).threads == 3
    monkeypatch.setenv("LSI_CERTIFY_THREADS", "many")
    with pytest.raises(UsageError):
        parse_config(["certify", "--model", str(model)])


def test_verify_empty_scenario(model, tmp_path):
    sc = tmp_path / "s.json"
    sc.write_text('{"cases": []}')
    out = tmp_path / "v.csv"
    assert main(["verify", "--model", str(model), "--scenario", str(sc), "--out", str(out)]) == 0
    assert out.read_text() == "case_id,D,I,W2,bound,slack,pass\n"


def test_verify_cases(model, tmp_path, monkeypatch):
    cases = [
        {"id": "shift", "p": {"mean": [1.0, 0.0]}, "inequality": "theorem"},
        {"id": "ov", "p": {"mean": [0.5, -0.5], "cov": [[1.2, 0.1], [0.1, 0.9]]}, "inequality": "otto_villani", "constant": "exact_gaussian"},
        {"id": "grid", "p": {"mean": [0.5, 0.0]}, "inequality": "lsi", "backend": "grid"},
        {"id": "toobig", "p": {"mean": [1.0, 0.0]}, "inequality": "lsi", "constant": 100.0},
    ]
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"cases": cases}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["verify", "--model", str(model), "--scenario", str(sc), "--out", str(a)]) == 1
    monkeypatch.setenv("LSI_CERTIFY_THREADS", "2")
    assert main(["verify", "--model", str(model), "--scenario", str(sc), "--out", str(b)]) == 1
    assert a.read_bytes() == b.read_bytes()
    rows = [line.split(",") for line in a.read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["shift", "ov", "grid", "toobig"]
    assert [r[-1] for r in rows] == ["true", "true", "true", "false"]


def test_simulate_deterministic(model, tmp_path):
    outs = []
    t, s = tmp_path / "t.csv", tmp_path / "s.json"
    for _ in range(2):
        assert main(["simulate", "--model", str(model), "--steps", "6", "--out", str(t), "--summary", str(s)]) == 0
        outs.append((t.read_bytes(), s.read_bytes()))
    assert outs[0] == outs[1]
    summary = json.loads(outs[0][1])
    assert summary["status"] == "ok" and summary["certificate"]["pass"] is True
    assert len(summary["model_sha256"]) == 64 and summary["knobs"]["steps"] == 6
    assert outs[0][0].decode().splitlines()[0] == "t,D_t,recursion_slack,w2_skip2_bound"


def test_simulate_grid(tmp_path):
    m = tmp_path / "p.toml"
    m.write_text(
        'variant = "perturbed_quadratic"\nprecision = [[1.0, 0.2], [0.2, 1.0]]\n'
        "[[perturbations]]\nsite = 0\na = 0.05\n[[perturbations]]\nsite = 1\na = 0.05\n"
    )
    s = tmp_path / "s.json"
    code = main(["simulate", "--model", str(m), "--backend", "grid", "--grid-points", "8", "--steps", "4", "--out", str(tmp_path / "t.csv"), "--summary", str(s)])
    assert code == 0
    assert json.loads(s.read_text())["knobs"]["backend"] == "grid"


def test_simulate_not_certified(bad_model, tmp_path):
    s = tmp_path / "s.json"
    assert main(["simulate", "--model", str(bad_model), "--summary", str(s), "--out", str(tmp_path / "t.csv")]) == 1
    assert json.loads(s.read_text())["status"] == "not-certified"


def test_lattice_roundtrip(tmp_path):
    out = tmp_path / "lat.json"
    assert main(["lattice", "--dims", "2", "3", "--J", "0.1", "--out", str(out)]) == 0
    assert main(["certify", "--model", str(out), "--out", str(tmp_path / "c.json")]) == 0
    assert main(["lattice", "--dims", "3", "--J", "1.0"]) == 2


def test_run_reports_bad_model(tmp_path):
    m = tmp_path / "m.json"
    m.write_text('{"variant": "cubic"}')
    assert run(parse_config(["certify", "--model", str(m)])) == 2


def test_console_entry_help():
    r = subprocess.run([sys.executable, "-m", "lsicert.cli", "simulate", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--grid-points" in r.stdout and "default" in r.stdout
