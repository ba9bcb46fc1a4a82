import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from maxwell_tails import evolve as ev, outputs, runner
from maxwell_tails.cli import main
from maxwell_tails.config import parse_config

SMALL = """
[grid]
N = 129

[integration]
tau_end = 20
sample_dt = 0.1

[run]
name = {name}
"""

CHAR = """
[integration]
scheme = characteristic

[data]
q = 0.2

[characteristic]
h = 0.2
u_max = 30
v_max = 40
stride = 5

[run]
name = char
"""


@pytest.fixture
def root(tmp_path, monkeypatch):
    monkeypatch.setenv(runner.OUTPUT_ROOT_ENV, str(tmp_path / "out"))
    return tmp_path / "out"


def _write(tmp_path, name, text):
    p = tmp_path / f"{name}.ini"
    p.write_text(text)
    return p


def test_env_var_sets_output_root(root):
    res = runner.execute_run(parse_config(SMALL.format(name="a")))
    assert res.status == "ok"
    assert (root / "a" / "metadata.json").exists()
    assert (root / "a" / "Phi0_scri.csv").exists()
    assert (root / "a" / "series.svg").exists()


def test_identical_configs_give_identical_csv(root):
    cfg = parse_config(SMALL.format(name="a"))
    runner.execute_run(cfg)
    first = {p.name: p.read_bytes() for p in (root / "a").glob("*.csv")}
    runner.execute_run(cfg)
    second = {p.name: p.read_bytes() for p in (root / "a").glob("*.csv")}
    assert first and first == second


def test_metadata_echoes_defaults_and_validates(root):
    runner.execute_run(parse_config(SMALL.format(name="a")))
    doc = json.loads((root / "a" / "metadata.json").read_text())
    jsonschema.validate(doc, outputs.schema())
    assert doc["config"]["integration"]["cfl"] == 0.5
    assert "cfl = 0.5" in doc["config_text"]
    assert doc["fits"]["Phi0_scri"]["window"] == [10.0, 20.0]


def test_aborted_run_keeps_artifacts(root, monkeypatch):
    def boom(state, system, dt, nsteps=1):
        raise ev.EvolutionAborted("forced", state.tau, state.copy())

    monkeypatch.setattr(ev, "step_hyperboloidal", boom)
    rc = runner.run_suite([parse_config(SMALL.format(name="b"))])
    assert rc == 1
    assert (root / "b" / "ABORTED").exists()
    assert json.loads((root / "b" / "metadata.json").read_text())["status"] == "aborted"


def test_empty_suite_is_noop(root):
    assert runner.run_suite([]) == 0


def test_characteristic_run(root):
    res = runner.execute_run(parse_config(CHAR))
    assert res.status == "ok"
    assert res.meta["diagnostics"]["charge"]["q_E"] == pytest.approx(0.2)
    assert (root / "char" / "psi_minus_r10.csv").exists()


def test_cli_exit_codes(tmp_path, root, capsys):
    good = _write(tmp_path, "good", SMALL.format(name="cli"))
    bad = _write(tmp_path, "bad", "[background]\nM = 1\na = 1.5\n")
    assert main(["evolve", str(good)]) == 0
    assert main(["evolve", str(bad)]) == 2
    assert "background.a" in capsys.readouterr().err
    assert main(["evolve", str(tmp_path / "missing.ini")]) == 2
    csv = root / "cli" / "Phi0_sigma0.2.csv"
    assert main(["tails", str(csv)]) == 0
    assert "exponent" in capsys.readouterr().out
    assert main(["plot", str(csv), "-o", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").exists()
    assert main(["check"]) == 0


def test_cli_suite_directory(tmp_path, root):
    d = tmp_path / "suite"
    d.mkdir()
    assert main(["suite", str(d)]) == 0
    _write(d, "one", SMALL.format(name="s1"))
    _write(d, "two", SMALL.format(name="s2"))
    assert main(["suite", str(d), "--parallel", "2"]) == 0
    assert (root / "s1" / "metadata.json").exists() and (root / "s2" / "metadata.json").exists()
    _write(d, "three", "[grid]\nbogus = 1\n")
    assert main(["suite", str(d)]) == 2
    assert main(["suite", "no-such-preset"]) == 2


def test_cli_tails_no_exponent(tmp_path):
    p = tmp_path / "flat.csv"
    tau = np.linspace(1, 10, 20)
    outputs.write_series_csv(p, tau, np.zeros(20))
    assert main(["tails", str(p)]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "maxwell_tails", "check"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "spinweight:" in out.stdout and "total:" in out.stdout
