from __future__ import annotations

import json
import math

import numpy as np
import pytest

from coexist.errors import ContractError, WindowError
from coexist.harness import KINDS, fit_power_law, resolve, run, validate
from coexist.harness.cli import main
from coexist.harness.experiments import content_hash, within_z


def test_defaults_validate():
    for kind in KINDS:
        cfg = resolve({"kind": kind})
        validate(cfg)


def test_unknown_keys_rejected():
    with pytest.raises(ContractError):
        validate({"kind": "gap", "bogus": 1})
    with pytest.raises(ContractError):
        validate({"kind": "nope"})


@pytest.mark.parametrize("kind", ["gap", "barrier", "dilution", "xlambda", "es-check", "axiom-check"])
def test_default_runs_pass_and_are_deterministic(kind, tmp_path):
    a = run({"kind": kind}, tmp_path / "a").result
    b = run({"kind": kind}, tmp_path / "b").result
    assert a["pass"]
    assert a["content_hash"] == b["content_hash"]
    stored = json.loads((tmp_path / "a" / "result.json").read_text())
    assert content_hash(stored) == stored["content_hash"]


def test_autocorr_run_writes_curve(tmp_path):
    res = run({"kind": "autocorr", "times": [0.0, 1.0, 2.0], "replicas": 4, "n_initial": 16}, tmp_path)
    assert res.result["pass"]
    assert any(name.endswith(".csv") for name in res.result["files"])


def test_power_law_fit_recovers_exponent():
    t = np.linspace(1, 20, 30)
    fit = fit_power_law(t, 3.0 * t ** -2.0, n_boot=200)
    assert fit.exponent == pytest.approx(-2.0, abs=1e-9)
    assert not fit.poor_fit


def test_power_law_fit_flags_exponential():
    t = np.linspace(1, 20, 30)
    assert fit_power_law(t, np.exp(-t), n_boot=100).poor_fit


def test_power_law_window_errors():
    with pytest.raises(WindowError):
        fit_power_law([1, 2, 3], [1, 0.5, 0.3])
    with pytest.raises(WindowError):
        fit_power_law(np.arange(1, 10), np.zeros(9))


def test_within_z_handles_zero_stderr():
    ok, z = within_z(np.array([1.0]), np.array([0.0]), np.array([1.0]))
    assert ok and z == 0.0
    ok, z = within_z(np.array([1.0]), np.array([0.0]), np.array([1.1]))
    assert not ok


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["gap", "--out", str(tmp_path / "g")]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "gap", "N": -1}))
    assert main(["validate-config", str(bad)]) == 2
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"kind": "gap", "N": 4}))
    assert main(["gap", "--config", str(big), "--out", str(tmp_path / "x")]) == 3
    assert main(["nonsense"]) == 2
    assert main(["repro", "7"]) == 0
    assert main(["repro", "5"]) == 1


def test_autocorr_nested_sizes(tmp_path):
    res = run({"kind": "autocorr", "Ns": [0, 1], "times": [0.0, 1.0], "replicas": 4, "n_initial": 16}, tmp_path)
    assert set(res.result["summary"]["sizes"]) == {"N=0", "N=1"}
    assert "autocorr_curve_N1.csv" in res.result["files"]
