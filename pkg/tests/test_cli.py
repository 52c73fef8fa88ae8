import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.assembly import Variant
from degenwave.cli import (
    ConfigError,
    RunConfig,
    main,
    parse_config,
    run_subcommand,
    serialize_config,
)


def test_minimal_config_defaults():
    cfg = parse_config("{mu_a: 0.5, mu_b: 0.5}")
    assert cfg.variant is Variant.WEAK_LEFT
    assert cfg.n_per_string == 256
    assert cfg.gamma == 1.0
    assert cfg.grading == "auto" and cfg.dt == "auto"
    assert cfg.T == 200.0


def test_strong_left_inferred():
    assert parse_config("mu_a: 0.5\nmu_b: 1.5\n").variant is Variant.STRONG_LEFT
    assert parse_config("mu_a: 0.5\nmu_b: 1.0\n").variant is Variant.STRONG_LEFT


def test_aliases_and_json():
    cfg = parse_config('{"mu_a": 0.25, "mu_b": 0, "n": 64, "t_final": 10, "out": "x"}')
    assert (cfg.n_per_string, cfg.T, cfg.output_dir) == (64, 10.0, "x")


@pytest.mark.parametrize(
    "text, match",
    [
        ("{mu_a: 1.2, mu_b: 0.5}", "strong degeneracy at the junction"),
        ("{mu_a: 1.0, mu_b: 0.5}", "strong degeneracy at the junction"),
        ("{mu_a: -0.1, mu_b: 0.5}", "mu_a"),
        ("{mu_a: 0.5, mu_b: 2.0}", "mu_b"),
        ("{mu_a: 0.5}", "missing"),
        ("{mu_a: 0.5, mu_b: 0.5, gamma: 0}", "gamma"),
        ("{mu_a: 0.5, mu_b: 0.5, n: 1}", "n_per_string"),
        ("{mu_a: 0.5, mu_b: 0.5, n: 2.5}", "integer"),
        ("{mu_a: 0.5, mu_b: 0.5, bogus: 1}", "unknown"),
        ("{mu_a: 0.5, mu_b: 0.5, omega_min: 5, omega_max: 3}", "omega_max"),
        ("[1, 2]", "mapping"),
        ("{mu_a: [", "malformed"),
    ],
)
def test_rejections(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.0, 0.99),
    st.floats(0.0, 1.99),
    st.floats(0.01, 10.0),
    st.integers(2, 2048),
    st.one_of(st.just("auto"), st.floats(1.0, 8.0)),
)
def test_config_round_trip(mu_a, mu_b, gamma, n, grading):
    cfg = RunConfig(mu_a=mu_a, mu_b=mu_b, gamma=gamma, n_per_string=n, grading=grading)
    assert parse_config(serialize_config(cfg)) == cfg


def _cfg(tmp_path, **kw):
    base = dict(mu_a=0.5, mu_b=0.5, n_per_string=32, T=5.0, omega_samples=8,
                output_dir=str(tmp_path))
    base.update(kw)
    return RunConfig(**base)


def test_simulate_zero_data(tmp_path):
    zero = {"f1": [0.0], "f2": [0.0], "g1": [0.0], "g2": [0.0]}
    path = run_subcommand("simulate", _cfg(tmp_path, data=zero))
    assert path.name == "simulate_0.5_0.5.csv"
    head = path.read_text().splitlines()[0]
    assert head == "t,E,cumulative_dissipation"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.all(data[:, 1] == 0.0)


@pytest.mark.parametrize("cmd", ["simulate", "spectrum", "resolvent", "static-check"])
def test_byte_identical_outputs(tmp_path, cmd):
    a = run_subcommand(cmd, _cfg(tmp_path / "a"))
    b = run_subcommand(cmd, _cfg(tmp_path / "b"))
    assert a.name == b.name
    assert a.read_bytes() == b.read_bytes()


def test_full_precision_floats(tmp_path):
    path = run_subcommand("spectrum", _cfg(tmp_path))
    first = path.read_text().splitlines()[1].split(",")[0]
    mantissa = first.lstrip("-").split("e")[0].replace(".", "")
    assert len(mantissa) == 17


@pytest.mark.parametrize("mu_b, tol", [(0.5, 1e-3), (1.5, 1e-3)])
def test_static_check_error(tmp_path, mu_b, tol):
    path = run_subcommand("static-check", _cfg(tmp_path, mu_b=mu_b, n_per_string=256))
    x, num, exact, err = np.loadtxt(path, delimiter=",", skiprows=1, unpack=True)
    assert err.max() <= tol * np.abs(exact).max()
    np.testing.assert_allclose(err, np.abs(num - exact))


def test_report_after_simulate_and_resolvent(tmp_path):
    cfg = _cfg(tmp_path, n_per_string=128, T=100.0, sample_every=4, omega_samples=16)
    run_subcommand("simulate", cfg)
    run_subcommand("resolvent", cfg)
    path = run_subcommand("report", cfg)
    assert path.name == "report_0.5_0.5.json"
    rep = json.loads(path.read_text())
    for key in ("mu_a", "mu_b", "variant", "delta_predicted", "delta_fitted",
                "theta_predicted", "energy_exponent_fitted", "r_squared", "verdict"):
        assert key in rep
    assert rep["variant"] == "WeakLeft"
    assert rep["delta_predicted"] == pytest.approx(4 / 3)
    assert rep["verdict"] in ("PASS", "FAIL")


def test_main_error_line(capsys):
    assert main(["simulate", "--mu-a", "1.2", "--mu-b", "0.5"]) == 2
    err = capsys.readouterr().err.strip()
    assert "\n" not in err
    payload = json.loads(err)
    assert payload["error"] == "ConfigError"
    assert "junction" in payload["message"]


def test_main_runtime_failure(tmp_path, capsys):
    # the resolved band at n=8 lies below omega_min
    code = main(["resolvent", "--mu-a", "0.5", "--mu-b", "1.5", "--n", "8", "--out", str(tmp_path)])
    assert code == 1
    assert set(json.loads(capsys.readouterr().err)) == {"error", "message"}


def test_main_with_config_file(tmp_path, capsys):
    conf = tmp_path / "run.yaml"
    conf.write_text(f"mu_a: 0.25\nmu_b: 1.5\nn: 16\nT: 2\noutput_dir: {tmp_path}\n")
    assert main(["simulate", "--config", str(conf), "--n", "24"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.endswith("simulate_0.25_1.5.csv")
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data[-1, 0] == pytest.approx(2.0)
