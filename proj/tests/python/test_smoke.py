import math
import os

import pytest

import ptip


def rma(r=2.47):
    return ptip.with_r(ptip.preset_model("rma-lynx-hare"), r)


def test_coexistence_equilibrium():
    eqs = {e["label"]: e for e in ptip.equilibria(rma())}
    e3 = eqs["e3"]["x"]
    assert eqs["e3"]["stability"] == "unstable_focus"
    assert len(eqs["e3"]["eigenvalues"]) == 2
    assert e3.N == pytest.approx(3.3, abs=1e-9)
    field = ptip.vector_field(rma(), e3)
    assert abs(field.N) < 1e-10 and abs(field.P) < 1e-13


def test_cycle_and_phase():
    cycle = ptip.find_limit_cycle(rma())
    assert cycle.period == pytest.approx(11.85, rel=0.01)
    e3 = next(e["x"] for e in ptip.equilibria(rma()) if e["label"] == "e3")
    east = ptip.State(e3.N + 1.0, e3.P)
    assert ptip.phase_of(east, e3) == pytest.approx(0.0, abs=1e-12)
    north = ptip.State(e3.N, e3.P + 1e-3)
    assert ptip.phase_of(north, e3) == pytest.approx(math.pi / 2)
    with pytest.raises(ptip.NoCycleError):
        ptip.find_limit_cycle(rma(1.4))


def test_state_accepts_tuples():
    field = ptip.vector_field(rma(), (3.0, 0.002))
    n, p = field
    assert math.isfinite(n) and math.isfinite(p)


def test_signal_is_deterministic():
    a = ptip.sample_signal(1.6, 2.5, seed=3, horizon=500)
    b = ptip.sample_signal(1.6, 2.5, seed=3, horizon=500)
    c = ptip.sample_signal(1.6, 2.5, seed=4, horizon=500)
    assert a == b
    assert a != c
    assert a[0][0] == 0.0
    assert all(1.6 <= r <= 2.5 for _, _, r in a)


def test_resolved_config():
    cfg = ptip.resolved_config("fig3")
    assert cfg["climate"]["r_high"] == 2.7
    assert cfg["experiment"]["n_runs"] == 1000
    assert "fig3" in ptip.preset_names()


def test_config_errors():
    with pytest.raises(ptip.ConfigError):
        ptip.resolved_config("fig4", ["climate.rho=1.5"])
    with pytest.raises(ptip.PtipError):
        ptip.resolved_config("fig99")


def test_run_command_exit_codes(tmp_path):
    assert ptip.run_command(["montecarlo", "--preset", "fig4", "climate.rho=1.5", "--out-dir", str(tmp_path)]) == 2
    out = tmp_path / "eq"
    assert ptip.run_command(["equilibria", "--preset", "fig2a", "--out-dir", str(out)]) == 0
    assert (out / "equilibria.csv").exists()
    assert (out / "manifest.json").exists()


def test_small_monte_carlo():
    res = ptip.run_monte_carlo(rma(), 1.6, 2.5, n_runs=6, horizon=1500)
    assert res["r_h"] is None
    assert res["tipped"] + res["no_tip"] + res["failed"] == 6
    assert all(r["kind"] == "P" for r in res["records"])


@pytest.mark.skipif("PTIP_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_binary_usage_error():
    import subprocess

    proc = subprocess.run([os.environ["PTIP_CLI"], "frobnicate"], capture_output=True)
    assert proc.returncode == 2
