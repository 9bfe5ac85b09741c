import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tmsv import cli, validation
from tmsv.cli import CSV_TAG, ConfigError, main, parse_config

HEADLINE = {"units": "angular_per_us", "theta1": 40.0, "theta2": 30.0,
            "rates": {"gamma_r": 20.0, "gamma_phi": 20.0, "kappa": 0.0}}
HALF = {"units": "angular_per_us", "theta1": 40.0, "ratio": 0.5, "rates": {"gamma": 20.0}}


def run(tmp_path, command, config, *extra, name="cfg"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(config))
    out = tmp_path / f"out_{name}"
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text())
    return code, report, out


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith(f"# {CSV_TAG}, columns: ")
    rows = list(csv.DictReader(lines[1:]))
    return lines, rows


def with_(base, **kw):
    cfg = json.loads(json.dumps(base))
    for k, v in kw.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    return cfg


# -- configuration ---------------------------------------------------------------

def test_units_required(tmp_path):
    cfg = dict(HALF)
    del cfg["units"]
    code, report, _ = run(tmp_path, "effective", cfg)
    assert code == 2
    assert "units" in report["error"]["message"]


def test_units_value_checked():
    with pytest.raises(ConfigError):
        parse_config(with_(HALF, units="MHz"))


def test_config_field_errors():
    with pytest.raises(ConfigError, match="gamma_r"):
        parse_config(with_(HALF, rates={"gamma_r": "fast"}))
    with pytest.raises(ConfigError, match="gamma_r"):
        parse_config(with_(HALF, rates={"gamma_r": -1.0}))
    with pytest.raises(ConfigError, match="cutoff"):
        parse_config(with_(HALF, cutoff=0))
    with pytest.raises(ConfigError, match="theta1"):
        parse_config({"units": "angular_per_us"})
    with pytest.raises(ConfigError, match="sample_stride"):
        parse_config(with_(HALF, integrator={"sample_stride": 0}))


def test_bad_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{units: ")
    assert main(["effective", "--config", str(bad), "--out", str(tmp_path / "o1")]) == 2
    assert main(["effective", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o2")]) == 2


def test_overrides_take_precedence():
    cfg = parse_config(with_(HALF, cutoff=5, integrator={"dt": 0.01, "t_final": 2.0}),
                       {"cutoff": 3, "dt": 0.001, "t_final": None})
    assert (cfg.cutoff, cfg.dt, cfg.t_final) == (3, 0.001, 2.0)


# -- effective ---------------------------------------------------------------------

def test_effective_from_couplings(tmp_path):
    cfg = {"units": "angular_per_us", "system": {"g": 200.0, "xi1": 0.2, "xi2": 0.15, "delta": 40000.0,
                                                 "nu": [18000.0, 18000.0]}}
    code, report, _ = run(tmp_path, "effective", cfg)
    assert code == 0
    eff = report["results"]["effective"]
    assert eff["theta1"] == pytest.approx(40.0)
    assert eff["theta2"] == pytest.approx(30.0)
    assert eff["ideal_V"] == pytest.approx(0.2857, abs=1e-4)
    assert report["results"]["recommended_cutoff"] == 16
    assert report["config"] == cfg
    assert report["cutoff"]["tail_mass"] <= 1e-4
    np.testing.assert_allclose(report["results"]["drive_plan"], [[22000, 58000], [58000, 22000]])


def test_effective_circuit_frequencies(tmp_path):
    cfg = with_(HALF, circuit={"capacitance_pf": 12.0, "inductance_ph": 250.0, "mutual_ph": 20.0,
                               "persistent_current_na": 500.0})
    code, report, _ = run(tmp_path, "effective", cfg)
    assert code == 0
    np.testing.assert_allclose(report["results"]["circuit"]["nu_ghz"], 2.9, atol=0.05)


def test_effective_without_squeezing_warns(tmp_path):
    cfg = {"units": "angular_per_us", "system": {"g": 200.0, "xi1": 0.2, "xi2": 0.0}}
    code, report, _ = run(tmp_path, "effective", cfg)
    assert code == 0
    assert report["results"]["effective"]["zeta"] == 0
    assert report["results"]["effective"]["ideal_V"] == 2.0
    assert any("no squeezing" in w for w in report["warnings"])


def test_effective_equal_drives_is_config_error(tmp_path):
    cfg = {"units": "angular_per_us", "system": {"g": 200.0, "xi1": 0.2, "xi2": 0.2}}
    code, report, _ = run(tmp_path, "effective", cfg)
    assert code == 2
    assert report["error"]["type"] == "UnsqueezableConfigurationError"


def test_console_script(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(HALF))
    proc = subprocess.run([sys.executable, "-m", "tmsv.cli", "effective", "--config", str(path),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ideal_V" in proc.stdout


# -- evolve ------------------------------------------------------------------------

def test_evolve_headline_short_run(tmp_path):
    cfg = with_(HEADLINE, cutoff=16, integrator={"dt": 0.002, "t_final": 0.5})
    code, report, out = run(tmp_path, "evolve", cfg)
    assert code == 0
    assert report["results"]["final"]["V"] == pytest.approx(0.2857, abs=0.01)


def test_evolve_resonator_decay_spoils(tmp_path):
    cfg = with_(HEADLINE, rates={"kappa": 20.0}, cutoff=16, integrator={"dt": 0.001, "t_final": 0.5})
    code, report, _ = run(tmp_path, "evolve", cfg)
    assert code == 0
    assert report["results"]["final"]["V"] > 0.2857 + 0.1


def test_evolve_zero_time(tmp_path):
    code, report, out = run(tmp_path, "evolve", HALF, "--t-final", "0")
    assert code == 0
    lines, rows = read_csv(out / "evolve.csv")
    assert len(rows) == 1
    assert float(rows[0]["V"]) == pytest.approx(2.0, abs=1e-12)
    assert list(rows[0]) == ["t_us", "V", "fidelity", "n1", "n2", "pg1", "pg2", "trace_err", "gamma_t"]


def test_evolve_csv_and_report(tmp_path):
    cfg = with_(HALF, integrator={"dt": 0.002, "t_final": 0.2, "sample_stride": 10})
    code, report, out = run(tmp_path, "evolve", cfg)
    assert code == 0
    _, rows = read_csv(out / "evolve.csv")
    assert len(rows) == 11
    assert float(rows[-1]["gamma_t"]) == pytest.approx(20.0 * 0.2)
    res = report["results"]
    assert res["ideal_V"] == pytest.approx(2 / 3)
    assert res["trace_drift"] < 1e-8
    assert report["cutoff"]["value"] == 6 and not report["cutoff"]["override"]
    assert report["backend"] in ("cython", "python")


def test_evolve_is_deterministic(tmp_path):
    cfg = with_(HALF, integrator={"dt": 0.002, "t_final": 0.3})
    _, _, a = run(tmp_path, "evolve", cfg, name="a")
    _, _, b = run(tmp_path, "evolve", cfg, name="b")
    assert (a / "evolve.csv").read_bytes() == (b / "evolve.csv").read_bytes()


def test_evolve_divergence_exit_code(tmp_path):
    cfg = with_(HALF, integrator={"dt": 0.1, "t_final": 5.0, "sample_stride": 1})
    code, report, out = run(tmp_path, "evolve", cfg)
    assert code == 3
    assert report["error"]["type"] == "IntegrationDivergedError"
    _, rows = read_csv(out / "evolve.csv")
    assert len(rows) >= 1 and float(rows[0]["t_us"]) == 0


def test_evolve_initial_states(tmp_path):
    cfg = with_(HALF, cutoff=2, initial_state={"fock": [1, 1]}, integrator={"t_final": 0.0, "dt": 0.01})
    code, _, out = run(tmp_path, "evolve", cfg, name="fock")
    assert code == 0
    _, rows = read_csv(out / "evolve.csv")
    assert float(rows[0]["V"]) == pytest.approx(6.0)
    vec = np.zeros((36, 2))
    vec[0, 0] = vec[1, 1] = 1.0  # (|gg00> + i|gg01>) / sqrt(2) after normalization
    (tmp_path / "psi.json").write_text(json.dumps(vec.tolist()))
    cfg = with_(HALF, cutoff=2, initial_state={"file": "psi.json"}, integrator={"t_final": 0.0, "dt": 0.01})
    code, _, out = run(tmp_path, "evolve", cfg, name="file")
    assert code == 0
    _, rows = read_csv(out / "evolve.csv")
    assert float(rows[0]["n2"]) == pytest.approx(0.5)
    code, _, _ = run(tmp_path, "evolve", with_(cfg, initial_state={"fock": [5, 0]}), name="bad")
    assert code == 2


# -- steady ------------------------------------------------------------------------

def test_steady_half_ratio(tmp_path):
    cfg = with_(HALF, cutoff=7, integrator={"dt": 0.002, "t_final": 60.0},
                steady={"method": "evolve", "convergence_tolerance": 1e-7})
    code, report, _ = run(tmp_path, "steady", cfg)
    assert code == 0
    res = report["results"]
    assert res["fidelity"] > 0.99
    assert res["residual"] < 1e-6


def test_steady_without_squeezing(tmp_path):
    cfg = with_(HALF, ratio=0.0, steady={"method": "direct"})
    code, report, _ = run(tmp_path, "steady", cfg)
    assert code == 0
    res = report["results"]
    assert res["V"] == pytest.approx(2.0, abs=1e-9)
    assert res["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert res["method"] == "direct"


def test_steady_headline(tmp_path):
    cfg = with_(HEADLINE, integrator={"dt": 0.002, "t_final": 40.0},
                steady={"method": "evolve", "convergence_tolerance": 1e-5})
    code, report, _ = run(tmp_path, "steady", cfg)
    assert code == 0
    res = report["results"]
    assert res["V"] == pytest.approx(0.286, abs=0.01)
    assert res["pg1"] > 0.99 and res["pg2"] > 0.99


def test_steady_direct_too_large(tmp_path):
    code, report, _ = run(tmp_path, "steady", with_(HALF, steady={"method": "direct"}))
    assert code == 2
    assert report["error"]["type"] == "DimensionTooLargeError"


def test_steady_not_converged(tmp_path):
    cfg = with_(HALF, integrator={"dt": 0.002, "t_final": 0.1},
                steady={"method": "evolve", "convergence_tolerance": 1e-9})
    code, report, _ = run(tmp_path, "steady", cfg)
    assert code == 3


# -- fig3 ----------------------------------------------------------------------------

FIG3 = with_(HALF, integrator={"dt": 0.002, "t_final": 5.0, "sample_stride": 50})


def test_fig3_default_pairs(tmp_path):
    code, report, out = run(tmp_path, "fig3", FIG3)
    assert code == 0
    curves = report["results"]["curves"]
    assert [(c["gamma"], c["kappa"]) for c in curves] == [(20, 0), (20, 2), (20, 20)]
    ideal = report["results"]["ideal_V"]
    assert curves[0]["final_V"] == pytest.approx(ideal, abs=0.01)
    assert curves[2]["final_V"] > ideal + 0.1
    assert curves[0]["final_V"] < curves[1]["final_V"] < curves[2]["final_V"]
    _, rows = read_csv(out / "fig3.csv")
    assert {r["curve"] for r in rows} == {"0", "1", "2"}
    assert all(float(r["V_ideal"]) == pytest.approx(ideal) for r in rows)


def test_fig3_workers_do_not_change_output(tmp_path):
    cfg = with_(FIG3, integrator={"t_final": 1.0})
    _, _, a = run(tmp_path, "fig3", cfg, name="serial")
    _, _, b = run(tmp_path, "fig3", cfg, "--workers", "3", name="parallel")
    assert (a / "fig3.csv").read_bytes() == (b / "fig3.csv").read_bytes()


def test_fig3_empty_pairs(tmp_path):
    code, report, _ = run(tmp_path, "fig3", with_(FIG3, experiment={"pairs": []}))
    assert code == 2


def test_fig3_duplicates_dropped(tmp_path):
    cfg = with_(FIG3, integrator={"t_final": 0.1}, experiment={"pairs": [[20, 0], [20, 0.0], [20, 2]]})
    code, report, _ = run(tmp_path, "fig3", cfg)
    assert code == 0
    assert len(report["results"]["curves"]) == 2
    assert any("duplicate" in w for w in report["warnings"])


def test_fig3_failures_are_isolated(tmp_path):
    cfg = with_(FIG3, integrator={"t_final": 0.5}, experiment={"pairs": [[20, 0], [4000, 0]]})
    code, report, out = run(tmp_path, "fig3", cfg)
    assert code == 3
    assert [c["curve"] for c in report["results"]["curves"]] == [0]
    assert report["results"]["failures"][0]["gamma"] == 4000
    _, rows = read_csv(out / "fig3.csv")
    assert rows and {r["curve"] for r in rows} == {"0"}


# -- validate ------------------------------------------------------------------------

def test_validate_passes(tmp_path):
    code, report, _ = run(tmp_path, "validate", HALF)
    assert code == 0
    res = report["results"]
    assert res["failed"] == []
    assert res["bogoliubov"]["value"] < 1e-4
    assert res["transformed_frame"]["value"] < 1e-6
    assert res["rwa"]["value"] < 0.02
    assert "scaling_note" in res["rwa"]["details"]


def test_validate_failure_exit_code(tmp_path, monkeypatch):
    def fake(*args):
        return [validation.CheckResult("bogoliubov", 1e-12, 1e-4), validation.CheckResult("rwa", 0.5, 0.02)]
    monkeypatch.setattr(validation, "run_all", fake)
    code, report, _ = run(tmp_path, "validate", HALF)
    assert code == 4
    assert report["results"]["failed"] == ["rwa"]


# -- sweep ---------------------------------------------------------------------------

def test_sweep(tmp_path):
    cfg = with_(HALF, integrator={"dt": 0.002, "t_final": 40.0},
                steady={"method": "evolve", "convergence_tolerance": 1e-5},
                experiment={"ratios": [0.0, 0.25, 0.5, 0.75], "kappas": [0.0, 2.0]})
    code, report, out = run(tmp_path, "sweep", cfg, "--workers", "4")
    assert code == 0
    _, rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["r", "kappa", "V_steady", "V_ideal", "fidelity"]
    assert [(float(r["r"]), float(r["kappa"])) for r in rows] == [
        (r, k) for r in (0.0, 0.25, 0.5, 0.75) for k in (0.0, 2.0)]
    for r in rows:
        if float(r["kappa"]) == 0:
            assert float(r["V_steady"]) == pytest.approx(2 * (1 - float(r["r"])) / (1 + float(r["r"])), abs=0.01)
    assert float(rows[0]["V_steady"]) == pytest.approx(2.0, abs=1e-3)
    # recorded as an observation about the produced table
    assert set(report["results"]["kappa_monotone"]) == {"0.0", "0.25", "0.5", "0.75"}


def test_sweep_rejects_bad_ratio(tmp_path):
    code, _, _ = run(tmp_path, "sweep", with_(HALF, experiment={"ratios": [1.2]}))
    assert code == 2


def test_workers_must_be_positive(tmp_path):
    code, _, _ = run(tmp_path, "sweep", HALF, "--workers", "0")
    assert code == 2


def test_commands_table():
    assert set(cli.COMMANDS) == {"effective", "evolve", "steady", "fig3", "validate", "sweep"}
