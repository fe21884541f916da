import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from centralspin import cli, experiments, oracle
from centralspin.experiments import ExperimentConfig, parse_config_text
from centralspin.core import ValidationError

FIGURES = Path(__file__).resolve().parent.parent / "figures"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = text.split("\n")
    assert lines[-1] == ""
    header = lines[0].split(",")
    rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:-1]])
    return header, rows


def test_config_parsing_comments_and_types():
    params = parse_config_text("bell-separate", "# comment\nomega1 = 7  # trailing\n\ndetunings = 0:0, 1.5:-2\n")
    assert params == {"omega1": 7.0, "detunings": ((0.0, 0.0), (1.5, -2.0))}


def test_config_unknown_key_lists_valid_keys():
    with pytest.raises(ValidationError) as err:
        parse_config_text("asymptote", "gama = 0.2\n")
    assert err.value.field == "gama"
    assert "gamma" in str(err.value) and "omega1" in str(err.value)


def test_config_grid_invariants():
    with pytest.raises(ValidationError) as err:
        ExperimentConfig("polarization", {"t_steps": 1})
    assert err.value.field == "t_steps"
    with pytest.raises(ValidationError):
        ExperimentConfig("polarization", {"t_start": 2.0, "t_stop": 1.0})


def test_unknown_key_in_file_exits_one(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("omega0 = 100\nbogus = 3\n", encoding="utf-8")
    code, out, err = run(capsys, "rabi-sweep", "--config", str(conf))
    assert code == 1 and out == ""
    assert "bogus" in err and "valid keys" in err and "omega_steps" in err


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["rabi-sweep", "--bogus", "1"])
    assert exc.value.code == 1


def test_physical_validation_names_parameter(capsys):
    code, _, err = run(capsys, "polarization", "--polarization", "2", "--t_steps", "3")
    assert code == 1 and "polarization" in err
    code, _, err = run(capsys, "asymptote", "--omega1", "-1")
    assert code == 1 and "omega1" in err


def test_flags_override_file(tmp_path, capsys):
    conf = tmp_path / "a.conf"
    conf.write_text("t_stop = 1\nt_steps = 5\n", encoding="utf-8")
    _, out, _ = run(capsys, "asymptote", "--config", str(conf), "--t_steps", "3")
    _, rows = table(out)
    np.testing.assert_array_equal(rows[:, 0], [0.0, 0.5, 1.0])


def test_csv_format(capsys):
    code, out, _ = run(capsys, "asymptote", "--t_steps", "4", "--t_stop", "0.3")
    assert code == 0
    header, rows = table(out)
    assert header == ["t", "pz_exact", "pz_asymptotic", "pz_exact_oscillation", "pz_asymptotic_oscillation"]
    assert rows.shape == (4, 5)
    for line in out.split("\n")[1:-1]:
        for field in line.split(","):
            assert field == repr(float(field))
    assert "\r" not in out


def test_out_flag_writes_file(tmp_path, capsys):
    target = tmp_path / "o.csv"
    code, out, _ = run(capsys, "shift-dist", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text(encoding="utf-8").startswith("delta,p_uniform,p_gaussian\n")


def test_polarization_without_coupling_is_free_rabi(capsys):
    _, out, _ = run(capsys, "polarization", "--g_total", "0", "--couplings", "uniform", "--t_stop", "3",
                    "--t_steps", "301")
    header, rows = table(out)
    t, pz = rows[:, 0], rows[:, header.index("uniform_pz")]
    assert np.max(np.abs(pz - np.cos(10 * t))) <= 1e-12


def test_rabi_sweep_polarized_peak(capsys):
    _, out, _ = run(capsys, "rabi-sweep", "--config", str(FIGURES / "fig5.conf"), "--polarizations", "0.5")
    _, rows = table(out)
    assert rows[np.argmax(rows[:, 1]), 0] == 105.0


def test_shift_dist_masses(capsys):
    _, out, _ = run(capsys, "shift-dist", "--config", str(FIGURES / "fig1.conf"))
    header, rows = table(out)
    assert header == ["delta", "p_uniform", "p_gaussian"]
    np.testing.assert_allclose(rows[:, 1:].sum(axis=0), 1, atol=1e-12)
    support = rows[rows[:, 1] > 0, 0]
    np.testing.assert_allclose([support.min(), support.max()], [-10, 10], atol=1e-9)


def test_bell_common_columns(capsys):
    _, out, _ = run(capsys, "bell-common", "--t_steps", "3", "--states", "singlet,phi+", "--detunings", "0")
    header, rows = table(out)
    assert header == ["t", "concurrence_singlet_dw0.0", "purity_singlet_dw0.0", "concurrence_phi+_dw0.0",
                      "purity_phi+_dw0.0"]
    np.testing.assert_allclose(rows[:, 1], 1, atol=1e-10)


def test_bell_unknown_state(capsys):
    code, _, err = run(capsys, "bell-common", "--t_steps", "3", "--states", "psi+")
    assert code == 1 and "states" in err


def test_oracle_check_passes(capsys):
    code, out, _ = run(capsys, "oracle-check", "--n_spins", "2", "--points", "2")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "check,max_trace_distance,tolerance,status"
    assert all(line.endswith(",ok") for line in lines[1:]) and len(lines) == 6


def test_oracle_check_tolerance_failure_exits_two(capsys, monkeypatch):
    monkeypatch.setattr(oracle, "trace_distance", lambda a, b: 1.0)
    code, out, _ = run(capsys, "oracle-check", "--n_spins", "2", "--points", "1")
    assert code == 2 and ",FAIL" in out


def test_thread_env_variable(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    args = cli.build_parser().parse_args(["asymptote"])
    assert cli.resolve_config(args).threads == 3
    monkeypatch.setenv(cli.THREADS_ENV, "x")
    with pytest.raises(ValidationError):
        cli.resolve_config(args)


def test_chunking_does_not_change_values(monkeypatch):
    cfg = ExperimentConfig("polarization", {"t_steps": 200, "couplings": ("gaussian",), "n_spins": 8})
    ref = experiments.run_experiment(cfg)[1]
    monkeypatch.setattr(experiments, "CHUNK", 7)
    np.testing.assert_array_equal(experiments.run_experiment(cfg)[1], ref)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "centralspin", "asymptote", "--t_steps", "2", "--t_stop", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("t,pz_exact,")


@pytest.mark.parametrize("name, sub", [("fig1", "shift-dist"), ("fig2", "rabi-sweep"), ("fig3", "polarization"),
                                       ("fig4", "polarization"), ("fig5", "rabi-sweep"), ("fig6", "bell-common"),
                                       ("fig7", "bell-separate"), ("asymptote", "asymptote")])
def test_figure_configs_parse(name, sub):
    params = parse_config_text(sub, (FIGURES / f"{name}.conf").read_text(encoding="utf-8"))
    ExperimentConfig(sub, params)
