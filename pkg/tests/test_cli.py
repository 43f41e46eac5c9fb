import io
import subprocess
import sys

import pytest

from cavityphoton import cli


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def pairs(text):
    result = {}
    for line in text.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            result[key.strip()] = value.strip()
    return result


def test_bound_from_cooperativity():
    code, out, _ = call("bound", "--c-in", "4", "--r-u", "0")
    assert code == 0
    values = pairs(out)
    assert float(values["pf_lower"]) == 0.5
    assert float(values["kappa_ex_opt/kappa_in"]) == 3.0


def test_bound_from_rates():
    code, out, _ = call("bound", "--g", "4", "--kappa-in", "1", "--kappa-ex", "3", "--gamma", "1",
                        "--r-u", "0.5", "--r-g", "0.5")
    assert code == 0
    values = pairs(out)
    assert float(values["ps_upper"]) == pytest.approx(2 / 3, rel=1e-14)
    assert float(values["prep_upper"]) == pytest.approx(1 / 15, rel=1e-14)


def test_physical_calculator():
    code, out, _ = call("physical", "--mu", "2.5e-29", "--omega", "2.4e15", "--length", "1e-3",
                        "--area", "1.2e-9", "--alpha-loss", "1e-4")
    assert code == 0
    values = pairs(out)
    assert 2 * float(values["C_in"]) == pytest.approx(1 / (1e-4 * float(values["r_A"])), rel=1e-12)


def test_simulate_undriven(tmp_path):
    cfg = tmp_path / "dark.ini"
    cfg.write_text("[rates]\ng = 3\nkappa_in = 0.2\nkappa_ex = 2\n\n[pulse]\nfamily = constant\n"
                   "omega_max = 0\nduration = 10\n")
    code, out, err = call("simulate", "--config", str(cfg))
    assert code == 0, err
    assert float(pairs(out)["P_S"]) == 0.0


def test_simulate_solvers_agree_without_repump():
    base = ["simulate", "--g", "3", "--kappa-in", "0.2", "--kappa-ex", "2", "--r-u", "0",
            "--family", "gaussian", "--omega-max", "2", "--duration", "15"]
    _, master, _ = call(*base, "--solver", "master")
    _, amps, _ = call(*base, "--solver", "amplitudes")
    assert abs(float(pairs(master)["P_S"]) - float(pairs(amps)["P_S"])) <= 1e-7


def test_simulate_montecarlo_summary():
    code, out, _ = call("simulate", "--solver", "montecarlo", "--n-samples", "500", "--seed", "4",
                        "--g", "3", "--kappa-in", "0.2", "--kappa-ex", "2", "--r-u", "0.5",
                        "--r-g", "0.5", "--family", "constant", "--omega-max", "1",
                        "--duration", "30")
    values = pairs(out)
    assert code == 0
    assert int(values["n_samples"]) == 500
    assert sum(int(values[k]) for k in values if k.startswith("count_")) == 500


def test_csv_output_byte_identical(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text("[rates]\ng = 10\nkappa_in = 1\n\n[pulse]\nfamily = sin2_ramp\nomega_max = 10\n"
                   "duration = 40\n\n[run]\nsolver = amplitudes\n\n[sweep]\nkappa_ex = 2, 5, 10\n")
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert call("sweep", "--config", str(cfg), "-o", str(first))[0] == 0
    assert call("sweep", "--config", str(cfg), "-o", str(second), "--workers", "2")[0] == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0].startswith("kappa_ex,P_S,")
    assert len(lines) == 4


def test_simulate_series_byte_identical(tmp_path):
    argv = ["simulate", "--g", "2", "--kappa-in", "0.5", "--kappa-ex", "1", "--r-u", "0.2",
            "--r-g", "0.8", "--omega-max", "1", "--duration", "10"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert call(*argv, "-o", str(a))[0] == 0
    assert call(*argv, "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "t,rho_uu,rho_ee,rho_gg,p_g0,p_o0,F_ex,F_in,F_g,F_o,F_u"


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[rates]\ng = 4\nkappa_in = 1\nkappa_ex = 3\n")
    _, out, _ = call("bound", "--config", str(cfg), "--kappa-ex", "1")
    assert float(pairs(out)["eta_esc"]) == 0.5


def test_optimize_pulse_budget(tmp_path):
    code, out, err = call("optimize", "pulse", "--solver", "amplitudes", "--g", "10",
                          "--kappa-in", "1", "--kappa-ex", "10", "--omega-max", "10",
                          "--duration", "50", "--free", "duration=10:100", "--budget", "3")
    assert code == 0
    assert "BudgetExhausted" in err
    assert pairs(out)["converged"] == "False"


@pytest.mark.parametrize("argv, code", [
    ([], 1),
    (["bound", "--c-in", "4", "--r-u", "2"], 1),
    (["simulate", "--g", "0"], 1),
    (["simulate", "--family", "square"], 1),
    (["sweep", "--vary", "kappa_ex="], 1),
    (["sweep", "--vary", "bogus=1,2"], 1),
    (["optimize", "kappa-ex"], 1),
    (["simulate", "--omega-max", "0.5", "--duration", "50", "--t-max", "51"], 2),
    (["nonsense"], 1),
])
def test_exit_codes(argv, code):
    got, _, err = call(*argv)
    assert got == code
    assert err.count("\n") == 1 and err.startswith("error: ")


@pytest.mark.parametrize("text", [
    "[rates]\nbogus = 1\n",
    "[weird]\ng = 1\n",
    "[pulse]\nhold = maybe\n",
    "[sweep]\nfoo = 1, 2\n",
    "not an ini file",
])
def test_config_rejects_unknown(tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    code, _, err = call("simulate", "--config", str(cfg))
    assert code == 1
    assert "SpecError" in err


def test_missing_config_file(tmp_path):
    assert call("simulate", "--config", str(tmp_path / "nope.ini"))[0] == 1


def test_verify_flags_violations(monkeypatch):
    monkeypatch.setattr(cli.bounds, "ps_upper", lambda rates: 0.0)
    code, out, err = call("verify", "--draws", "3", "--seed", "1")
    assert code == 3
    assert out.startswith("0/3 within bound")
    assert "BoundViolation" in err


def test_verify_scan():
    code, out, _ = call("verify", "--draws", "200", "--seed", "7")
    assert code == 0
    assert out.splitlines()[0] == "200/200 within bound"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cavityphoton", "bound", "--c-in", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pf_lower" in proc.stdout
