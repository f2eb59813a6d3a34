import json
import subprocess
import sys

import numpy as np
import pytest

from glauberlab.cli import main
from glauberlab.config import ConfigError, load_config
from glauberlab.potentials.table import indicator_counterexample

BASE = """
[box]
L = {L}
dimension = 1

[model]
z = {z}

[grid]
m = 6

[lattice]
m = {m}
K = 1

[dynamics]
T = 60
dt = 0.1
burn_in = 5
seed = 3

[identities]
n_functions = 3
"""


def write(tmp_path, potential, name="exp.ini", L=6.0, z=1.0, m=6, extra=""):
    path = tmp_path / name
    path.write_text(potential + BASE.format(L=L, z=z, m=m) + extra)
    return str(path)


FREE = "[potential]\nkind = zero\n"
EXP_COS = "[potential]\nkind = special\nfamily = exp\nmodulation = cos\nparams = t=1.0, a=3.0\n"
ATTRACTIVE = "[potential]\nkind = explicit\nfamily = square_well\nparams = height=-3.0, radius=1.5\nperiodize = false\n"


def run(tmp_path, cmd, cfg, *extra):
    out = tmp_path / "out"
    return main([cmd, "--config", cfg, "--out", str(out), *extra]), out


def test_check_potential_table_example_passes(tmp_path):
    code, out = run(tmp_path, "check-potential", write(tmp_path, EXP_COS, extra="[checks]\nchecks = pd, beta\n"))
    assert code == 0
    rep = json.loads((out / "check_potential.json").read_text())
    assert rep["passed"] and len(rep["config_hash"]) == 64


def test_check_potential_indicator_fails(tmp_path):
    indicator_counterexample().to_csv(tmp_path / "ind.csv")
    pot = f"[potential]\nkind = sampled\nfile = {tmp_path / 'ind.csv'}\n"
    code, out = run(tmp_path, "check-potential", write(tmp_path, pot, L=40.0))
    assert code == 1
    rep = json.loads((out / "check_potential.json").read_text())
    witness = rep["reports"][0]["witness"]
    assert witness["min_fourier"] < 0 and "frequency_index" in witness


@pytest.mark.parametrize("text", [
    "[potential]\nkind = nonsense\n",
    "[box]\nL = 4\n",
    "[potential]\nkind = special\nfamily = gauss\nparams = t=abc\n",
    "this is not an ini file",
])
def test_malformed_config_exits_2(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    assert main(["gap", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["gap", "--config", str(tmp_path / "absent.ini")]) == 2


def test_unknown_subcommand_exits_2():
    assert main(["frobnicate"]) == 2


def test_verify_identities_free(tmp_path):
    code, out = run(tmp_path, "verify-identities", write(tmp_path, FREE))
    assert code == 0
    rep = json.loads((out / "identities.json").read_text())
    assert all(r["residual"] <= 1e-12 for r in rep["residuals"] if r["passed"] is not None)


def test_verify_identities_special_m8(tmp_path):
    code, _ = run(tmp_path, "verify-identities", write(tmp_path, EXP_COS, L=8.0, m=8))
    assert code == 0


def test_verify_identities_zero_tolerance_fails(tmp_path):
    code, _ = run(tmp_path, "verify-identities", write(tmp_path, EXP_COS), "--tol", "0")
    assert code == 1


def test_gap_free(tmp_path):
    code, out = run(tmp_path, "gap", write(tmp_path, FREE, z=0.5))
    assert code == 0
    rep = json.loads((out / "gap.json").read_text())
    assert rep["verdict"] == "pass"
    assert rep["report"]["gap"] == pytest.approx(1.5, abs=1e-10)
    assert rep["report"]["certified_c"] == 1.0
    ev = np.loadtxt(out / "eigenvalues.csv", delimiter=",", skiprows=1)
    assert ev.shape == (64, 2)


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0, 4.0])
def test_gap_special_class_activity_independent(tmp_path, z):
    pot = "[potential]\nkind = table\ntable = gauss_cos\n"
    code, out = run(tmp_path, "gap", write(tmp_path, pot, L=5.0, z=z, m=10))
    assert code == 0
    assert json.loads((out / "gap.json").read_text())["report"]["certified_c"] >= 1 - 1e-8


def test_gap_attractive_reports_no_certificate(tmp_path):
    with pytest.warns(UserWarning):
        code, out = run(tmp_path, "gap", write(tmp_path, ATTRACTIVE, z=4.0))
    assert code == 0
    assert json.loads((out / "gap.json").read_text())["verdict"] == "no certificate"


def test_sum_potential_splits_roles(tmp_path):
    pot = ("[potential]\nkind = sum\ncomponents = well, core\n"
           "[potential.well]\nkind = explicit\nfamily = square_well\nparams = height=1.0, radius=1.0\nperiodize = false\n"
           "[potential.core]\nkind = special\nfamily = gauss\nparams = t=1.0, a=0.0\n")
    code, out = run(tmp_path, "gap", write(tmp_path, pot, z=0.1))
    assert code == 0
    rep = json.loads((out / "gap.json").read_text())["report"]
    assert 0 < rep["bound_c"] < 1


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, EXP_COS)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "events_0.bin").read_bytes() == (tmp_path / "b" / "events_0.bin").read_bytes()
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "99"])
    assert (tmp_path / "c" / "events_0.bin").read_bytes() != (tmp_path / "a" / "events_0.bin").read_bytes()


def test_estimate_gap_lattice_mode(tmp_path):
    text = FREE + BASE.format(L=6.0, z=0.5, m=6).replace("seed = 3", "seed = 3\nmode = lattice\nevents = 200000")
    (tmp_path / "lat.ini").write_text(text)
    code, out = run(tmp_path, "estimate-gap", str(tmp_path / "lat.ini"))
    assert code == 0
    rep = json.loads((out / "estimate_gap.json").read_text())
    assert rep["exact_gap"] == pytest.approx(1.5)
    assert rep["relative_error"] < 0.2


def test_config_hash_changes_with_content(tmp_path):
    a = load_config(write(tmp_path, FREE, name="a.ini", z=1.0))
    b = load_config(write(tmp_path, FREE, name="b.ini", z=2.0))
    assert a.hash() != b.hash()
    assert a.hash() == load_config(write(tmp_path, FREE, name="c.ini", z=1.0)).hash()


def test_nonpositive_tolerance_in_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, FREE, extra="[checks]\ntol_gap = 0\n"))


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, FREE)
    proc = subprocess.run([sys.executable, "-m", "glauberlab.cli", "gap", "--config", cfg, "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "verdict=pass" in proc.stdout
