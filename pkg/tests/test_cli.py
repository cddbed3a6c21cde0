import json
import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "vnoether.cli", *args],
        capture_output=True, text=True, cwd=ROOT, env=env)


def test_el_text():
    res = run_cli("el", str(MODELS / "maxwell2.vln"))
    assert res.returncode == 0
    assert "A0: A0_{,11} - A1_{,01}" in res.stdout
    assert "A1: -A0_{,01} + A1_{,00}" in res.stdout


def test_el_scalar():
    res = run_cli("el", str(MODELS / "scalar_shift.vln"))
    assert res.returncode == 0
    assert "phi: -phi_{,00} + psi_{,0}" in res.stdout


def test_el_single_field_and_missing_field():
    res = run_cli("el", str(MODELS / "maxwell2.vln"), "--field", "A0")
    assert res.returncode == 0
    assert "A1:" not in res.stdout
    bad = run_cli("el", str(MODELS / "maxwell2.vln"), "--field", "nope")
    assert bad.returncode == 2


def test_parse_error_exit_code():
    bad = MODELS / "broken.vln"
    bad.write_text("dim )\n")
    try:
        res = run_cli("el", str(bad))
        assert res.returncode == 2
        assert "error" in res.stderr
    finally:
        bad.unlink()


def test_missing_file_exit_code():
    res = run_cli("el", str(MODELS / "does_not_exist.vln"))
    assert res.returncode == 2


def test_check_identity():
    res = run_cli("check-identity", str(MODELS / "maxwell2.vln"), "gauge")
    assert res.returncode == 0
    assert "identity gauge: pass" in res.stdout
    unknown = run_cli("check-identity", str(MODELS / "maxwell2.vln"), "zzz")
    assert unknown.returncode == 2


def test_check_identity_failure(tmp_path):
    bad = tmp_path / "bad.vln"
    bad.write_text("""
dim 1
field phi even
lagrangian (1/2)*d[0](phi)^2
identity wrong: 1*EL(phi)
""")
    res = run_cli("check-identity", str(bad), "wrong")
    assert res.returncode == 1
    assert "fail" in res.stdout
    assert "residual" in res.stdout


def test_gauge_symmetry_command():
    res = run_cli("gauge-symmetry", str(MODELS / "maxwell2.vln"), "gauge")
    assert res.returncode == 0
    assert "A0: -c_{,0}" in res.stdout
    assert "A1: -c_{,1}" in res.stdout


def test_gauge_symmetry_refusal(tmp_path):
    bad = tmp_path / "bad.vln"
    bad.write_text("""
dim 1
field phi even
ghost c odd for wrong
lagrangian (1/2)*d[0](phi)^2
identity wrong: 1*EL(phi)
""")
    res = run_cli("gauge-symmetry", str(bad), "wrong")
    assert res.returncode == 1
    assert "refusing" in res.stdout


def test_superpotential_command():
    res = run_cli("superpotential", str(MODELS / "maxwell2.vln"), "gauge")
    assert res.returncode == 0
    assert "U^01: -A0_{,1}*c + A1_{,0}*c" in res.stdout
    assert "w[A0,(),mu=0]: -c" in res.stdout
    assert "reconstruction: True" in res.stdout


def test_superpotential_json_schema():
    res = run_cli("superpotential", str(MODELS / "maxwell2.vln"), "gauge",
                  "--format", "json")
    assert res.returncode == 0
    report = json.loads(res.stdout)
    payload = [s for s in report["steps"]
               if s["name"] == "superpotential"][0]["payload"]
    assert set(payload) == {"W", "U", "W_components", "checks",
                            "remainder_witness"}
    row = payload["W"][0]
    assert set(row) == {"field", "index", "mu", "coefficient"}
    mono = row["coefficient"]["monomials"][0]
    assert set(mono) == {"coeff", "even", "odd"}


def test_superpotential_corrupted_current():
    res = run_cli("superpotential", str(MODELS / "maxwell2.vln"), "gauge",
                  "--debug-corrupt-current")
    assert res.returncode == 1
    assert "equation" in res.stdout


def test_superpotential_by_symmetry_name():
    res = run_cli("superpotential", str(MODELS / "scalar_shift.vln"), "shift")
    assert res.returncode == 0
    assert "reconstruction: True" in res.stdout


def test_verify_all_models():
    for model in sorted(MODELS.glob("*.vln")):
        res = run_cli("verify", str(model))
        assert res.returncode == 0, (model, res.stdout, res.stderr)
        assert "fail" not in res.stdout


def test_verify_json_determinism():
    for model in sorted(MODELS.glob("*.vln")):
        first = run_cli("verify", str(model), "--format", "json")
        second = run_cli("verify", str(model), "--format", "json")
        assert first.returncode == 0
        assert first.stdout == second.stdout
        report = json.loads(first.stdout)
        assert report["format_version"] == 1
        assert all(step["status"] == "pass" for step in report["steps"])


def test_bound_exhaustion_exit_code(tmp_path):
    # a genuine symmetry whose witness needs degree 2 is out of reach at
    # ansatz degree 1
    model = tmp_path / "m.vln"
    model.write_text("""
dim 1
field phi even
lagrangian (1/2)*d[0](phi)^2
symmetry translate: phi <- d[0](phi)
""")
    res = run_cli("superpotential", str(model), "translate",
                  "--ansatz-degree", "1")
    assert res.returncode == 3
    ok = run_cli("superpotential", str(model), "translate")
    assert ok.returncode in (0, 1)


def test_verify_empty_model(tmp_path):
    model = tmp_path / "empty.vln"
    model.write_text("")
    res = run_cli("verify", str(model))
    assert res.returncode == 0


def test_verify_false_identity(tmp_path):
    model = tmp_path / "false.vln"
    model.write_text("""
dim 1
field phi even
lagrangian (1/2)*d[0](phi)^2
identity wrong: 1*EL(phi)
""")
    res = run_cli("verify", str(model))
    assert res.returncode == 1
    assert "identity wrong: fail" in res.stdout


def test_jet_cap_env(tmp_path):
    model = tmp_path / "m.vln"
    model.write_text("""
dim 1
field phi even
lagrangian (1/2)*d[0](d[0](d[0](phi)))^2
""")
    res = run_cli("verify", str(model), env_extra={"VNOETHER_JET_CAP": "4"})
    assert res.returncode == 3
    ok = run_cli("verify", str(model), env_extra={"VNOETHER_JET_CAP": "8"})
    assert ok.returncode == 0
