import json
from pathlib import Path

import pytest

from gcfol.cli import main, resolve_scenario_path, run
from gcfol.scenario_io import BUNDLED, bundled_path, load_bundled

GOLDEN = Path(__file__).parent / "golden"
EXPECTED_EXIT = {
    "t4_over_c": 0,
    "closed_extension": 0,
    "v_omega_halfplane": 0,
    "v_omega_torus": 1,
    "symplectic_bundle": 0,
    "flag_pointwise": 2,
    "flat_bundle": 0,
}


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return out, code


def test_every_bundled_scenario_has_a_pinned_verdict():
    assert set(EXPECTED_EXIT) == set(BUNDLED)


@pytest.mark.parametrize("name", sorted(EXPECTED_EXIT))
def test_decide_golden(capsys, name):
    out, code = _run(capsys, "decide", f"{name}.scn")
    assert code == EXPECTED_EXIT[name]
    assert out + f"exit={code}\n" == (GOLDEN / f"decide_{name}.txt").read_text()


def test_decide_bundled_example_line(capsys):
    out, code = _run(capsys, "decide", "t4_over_c.scn")
    assert code == 0
    assert out.splitlines()[0] == (
        "GeneralizedComplex; H^{0,1;2} = (-1/2*i)*dzb1^eta1^eta3 (+conjugate); CalabiYau: yes")


def test_decide_obstructed_line(capsys):
    out, code = _run(capsys, "decide", "v_omega_torus.scn")
    assert code == 1
    assert out.startswith("Obstructed(A); class != 0")


def test_pluriharmonic_golden(capsys):
    out, code = _run(capsys, "pluriharmonic", "flat_bundle.scn")
    assert (out, code) == ("pluriharmonic: yes; flat: yes\n", 0)
    assert out + "exit=0\n" == (GOLDEN / "pluriharmonic_flat_bundle.txt").read_text()


def test_json_report_is_deterministic_and_golden(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _run(capsys, "decide", "t4_over_c.scn", "--json", str(a))
    _run(capsys, "decide", "t4_over_c.scn", "--json", str(b))
    assert a.read_text() == b.read_text() == (GOLDEN / "decide_t4_over_c.json").read_text()
    doc = json.loads(a.read_text())
    assert doc["scenario"]["hash"] == load_bundled("t4_over_c").fingerprint()
    assert doc["settings"] == {"seed": 0, "trials": 20, "degree_cap": None}
    for key in ("verdict", "stage", "phi", "classes", "alpha", "beta", "H", "checks", "notes", "pointwise"):
        assert key in doc


def test_other_commands(capsys):
    out, code = _run(capsys, "equivariance", "t4_over_c.scn")
    assert (out, code) == ("equivariance: yes (2 generators)\n", 0)
    out, code = _run(capsys, "cohomology", "t4_over_c.scn")
    assert code == 0 and "Gauss-Manin [omega] = [(1/2)*dz1^eta1^eta3 + (1/2)*dzb1^eta1^eta3]" in out
    out, code = _run(capsys, "relations", "symplectic_bundle.scn", "--trials", "3", "--seed", "2")
    assert code == 0 and out.startswith("relations: pass")
    out, code = _run(capsys, "spinor-check", "flag_pointwise.scn", "--trials", "2")
    assert code == 0 and out.startswith("spinor-check: pass; 5 points")
    out, code = _run(capsys, "pluriharmonic", "v_omega_torus.scn")
    assert (out, code) == ("pluriharmonic: no; flat: no\n", 1)


def test_flag_pointwise_states_the_limitation(capsys):
    out, code = _run(capsys, "decide", "flag_pointwise.scn")
    assert code == 2
    assert "(-4)*dz1^dz2^dzb1^dzb2" in out
    assert "not reproducible" in out


def test_seed_changes_are_reported():
    _, _, doc = run("relations", load_bundled("flat_bundle"), seed=5, trials=2)
    assert doc["settings"]["seed"] == 5 and doc["trials"] == 2


def test_error_exit_codes(tmp_path, capsys):
    assert main(["decide", str(tmp_path / "missing.scn")]) == 3
    bad = tmp_path / "bad.scn"
    bad.write_text("[bundle\n")
    assert main(["decide", str(bad)]) == 3
    assert "line 1" in capsys.readouterr().err
    odd = tmp_path / "odd.scn"
    odd.write_text('[bundle]\nfibre_rank = 3\nbase = "flat"\nbase_dim = 2\n')
    assert main(["decide", str(odd)]) == 3
    assert "fibre rank even" in capsys.readouterr().err


def test_scenario_resolution(tmp_path):
    assert resolve_scenario_path("t4_over_c") == bundled_path("t4_over_c")
    own = tmp_path / "t4_over_c.scn"
    own.write_text(bundled_path("t4_over_c").read_text())
    assert resolve_scenario_path(str(own)) == own
