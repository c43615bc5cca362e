import subprocess
import sys

import pytest

from folpi.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_resolve_node(capsys, tmp_path):
    code, out, _ = run(capsys, "resolve", "x*y", "--out", str(tmp_path))
    assert code == 0
    graph = (tmp_path / "graph.txt").read_text()
    assert graph.count("exc") == 1 and "M 1 2" in graph
    assert (tmp_path / "report.txt").read_text() == out


def test_non_reduced_input_exits_2(capsys):
    code, _, err = run(capsys, "pi1", "y^2")
    assert code == 2 and "not reduced" in err


def test_unparseable_input_exits_2(capsys):
    assert run(capsys, "resolve", "x^^2")[0] == 2
    assert run(capsys, "saddle", "verify", "linear:x")[0] == 2


def test_irrational_tangent_exits_3(capsys):
    code, _, err = run(capsys, "resolve", "(y^2-2*x^2)^2+x^5")
    assert code == 3 and "NonRationalPoint" in err


def test_blowup_cap_exits_3(capsys):
    assert run(capsys, "resolve", "y^2-x^3", "--max-blowups", "1")[0] == 3


def test_pi1_cusp_report(capsys, tmp_path):
    code, out, _ = run(capsys, "pi1", "y^2-x^3", "--out", str(tmp_path))
    assert code == 0 and "status: PASS" in out
    assert "== abelianization\nZ\n" in out
    assert (tmp_path / "relators.csv").read_text().startswith("relator,")


def test_pi1_from_graph_file(capsys, tmp_path):
    run(capsys, "resolve", "y^3-x^4", "--out", str(tmp_path))
    code, out, _ = run(capsys, "pi1", str(tmp_path / "graph.txt"))
    assert code == 0 and "graph file" in out


def test_inconsistent_graph_file_exits_1(capsys, tmp_path):
    run(capsys, "resolve", "y^2-x^3", "--out", str(tmp_path))
    text = (tmp_path / "graph.txt").read_text().replace("M 3 6", "M 3 7")
    bad = tmp_path / "bad.txt"
    bad.write_text(text)
    code, out, _ = run(capsys, "pi1", str(bad))
    assert code == 1


def test_decompose_lists_seifert_pairs(capsys, tmp_path):
    run(capsys, "resolve", "y^2-x^3", "--out", str(tmp_path))
    code, out, _ = run(capsys, "decompose", str(tmp_path / "graph.txt"))
    assert code == 0
    assert "p=3 q=1 m=1 n=2" in out and "p=2 q=1 m=1 n=1" in out


def test_reports_are_deterministic(capsys):
    a = run(capsys, "saddle", "verify", "linear:1/3", "--seed", "7")[1]
    b = run(capsys, "saddle", "verify", "linear:1/3", "--seed", "7")[1]
    assert a == b and "seed=7" in a


def test_saddle_verify_normal_form(capsys, tmp_path):
    code, out, _ = run(capsys, "saddle", "verify", "normal:1:k=1:alpha=1/2", "--out", str(tmp_path))
    assert code == 0, out
    assert "first integral conserved" in out and "methods agree" in out
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "dulac.csv").exists()


def test_tolerance_flags_are_echoed(capsys):
    code, out, _ = run(capsys, "saddle", "verify", "linear:2", "--tol-rel", "1e-11", "--tol-abs", "1e-14")
    assert code == 0 and "tol_rel=1e-11 tol_abs=1e-14" in out
    main(["saddle", "verify", "linear:2", "--tol-rel", "1e-10", "--tol-abs", "1e-13"])
    capsys.readouterr()


def test_bad_tolerance_exits_2(capsys):
    assert run(capsys, "saddle", "verify", "linear:1", "--tol-rel", "-1")[0] == 2


def test_rabotage_sweep_linear(capsys, tmp_path):
    code, out, _ = run(capsys, "rabotage", "sweep", "linear:1", "--out", str(tmp_path))
    assert code == 0 and "slope 1.000000" in out
    assert (tmp_path / "sweep.csv").read_text().count("\n") == 6


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "folpi", "resolve", "y^2-x^3"],
                         capture_output=True, text=True, env={"FOLPI_NO_COLOR": "1", "PATH": ""})
    assert res.returncode == 0 and "\033[" not in res.stdout


@pytest.mark.parametrize("argv", [[], ["bogus"], ["saddle"]])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
