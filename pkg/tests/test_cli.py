import json

import pytest

from onetwo import __version__
from onetwo.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_passes(capsys):
    code, out, err = run(capsys, "validate")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] and rep["passed"] == rep["total"]
    assert "FAIL" not in err


def test_report_header(capsys):
    code, out, _ = run(capsys, "enumerate", "--lattice", "box:1,2", "--seed", "4", "--mode", "rational")
    assert code == 0
    rep = json.loads(out)
    assert rep["version"] == __version__
    assert rep["seed"] == 4
    assert rep["mode"] == "rational"
    assert len(rep["spec_hash"]) == 16


def test_same_spec_same_bytes(tmp_path, capsys):
    argv = ["sample", "--lattice", "box:1,2", "--weights", "1,2,3", "--steps", "300", "--seed", "11"]
    run(capsys, *argv, "--out", str(tmp_path / "a"))
    run(capsys, *argv, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "sample.json").read_bytes()
    assert a == (tmp_path / "b" / "sample.json").read_bytes()
    _, other, _ = run(capsys, *argv[:-1], "12")
    assert json.loads(other)["spec_hash"] != json.loads(a)["spec_hash"]


def test_tmix_on_single_hexagon(capsys):
    code, out, _ = run(capsys, "tmix", "--boundary", "alternating")
    rep = json.loads(out)
    assert code == 0
    assert rep["in_sandwich"]
    assert rep["states"] == 2
    lo, hi = rep["sandwich"]["lower"], rep["sandwich"]["upper"]
    assert lo <= rep["t_mix"] <= hi


def test_tmix_curve_csv(tmp_path, capsys):
    run(capsys, "tmix", "--boundary", "alternating", "--curve", "5", "--out", str(tmp_path))
    rows = (tmp_path / "d_curve.csv").read_text().splitlines()
    assert rows[0] == "t,d" and len(rows) == 7


def test_guard_exit_code(capsys):
    code, _, err = run(capsys, "enumerate", "--lattice", "box:2,3", "--max-free", "5")
    assert code == 3
    assert "desk-scale guard" in err
    code, _, err = run(capsys, "check-f", "--n", "2")
    assert code == 3 and "desk-scale guard" in err


@pytest.mark.parametrize("argv", [
    ["enumerate", "--lattice", "hex:1"],
    ["enumerate", "--weights", "1,2"],
    ["enumerate", "--boundary", "no-such-file.json"],
])
def test_spec_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_boundary_file(tmp_path, capsys):
    f = tmp_path / "b.json"
    f.write_text(json.dumps({"boundary": [0, 5]}))
    code, out, _ = run(capsys, "enumerate", "--boundary", str(f))
    assert code == 0
    rep = json.loads(out)
    assert rep["boundary"] == [0, 5]
    # unit weights: the partition function counts states
    assert rep["partition_function"] == rep["states"] == 15
    f.write_text(json.dumps([2]))
    code, _, _ = run(capsys, "enumerate", "--boundary", str(f))
    assert code == 2


def test_saw_and_check_f(capsys):
    code, out, _ = run(capsys, "saw", "--kmax", "3")
    assert code == 0
    assert json.loads(out)["counts"] == [16, 240, 3552]
    code, out, _ = run(capsys, "check-f", "--a", "1", "--b", "2", "--c", "3")
    rep = json.loads(out)
    assert rep["value"] == pytest.approx(2.38420, abs=1e-5)
