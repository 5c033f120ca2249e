import json

import numpy as np
import pytest

from bimat.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, run


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _run_json(args, capsys):
    code = run(args)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


SCALAR_SYLVESTER = {"kind": "sylvester", "A": {"p1": [[2]], "p2": [[0]]},
                    "F": {"p1": [[0]], "p2": [[0]]}, "C": {"p1": [[1]], "p2": [[0]]}}


def test_solve_scalar_sylvester(workdir, capsys):
    code, rep, _ = _run_json(["solve", "--input", _write(workdir / "p.json", SCALAR_SYLVESTER)],
                             capsys)
    assert code == EXIT_OK
    assert rep["solution"] == {"p1": [[[0.5, 0]]], "p2": [[[0, 0]]]}


def test_demo_rendezvous_spectrum(capsys):
    code, rep, _ = _run_json(["demo", "rendezvous", "--omega", "1", "--gamma", "0.5"], capsys)
    assert code == EXIT_OK
    eigs = np.array([complex(*z) for z in rep["closed_loop_spectrum"]])
    target = np.array([-0.5, -0.5, -0.5 + 1j, -0.5 - 1j, -0.5 + 1j, -0.5 - 1j])
    # match each target value to within the defective-eigenvalue accuracy
    for t in target:
        assert np.min(np.abs(eigs - t)) < 1e-6
    assert rep["spectrum_error"] < 1e-8
    assert rep["golden"]["max_relative_error"] < 1e-9


def test_demo_random_z(capsys):
    code, rep, _ = _run_json(["demo", "rendezvous", "--omega", "0.2", "--gamma", "1",
                              "--random-z", "--seed", "4"], capsys)
    assert code == EXIT_OK and rep["seed"] == 4 and "golden" not in rep


def test_verify_round_trip_and_tamper(workdir, capsys):
    assert run(["demo", "rendezvous", "--output", "rep.json"]) == EXIT_OK
    code, summary, _ = _run_json(["verify", "--input", "rep.json"], capsys)
    assert code == EXIT_OK and summary["passed"]
    rep = json.loads((workdir / "rep.json").read_text())
    rep["k"]["p1"][0][0][0] += 1e-3
    code, summary, err = _run_json(["verify", "--input", _write(workdir / "bad.json", rep)],
                                   capsys)
    assert code == EXIT_NUMERIC
    assert "similarity_residual" in err and not summary["passed"]


def test_verify_detects_inconsistent_real_gain(workdir, capsys):
    run(["demo", "rendezvous", "--output", "rep.json"])
    rep = json.loads((workdir / "rep.json").read_text())
    rep["real_gain"][0][0] += 1.0
    code, summary, _ = _run_json(["verify", "--input", _write(workdir / "bad.json", rep)],
                                 capsys)
    assert code == EXIT_NUMERIC and summary["failed"] == ["real_gain_mismatch"]


@pytest.mark.parametrize("problem", [
    SCALAR_SYLVESTER,
    {"kind": "stein", "A": {"p1": [[0.5, 0.1], [0, 0.2]], "p2": [[0.1, 0], [0.2, 0]]},
     "F": {"p1": [[[0.3, 0.1]]]}, "C": {"p1": [[1], [[0, 1]]]}},
    {"kind": "lyapunov_ct", "A": {"p1": [[-1, 0.3], [0, -2]], "p2": [[0.1, 0], [0, 0.2]]},
     "Q": {"p1": [[1, 0], [0, 1]]}},
    {"kind": "lyapunov_dt", "A": {"p1": [[0.5]], "p2": [[0.1]]}, "Q": {"p1": [[1]]}},
    {"kind": "conj_sylvester", "A2": [[[1, 1]]], "F2": [[0.3]], "C2": [[1]]},
    {"kind": "conj_stein", "A2": [[0.5]], "F2": [[[0.1, 0.4]]], "C2": [[1]]},
    {"kind": "gsyl", "system": {"A": {"p1": [[0, 1], [0, 0]], "p2": [[0, 0], [1, 0]]},
                                "B": {"p1": [[0], [1]]}},
     "F": {"p1": [[-1, 0], [0, -2]]}, "Z1": [[1, 2]], "Z2": [[0, [0, 1]]]},
])
def test_solve_then_verify(workdir, capsys, problem):
    assert run(["solve", "--input", _write(workdir / "p.json", problem),
                "--output", "sol.json"]) == EXIT_OK
    code, summary, _ = _run_json(["verify", "--input", "sol.json"], capsys)
    assert code == EXIT_OK and summary["checks"]["residual"] < 1e-9


def test_assign_verb(workdir, capsys):
    req = {"system": {"A": {"p1": [[0, 1], [0, 0]], "p2": [[0, 0], [1, 0]]},
                      "B": {"p1": [[0], [1]]}},
           "target": {"gamma": [-1, -2, -3, -4]}}
    code, rep, _ = _run_json(["assign", "--input", _write(workdir / "a.json", req),
                              "--seed", "3"], capsys)
    assert code == EXIT_OK and rep["kind"] == "design" and rep["seed"] == 3
    assert rep["similarity_residual"] < 1e-8


def test_assign_second_order_system(workdir, capsys):
    req = {"system": {"second_order": {"mass": [[1]], "damping": [[0]], "stiffness": [[0]],
                                       "input": [[1, 0]]}},
           "target": {"gamma": [-1, -2]}}
    code, rep, _ = _run_json(["assign", "--input", _write(workdir / "a.json", req)], capsys)
    assert code == EXIT_OK and rep["spectrum_error"] < 1e-8
    # one input cannot give a diagonalizable double eigenvalue
    req["target"] = {"gamma": [-1, -1]}
    code, _, err = _run_json(["assign", "--input", _write(workdir / "a.json", req)], capsys)
    assert code == EXIT_NUMERIC and "no acceptable X" in err


def test_second_order_verb(workdir, capsys):
    req = {"mass": [[1]], "damping": [[0]], "stiffness": [[1]], "input": [[1]]}
    code, rep, _ = _run_json(["second-order", "--input", _write(workdir / "m.json", req)],
                             capsys)
    assert code == EXIT_OK and rep["companion_mismatch"] == 0
    code, summary, _ = _run_json(["verify", "--input", _write(workdir / "r.json", rep)], capsys)
    assert code == EXIT_OK


def test_determinism(workdir):
    for name in ("a.json", "b.json"):
        assert run(["demo", "rendezvous", "--random-z", "--seed", "7", "-o", name]) == EXIT_OK
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


def test_text_format(capsys):
    assert run(["demo", "rendezvous", "--format", "text"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "spectrum_error:" in out and "-0.5+1j" in out
    assert not out.lstrip().startswith("{")


def test_malformed_json(workdir, capsys):
    (workdir / "bad.json").write_text('{"kind":\n "sylvester",,}')
    assert run(["solve", "--input", "bad.json"]) == EXIT_INPUT
    assert "line 2 column" in capsys.readouterr().err


def test_input_errors(workdir, capsys):
    assert run(["solve", "--input", "missing.json"]) == EXIT_INPUT
    assert run(["solve", "--input", _write(workdir / "k.json", {"kind": "nope"})]) == EXIT_INPUT
    assert run(["solve", "--input", _write(workdir / "d.json", {"kind": "sylvester"})]) \
        == EXIT_INPUT
    assert run(["verify", "--input", "x.json", "--tol", "0.5"]) == EXIT_INPUT
    assert run(["verify", "--input", "x.json", "--tol", "0"]) == EXIT_INPUT
    assert run(["bogus"]) == EXIT_INPUT
    assert run(["demo", "rendezvous", "--gamma", "-1"]) == EXIT_INPUT
    capsys.readouterr()


def test_numeric_failure_exit(workdir, capsys):
    singular = dict(SCALAR_SYLVESTER, A={"p1": [[0]], "p2": [[0]]})
    assert run(["solve", "--input", _write(workdir / "s.json", singular)]) == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err


def test_stdin_input(monkeypatch, capsys):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(SCALAR_SYLVESTER)))
    code, rep, _ = _run_json(["solve", "--input", "-"], capsys)
    assert code == EXIT_OK and rep["residual"] == 0


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == EXIT_OK
