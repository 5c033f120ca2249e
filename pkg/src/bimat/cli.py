"""Command-line front end.

Verbs::

    bimat solve --input problem.json
    bimat assign --input design.json [--seed N]
    bimat second-order --input model.json
    bimat demo rendezvous --omega 1 --gamma 0.5
    bimat verify --input report.json [--tol T]

Reports are JSON (``--format json``, the default) or a plain-text rendering
of the same data.  Exit status: 0 on success, 2 for bad input or violated
preconditions, 3 for numerical failures and failed verification.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import serialization as ser
from .assignment import (assign_poles, closed_loop,
                         rendezvous_model, rendezvous_target,
                         second_order_to_complex, spectrum_error)
from .bimatrix import Bimatrix, spectrum, to_real
from .errors import NumericError, PreconditionError
from .solvers import (gsyl_residual, solve_conjugate_stein,
                      solve_conjugate_sylvester, solve_gsyl, solve_lyapunov_ct,
                      solve_lyapunov_dt, solve_stein, solve_sylvester,
                      stein_residual, sylvester_residual)
from .polyfactor import coprime_factorization

__all__ = ["main", "run", "build_parser", "EXIT_OK", "EXIT_INPUT", "EXIT_NUMERIC"]

log = logging.getLogger("bimat")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
DEFAULT_TOL = 1e-8
# reference free parameters of the rendezvous design
RENDEZVOUS_Z1 = [[1 + 1j, 0, 0]]
RENDEZVOUS_Z2 = [[0, 0, 1]]


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def _bim(req, key):
    return ser.decode_bimatrix(ser._require(req, key, "problem"), key)


def _mat(req, key):
    return ser.decode_matrix(ser._require(req, key, "problem"), key)


def _solve_problem(req, tol):
    """Solve one equation; returns ``(solution_json, residual, diagnostics)``."""
    kind = ser._require(req, "kind", "problem")
    tol = tol if tol is not None else 1e-9
    if kind in ("sylvester", "stein"):
        a, f, c = _bim(req, "A"), _bim(req, "F"), _bim(req, "C")
        fn = solve_sylvester if kind == "sylvester" else solve_stein
        x, info = fn(a, f, c, tol=tol, full_output=True)
        return (ser.encode_bimatrix(x), info.residual,
                {"spectral_gap": info.gap, "prefactor_condition": info.prefactor_condition})
    if kind in ("lyapunov_ct", "lyapunov_dt"):
        a, q = _bim(req, "A"), _bim(req, "Q")
        if kind == "lyapunov_ct":
            p = solve_lyapunov_ct(a, q)
            res = sylvester_residual(a.H, -a, -q, p)
        else:
            p = solve_lyapunov_dt(a, q)
            res = stein_residual(a.H, a, q, p)
        return ser.encode_bimatrix(p), res, {"spectral_radius": spectrum(a).rho,
                                             "spectral_abscissa": spectrum(a).mu}
    if kind in ("conj_sylvester", "conj_stein"):
        a2, f2, c2 = _mat(req, "A2"), _mat(req, "F2"), _mat(req, "C2")
        if kind == "conj_sylvester":
            x = solve_conjugate_sylvester(a2, f2, c2, tol=tol)
        else:
            x = solve_conjugate_stein(a2, f2, c2, tol=tol)
        return ser.encode_matrix(x), _conj_residual(kind, a2, f2, c2, x), {}
    if kind == "gsyl":
        sys_ = ser.decode_system(ser._require(req, "system", "problem"))
        f = _bim(req, "F")
        p = f.shape[0]
        z1 = _mat(req, "Z1") if "Z1" in req else np.zeros((sys_.m, p))
        z2 = _mat(req, "Z2") if "Z2" in req else np.zeros((sys_.m, p))
        fac = coprime_factorization(sys_)
        sol = solve_gsyl(sys_, f, fac, z1, z2, tol=tol)
        return ({"X": ser.encode_bimatrix(sol.x), "Y": ser.encode_bimatrix(sol.y)},
                sol.residual, {"x_condition": sol.condition,
                               "factorization_degree": fac.degree})
    raise PreconditionError(f"unknown problem kind {kind!r}")


def _conj_residual(kind, a2, f2, c2, x):
    if kind == "conj_sylvester":
        r = a2.conj() @ x - x.conj() @ f2 - c2
        scale = (np.linalg.norm(a2) + np.linalg.norm(f2)) * np.linalg.norm(x) + np.linalg.norm(c2)
    else:
        r = x - a2 @ x.conj() @ f2 - c2
        scale = (1 + np.linalg.norm(a2) * np.linalg.norm(f2)) * np.linalg.norm(x) + np.linalg.norm(c2)
    return float(np.linalg.norm(r) / max(scale, np.finfo(float).tiny))


def cmd_solve(req, args):
    sol, res, diag = _solve_problem(req, args.tol)
    return {"kind": "solution", "problem": req, "solution": sol,
            "residual": res, "diagnostics": diag}


def _system_from_request(req):
    entry = ser._require(req, "system", "request")
    if isinstance(entry, dict) and "second_order" in entry:
        m2 = ser.decode_second_order(entry["second_order"], "system.second_order")
        return second_order_to_complex(m2, entry.get("input_mode", "paired"))
    return ser.decode_system(entry)


def _design_report(sys_, target, design, seed, extra=None):
    rep = design.report
    out = {
        "kind": "design",
        "system": ser.encode_system(sys_),
        "target": ser.encode_target(target),
        "seed": seed,
        "k": ser.encode_bimatrix(design.k),
        "real_gain": ser.encode_real_matrix(design.real_gain),
        "x": ser.encode_bimatrix(design.x),
        "closed_loop_spectrum": ser.encode_spectrum(rep.closed_loop_spectrum),
        "spectrum_error": rep.spectrum_error,
        "raw_spectrum_error": rep.raw_spectrum_error,
        "similarity_residual": rep.similarity_residual,
        "gsyl_residual": rep.gsyl_residual,
        "x_condition": rep.x_condition,
        "draws_used": rep.draws_used,
    }
    if extra:
        out.update(extra)
    return out


def cmd_assign(req, args):
    sys_ = _system_from_request(req)
    target = ser.decode_target(ser._require(req, "target", "request"), sys_.time_domain)
    seed = args.seed if args.seed is not None else int(req.get("seed", 0))
    z = None
    if "Z1" in req or "Z2" in req:
        p = sys_.n
        z1 = _mat(req, "Z1") if "Z1" in req else np.zeros((sys_.m, p))
        z2 = _mat(req, "Z2") if "Z2" in req else np.zeros((sys_.m, p))
        z = (z1, z2)
    design = assign_poles(sys_, target, z=z, seed=seed)
    return _design_report(sys_, target, design, seed)


def cmd_second_order(req, args):
    entry = req.get("second_order", req)
    m2 = ser.decode_second_order(entry)
    mode = req.get("input_mode", "paired")
    sys_ = second_order_to_complex(m2, mode)
    ca, cb = m2.companion()
    err, _ = spectrum_error(spectrum(sys_.a).eigenvalues, np.linalg.eigvals(ca))
    return {"kind": "second_order", "input_mode": mode, "system": ser.encode_system(sys_),
            "companion_mismatch": float(np.linalg.norm(to_real(sys_.a) - ca)),
            "spectrum": ser.encode_spectrum(spectrum(sys_.a).eigenvalues),
            "spectrum_error": err}


def rendezvous_gain_formula(omega, gamma):
    """Closed-form gain of the reference rendezvous design at ``(omega, gamma)``."""
    w, g, j = omega, gamma, 1j
    k11 = (g**4 * j - 12 * g**3 * w**2 + 19 * g**2 * w**2 * j + g**2
           - 42 * g * w**4 + 6 * g * w**2 * j + 4 * w**2)
    k21 = (-g**4 * j + 12 * g**3 * w**2 - 19 * g**2 * w**2 * j + g**2
           + 42 * g * w**4 + 6 * g * w**2 * j + 4 * w**2)
    k12 = g**4 + g**2 * w**2 - g**2 * j + 12 * g * w**2 * j - w**2 * j
    k22 = g**4 + g**2 * w**2 + g**2 * j + 12 * g * w**2 * j + w**2 * j
    k1 = [[k11 / (12 * w**3), k12 / (6 * w**2), -g * (2 + g * j) / 2]]
    k2 = [[-k21 / (12 * w**3), k22 / (6 * w**2), g * (2 + g * j) / 2]]
    return Bimatrix(k1, k2)


def cmd_demo(args):
    if args.name != "rendezvous":
        raise PreconditionError(f"unknown demo {args.name!r}")
    omega, gamma = args.omega, args.gamma
    if not gamma > 0:
        raise PreconditionError(f"gamma must be positive, got {gamma}")
    sys_ = second_order_to_complex(rendezvous_model(omega))
    target = rendezvous_target(omega, gamma)
    seed = args.seed if args.seed is not None else 0
    if args.random_z:
        design = assign_poles(sys_, target, seed=seed)
        extra = {}
    else:
        design = assign_poles(sys_, target, z=(np.array(RENDEZVOUS_Z1), np.array(RENDEZVOUS_Z2)))
        expected = rendezvous_gain_formula(omega, gamma)
        err = np.max(np.abs(np.concatenate([(design.k.p1 - expected.p1).ravel(),
                                            (design.k.p2 - expected.p2).ravel()]))
                     / np.abs(np.concatenate([expected.p1.ravel(), expected.p2.ravel()])))
        extra = {"golden": {"k_expected": ser.encode_bimatrix(expected),
                            "max_relative_error": float(err)}}
    extra["open_loop_spectrum"] = ser.encode_spectrum(spectrum(sys_.a).eigenvalues)
    return _design_report(sys_, target, design, seed, extra)


def cmd_verify(report, args):
    """Recheck a stored report; returns ``(summary, passed)``."""
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    kind = ser._require(report, "kind", "report")
    checks = {}
    if kind == "design":
        sys_ = ser.decode_system(report["system"])
        target = ser.target_from_report(report["target"])
        k = ser.decode_bimatrix(report["k"], "k")
        x = ser.decode_bimatrix(report["x"], "x")
        gain = ser.decode_real_matrix(report["real_gain"], "real_gain")
        acl = to_real(closed_loop(sys_, k))
        xr = to_real(x)
        scale = max(np.linalg.norm(target.f_real), np.linalg.norm(acl), 1.0)
        checks["similarity_residual"] = float(
            np.linalg.norm(np.linalg.solve(xr, acl @ xr) - target.f_real) / scale)
        checks["real_gain_mismatch"] = float(
            np.linalg.norm(gain - to_real(k)) / max(np.linalg.norm(gain), 1.0))
        checks["spectrum_error"], _ = spectrum_error(np.linalg.eigvals(acl), target.gamma_set)
    elif kind == "solution":
        problem = report["problem"]
        pk = problem["kind"]
        sol = report["solution"]
        if pk in ("sylvester", "stein"):
            a, f, c = _bim(problem, "A"), _bim(problem, "F"), _bim(problem, "C")
            x = ser.decode_bimatrix(sol, "solution")
            fn = sylvester_residual if pk == "sylvester" else stein_residual
            checks["residual"] = fn(a, f, c, x)
        elif pk in ("lyapunov_ct", "lyapunov_dt"):
            a, q = _bim(problem, "A"), _bim(problem, "Q")
            p = ser.decode_bimatrix(sol, "solution")
            checks["residual"] = (sylvester_residual(a.H, -a, -q, p) if pk == "lyapunov_ct"
                                  else stein_residual(a.H, a, q, p))
        elif pk in ("conj_sylvester", "conj_stein"):
            x = ser.decode_matrix(sol, "solution")
            checks["residual"] = _conj_residual(
                pk, _mat(problem, "A2"), _mat(problem, "F2"), _mat(problem, "C2"), x)
        elif pk == "gsyl":
            sys_ = ser.decode_system(problem["system"])
            x = ser.decode_bimatrix(sol["X"], "solution.X")
            y = ser.decode_bimatrix(sol["Y"], "solution.Y")
            checks["residual"] = gsyl_residual(sys_.a, sys_.b, _bim(problem, "F"), x, y)
        else:
            raise PreconditionError(f"unknown problem kind {pk!r}")
    elif kind == "second_order":
        sys_ = ser.decode_system(report["system"])
        checks["spectrum_error"], _ = spectrum_error(
            spectrum(sys_.a).eigenvalues, ser.decode_spectrum(report["spectrum"]))
    else:
        raise PreconditionError(f"cannot verify a report of kind {kind!r}")
    failed = [name for name, v in checks.items() if not v <= tol]
    summary = {"kind": "verification", "report_kind": kind, "tolerance": tol,
               "checks": checks, "passed": not failed, "failed": failed}
    return summary, not failed


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _tolerance(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tolerance {text!r}")
    if not 0 < v <= 1e-2:
        raise argparse.ArgumentTypeError("tolerance must lie in (0, 1e-2]")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bimat", description="Bimatrix equation solvers and pole assignment.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--tol", type=_tolerance, default=None,
                        help="tolerance override, in (0, 1e-2]")
    common.add_argument("--seed", type=int, default=None, help="seed for random draws")
    common.add_argument("--format", choices=("json", "text"), default="json")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (("solve", "solve one bimatrix equation"),
                       ("assign", "pole assignment design"),
                       ("second-order", "convert a second-order model"),
                       ("verify", "recheck a stored report")):
        p = sub.add_parser(verb, parents=[common], help=text)
        p.add_argument("--input", "-i", required=True, help="JSON file, or - for stdin")
    demo = sub.add_parser("demo", parents=[common], help="reproduce a worked example")
    demo.add_argument("name", choices=("rendezvous",))
    demo.add_argument("--omega", type=float, default=1.0, help="orbit rate")
    demo.add_argument("--gamma", type=float, default=0.5, help="closed-loop decay rate")
    demo.add_argument("--random-z", action="store_true",
                      help="draw Z at random instead of the reference choice")
    return parser


def _read_json(path):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise PreconditionError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise PreconditionError(
            f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def render_text(obj, indent=0):
    """Plain-text view of a JSON-ready report."""
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and not _is_scalar_list(v):
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_text_value(v)}")
    elif isinstance(obj, list):
        for v in obj:
            lines.append(f"{pad}{_text_value(v)}" if _is_scalar_list(v) or not isinstance(v, (dict, list))
                         else render_text(v, indent + 1))
    else:
        lines.append(pad + _text_value(obj))
    return "\n".join(lines)


def _is_scalar_list(v):
    return isinstance(v, list) and all(
        not isinstance(e, (dict, list)) or (isinstance(e, list) and len(e) == 2
                                            and not isinstance(e[0], (list, dict)))
        for e in v)


def _text_value(v):
    if isinstance(v, float):
        return "%.10g" % (v + 0.0)
    if isinstance(v, list):
        if len(v) == 2 and all(isinstance(e, (int, float)) for e in v):
            return "%.10g%+.10gj" % (v[0] + 0.0, v[1] + 0.0)
        return "[" + ", ".join(_text_value(e) for e in v) + "]"
    return str(v).lower() if isinstance(v, bool) else str(v)


def _emit(report, args):
    text = ser.dumps(report) if args.format == "json" else render_text(report) + "\n"
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise PreconditionError(f"cannot write {args.output}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def run(argv=None):
    """Parse ``argv``, execute the verb and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.verb == "demo":
            report, ok = cmd_demo(args), True
        else:
            req = _read_json(args.input)
            if args.verb == "verify":
                report, ok = cmd_verify(req, args)
            else:
                handler = {"solve": cmd_solve, "assign": cmd_assign,
                           "second-order": cmd_second_order}[args.verb]
                report, ok = handler(req, args), True
        _emit(report, args)
    except PreconditionError as exc:
        print(f"bimat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"bimat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KeyError, TypeError, ValueError) as exc:
        # structurally wrong reports (missing or mistyped fields)
        print(f"bimat: error: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not ok:
        failed = ", ".join(f"{k}={report['checks'][k]:.3e}" for k in report["failed"])
        print(f"bimat: verification failed: {failed} (tol {report['tolerance']:g})",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    level = os.environ.get("BIMAT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
