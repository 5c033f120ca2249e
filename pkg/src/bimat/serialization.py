"""JSON wire format.

Complex scalars are ``[re, im]``, matrices are row-major nested lists and a
bimatrix is ``{"p1": ..., "p2": ...}``.  :func:`dumps` writes floats with 17
significant digits in insertion order, so equal inputs give byte-identical
output.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .assignment import TargetSpectrum, build_target
from .bimatrix import Bimatrix
from .errors import DimensionError, InputError
from .models import SecondOrderModel, SystemModel
from .polyfactor import PolyBimatrix

__all__ = [
    "dumps",
    "encode_complex",
    "encode_matrix",
    "encode_real_matrix",
    "encode_bimatrix",
    "encode_poly",
    "encode_system",
    "encode_target",
    "encode_spectrum",
    "decode_complex",
    "decode_matrix",
    "decode_real_matrix",
    "decode_bimatrix",
    "decode_poly",
    "decode_system",
    "decode_second_order",
    "decode_target",
    "decode_spectrum",
]


# ---------------------------------------------------------------------------
# emitter
# ---------------------------------------------------------------------------

def _number(x):
    x = float(x) + 0.0  # drops the sign of zero
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def _is_flat(v):
    return isinstance(v, list) and all(not isinstance(e, (list, dict)) for e in v)


def _emit(obj, indent, out):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f'{pad}  "{k}": ')
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        obj = list(obj)
        if _is_flat(obj) or all(_is_flat(e) and len(e) == 2 for e in obj):
            # numbers and [re, im] pairs stay on one line
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad + "  ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_number(obj))
    elif isinstance(obj, str):
        out.append(_quote(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(s):
    return json.dumps(s)


def dumps(obj):
    """Deterministic JSON text with a trailing newline."""
    out = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# encoders
# ---------------------------------------------------------------------------

def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        return [encode_complex(z) for z in m]
    return [[encode_complex(z) for z in row] for row in m]


def encode_real_matrix(m):
    m = np.asarray(m, dtype=float)
    return [[float(v) for v in row] for row in m]


def encode_bimatrix(b):
    return {"p1": encode_matrix(b.p1), "p2": encode_matrix(b.p2)}


def encode_poly(p):
    return {"coeffs": [encode_bimatrix(c) for c in p.coeffs]}


def encode_spectrum(values):
    values = np.asarray(values, dtype=complex).ravel()
    order = np.lexsort((values.imag, values.real))
    return [encode_complex(values[i]) for i in order]


def encode_system(sys):
    return {"A": encode_bimatrix(sys.a), "B": encode_bimatrix(sys.b),
            "time_domain": sys.time_domain, "structure": sys.structure}


def encode_target(t):
    return {"gamma": encode_spectrum(t.gamma_set), "f_real": encode_real_matrix(t.f_real),
            "mode": t.mode, "time_domain": t.time_domain}


# ---------------------------------------------------------------------------
# decoders
# ---------------------------------------------------------------------------

def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    return obj[key]


def decode_complex(v, where="value"):
    if isinstance(v, bool):
        raise InputError(f"{where}: expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(e, (int, float)) and not isinstance(e, bool) for e in v):
        return complex(v[0], v[1])
    raise InputError(f"{where}: expected a number or [re, im], got {v!r}")


def decode_matrix(v, where="matrix"):
    """Complex matrix from a list of rows of numbers or ``[re, im]`` pairs."""
    if not isinstance(v, list) or not v or not all(isinstance(r, list) and r for r in v):
        raise InputError(f"{where}: expected a non-empty list of non-empty rows")
    rows = [[decode_complex(e, f"{where}[{i}][{j}]") for j, e in enumerate(r)]
            for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1:
        raise DimensionError(f"{where}: rows have different lengths")
    return np.array(rows, dtype=complex)


def decode_real_matrix(v, where="matrix"):
    m = decode_matrix(v, where)
    if np.any(m.imag):
        raise InputError(f"{where}: expected real entries")
    return m.real


def decode_bimatrix(v, where="bimatrix"):
    p1 = decode_matrix(_require(v, "p1", where), f"{where}.p1")
    p2 = v.get("p2")
    p2 = np.zeros_like(p1) if p2 is None else decode_matrix(p2, f"{where}.p2")
    return Bimatrix(p1, p2)


def decode_poly(v, where="poly"):
    coeffs = _require(v, "coeffs", where)
    if not isinstance(coeffs, list) or not coeffs:
        raise InputError(f"{where}.coeffs: expected a non-empty list")
    return PolyBimatrix(tuple(decode_bimatrix(c, f"{where}.coeffs[{i}]")
                              for i, c in enumerate(coeffs)))


def decode_system(v, where="system"):
    a = decode_bimatrix(_require(v, "A", where), f"{where}.A")
    b = decode_bimatrix(_require(v, "B", where), f"{where}.B")
    return SystemModel(a, b, v.get("time_domain", "continuous"), v.get("structure"))


def decode_second_order(v, where="second_order"):
    return SecondOrderModel(
        decode_real_matrix(_require(v, "mass", where), f"{where}.mass"),
        decode_real_matrix(_require(v, "damping", where), f"{where}.damping"),
        decode_real_matrix(_require(v, "stiffness", where), f"{where}.stiffness"),
        decode_real_matrix(_require(v, "input", where), f"{where}.input"))


def decode_spectrum(v, where="gamma"):
    if not isinstance(v, list):
        raise InputError(f"{where}: expected a list")
    return np.array([decode_complex(e, f"{where}[{i}]") for i, e in enumerate(v)])


def decode_target(v, time_domain="continuous", where="target"):
    if not isinstance(v, dict):
        raise InputError(f"{where}: expected an object")
    mode = v.get("mode", "general")
    td = v.get("time_domain", time_domain)
    allow = bool(v.get("allow_unstable", False))
    if "f_real" in v:
        return build_target(f_real=decode_real_matrix(v["f_real"], f"{where}.f_real"),
                            mode=mode, time_domain=td, allow_unstable=allow)
    gamma = decode_spectrum(_require(v, "gamma", where), f"{where}.gamma")
    return build_target(gamma=gamma, mode=mode, time_domain=td, allow_unstable=allow)


def target_from_report(v):
    """Rebuild a target from its report form without re-deriving ``F``."""
    f_real = decode_real_matrix(v["f_real"], "target.f_real")
    t = build_target(f_real=f_real, mode=v.get("mode", "general"),
                     time_domain=v.get("time_domain", "continuous"), allow_unstable=True)
    return TargetSpectrum(decode_spectrum(v["gamma"], "target.gamma"), t.f_real,
                          t.f_bimatrix, t.mode, t.time_domain, t.decoupled)
