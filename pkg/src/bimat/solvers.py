"""Solvers for bimatrix equations.

Covered families, with ``X`` the unknown bimatrix:

* generalized Sylvester  ``A X + B Y = X F``   (complete parametric solutions)
* Sylvester              ``A X - X F = C``
* Stein                  ``X = A X F + C``
* Lyapunov               ``A^H P + P A = -Q`` and ``P = A^H P A + Q``
* conjugate Sylvester    ``conj(a2) X - conj(X) f2 = c2``
* conjugate Stein        ``X = a2 conj(X) f2 + c2``

Closed forms are the characteristic-polynomial formulas; ``oracle_solve``
is an independent brute-force reference that builds the real-linear
operator column by column.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bimatrix import (Bimatrix, from_real, multiply, power, spectrum, to_real)
from .errors import (DimensionError, InputError, NoSolutionError,
                     NoUniqueSolutionError, NumericError, PreconditionError)

__all__ = [
    "CharPoly",
    "char_poly",
    "OracleResult",
    "oracle_solve",
    "GSylSolution",
    "solve_gsyl",
    "solve_gsyl_decoupled",
    "solve_antilinear",
    "solve_sylvester",
    "solve_stein",
    "solve_stein_series",
    "solve_lyapunov_ct",
    "solve_lyapunov_dt",
    "solve_conjugate_sylvester",
    "solve_conjugate_stein",
    "sylvester_terms",
    "stein_terms",
    "SolveInfo",
    "gsyl_residual",
    "sylvester_residual",
    "stein_residual",
]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
SPECTRAL_GAP = 1e-8
ORACLE_RTOL = 1e-10
NONSINGULAR_CONDITION = 1e10
_TINY = np.finfo(float).tiny


# ---------------------------------------------------------------------------
# characteristic polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CharPoly:
    """Monic polynomial, coefficients lowest degree first."""

    coefficients: np.ndarray

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, m):
        """Evaluate at a square array or at a bimatrix (through its real form)."""
        if isinstance(m, Bimatrix):
            return from_real(self(to_real(m)))
        m = np.asarray(m)
        out = np.zeros(m.shape, dtype=np.result_type(m, self.coefficients))
        eye = np.eye(m.shape[0])
        for c in self.coefficients[::-1]:
            out = out @ m + c * eye
        return out

    def roots(self):
        return np.roots(self.coefficients[::-1])


def char_poly(b):
    """Characteristic polynomial of a bimatrix (degree ``2p``) or square array.

    For a bimatrix it is taken from the real representation, so the
    coefficients are real.  For a complex array they are real whenever the
    spectrum is closed under conjugation, up to rounding.
    """
    m = to_real(b) if isinstance(b, Bimatrix) else np.asarray(b)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"characteristic polynomial needs a square matrix, got {m.shape}")
    coeffs = np.poly(m) if m.size else np.array([1.0])
    coeffs = np.atleast_1d(coeffs)[::-1]
    if np.iscomplexobj(coeffs):
        scale = max(np.max(np.abs(coeffs)), 1.0)
        if np.max(np.abs(coeffs.imag)) <= 1e-10 * scale:
            coeffs = coeffs.real
    return CharPoly(np.array(coeffs))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OracleResult:
    """Outcome of :func:`oracle_solve`.

    ``solution`` is a Bimatrix (or a pair for ``gsyl_homog`` it is None);
    ``nullspace`` holds real parameter vectors spanning the kernel.
    """

    unique: bool
    solution: object
    nullspace_dim: int
    nullspace: np.ndarray
    residual: float
    rank: int


def _bimatrix_basis(n, p):
    """Real basis of ``n x p`` bimatrices: Re/Im of each entry of p1, then p2."""
    for part in range(2):
        for unit in (1.0, 1j):
            for i in range(n):
                for j in range(p):
                    e = np.zeros((n, p), dtype=complex)
                    e[i, j] = unit
                    z = np.zeros((n, p), dtype=complex)
                    yield Bimatrix(e, z) if part == 0 else Bimatrix(z, e)


def _flatten(b):
    return np.concatenate([b.p1.real.ravel(), b.p1.imag.ravel(),
                           b.p2.real.ravel(), b.p2.imag.ravel()])


def _unflatten(v, n, p):
    k = n * p
    p1 = v[:k].reshape(n, p) + 1j * v[k:2 * k].reshape(n, p)
    p2 = v[2 * k:3 * k].reshape(n, p) + 1j * v[3 * k:].reshape(n, p)
    return Bimatrix(p1, p2)


def oracle_solve(kind, coefficients, shape):
    """Brute-force solve of a real-linear bimatrix equation.

    The operator is assembled by applying it to each of the ``4np`` real basis
    bimatrices of the unknown, using only bimatrix multiplication.  Rank is
    decided by column-pivoted QR with tolerance ``1e-10 * ||L||``.

    Parameters
    ----------
    kind : {"sylvester", "stein", "gsyl_homog"}
        ``A X - X F = C``, ``X - A X F = C`` or ``A X + B Y - X F = 0``.
    coefficients : dict
        Bimatrices ``a``, ``f`` and ``c`` (or ``a``, ``b``, ``f``).
    shape : tuple
        ``(n, p)`` of the unknown ``X``.

    Raises
    ------
    NoSolutionError
        For an inconsistent non-homogeneous system.
    """
    n, p = shape
    a, f = coefficients["a"], coefficients["f"]
    if kind == "gsyl_homog":
        b = coefficients["b"]
        mm = b.shape[1]
        cols = []
        for e in _bimatrix_basis(n, p):
            cols.append(_flatten(multiply(a, e) - multiply(e, f)))
        for e in _bimatrix_basis(mm, p):
            cols.append(_flatten(multiply(b, e)))
        op = np.column_stack(cols)
        rhs = np.zeros(op.shape[0])
    elif kind in ("sylvester", "stein"):
        c = coefficients["c"]
        if c.shape != (n, p):
            raise DimensionError(f"C must be {n}x{p}, got {c.shape}")
        if kind == "sylvester":
            fn = lambda e: multiply(a, e) - multiply(e, f)
        else:
            fn = lambda e: e - multiply(multiply(a, e), f)
        op = np.column_stack([_flatten(fn(e)) for e in _bimatrix_basis(n, p)])
        rhs = _flatten(c)
    else:
        raise InputError(f"unknown equation kind {kind!r}")

    norm = np.linalg.norm(op, 2) if op.size else 0.0
    _, r, _ = scipy.linalg.qr(op, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > ORACLE_RTOL * max(norm, _TINY)))
    ncols = op.shape[1]
    unique = rank == ncols
    _, sv, vh = np.linalg.svd(op)
    null = vh[rank:].T if rank < ncols else np.zeros((ncols, 0))

    if kind == "gsyl_homog":
        return OracleResult(unique, None, ncols - rank, null, 0.0, rank)
    sol = np.linalg.lstsq(op, rhs, rcond=None)[0]
    res = float(np.linalg.norm(op @ sol - rhs) / max(np.linalg.norm(rhs), _TINY))
    if res > 1e-8:
        raise NoSolutionError(f"equation is inconsistent (residual {res:.3e})", res)
    return OracleResult(unique, _unflatten(sol, n, p), ncols - rank, null, res, rank)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def _rel(num, *scales):
    return float(num / max(sum(scales), _TINY))


def gsyl_residual(a, b, f, x, y):
    """Relative residual of ``A X + B Y - X F``."""
    r = to_real(multiply(a, x) + multiply(b, y) - multiply(x, f))
    return _rel(np.linalg.norm(r), a.norm() * x.norm(), b.norm() * y.norm(),
                x.norm() * f.norm())


def sylvester_residual(a, f, c, x):
    r = to_real(multiply(a, x) - multiply(x, f) - c)
    return _rel(np.linalg.norm(r), a.norm() * x.norm(), x.norm() * f.norm(), c.norm())


def stein_residual(a, f, c, x):
    r = to_real(x - multiply(multiply(a, x), f) - c)
    return _rel(np.linalg.norm(r), x.norm(), a.norm() * x.norm() * f.norm(), c.norm())


# ---------------------------------------------------------------------------
# generalized Sylvester equation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GSylSolution:
    """Solution ``(X, Y)`` of ``A X + B Y = X F`` for parameters ``(Z1, Z2)``."""

    x: Bimatrix
    y: Bimatrix
    z_used: tuple
    nonsingular_x: bool
    residual: float
    condition: float


def _as_z(z, m, p, name):
    z = np.zeros((m, p), dtype=complex) if z is None else np.array(z, dtype=complex)
    if z.ndim == 1:
        z = z.reshape(m, p) if z.size == m * p else z
    if z.shape != (m, p):
        raise DimensionError(f"{name} must be {m}x{p}, got {z.shape}")
    return z


def _finish(a, b, f, x, y, z1, z2, tol):
    res = gsyl_residual(a, b, f, x, y)
    if res > tol:
        raise NumericError(f"generalized Sylvester residual {res:.3e} exceeds {tol:g}")
    cond = np.inf
    if x.is_square:
        cond = float(np.linalg.cond(to_real(x)))
    nonsingular = bool(np.isfinite(cond) and cond < NONSINGULAR_CONDITION)
    return GSylSolution(x, y, (z1, z2), nonsingular, res, cond)


def _require_square(b, what):
    if not b.is_square:
        raise DimensionError(f"{what} must be square, got {b.shape}")


def solve_gsyl(sys, f, coprime, z1, z2=None, tol=RESIDUAL_TOL):
    """``X = sum_i N_i Z F^i``, ``Y = sum_i D_i Z F^i`` with ``Z = {Z1, Z2}``.

    Every pair ``(Z1, Z2)`` gives a solution of ``A X + B Y = X F`` and every
    solution arises this way when ``(N, D)`` is right-coprime.
    """
    if not coprime.certified:
        raise PreconditionError("the factorization has not been certified right-coprime")
    _require_square(f, "F")
    nn, mm, p = sys.n, sys.m, f.shape[0]
    if coprime.n.shape != (nn, mm):
        raise DimensionError("factorization does not match the system")
    z1 = _as_z(z1, mm, p, "Z1")
    z2 = _as_z(z2, mm, p, "Z2")
    z = Bimatrix(z1, z2)
    x = Bimatrix.zeros(nn, p)
    y = Bimatrix.zeros(mm, p)
    zf = z
    for i in range(coprime.degree + 1):
        x = x + multiply(coprime.n_coeff(i), zf)
        y = y + multiply(coprime.d_coeff(i), zf)
        zf = multiply(zf, f)
    return _finish(sys.a, sys.b, f, x, y, z1, z2, tol)


def _real_square(m, name):
    m = np.asarray(m)
    if np.iscomplexobj(m):
        if np.any(m.imag != 0):
            raise PreconditionError(f"{name} must be real")
        m = m.real
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"{name} must be a square real matrix")
    return m.astype(float)


def solve_gsyl_decoupled(sys, f11, f22, coprime, z_plus, z_minus, tol=RESIDUAL_TOL):
    """Solve through the decoupled ``+``/``-`` equations for ``F = diag(f11, f22)``.

    ``X+-`` and ``Y+-`` solve ``{A1, +-A2} X+- + {B1, +-B2} Y+- = X+- (F1 +- F2)``
    with ``F1 +- F2`` equal to ``f11`` and ``f22``.  They are recombined into
    ``X1 = (X+ + X-)/2``, ``X2 = conj(X+ - X-)/2`` (same for ``Y``).

    Returns
    -------
    (xp, yp, xm, ym), GSylSolution
    """
    if not coprime.certified:
        raise PreconditionError("the factorization has not been certified right-coprime")
    f11 = _real_square(f11, "f11")
    f22 = _real_square(f22, "f22")
    if f11.shape != f22.shape:
        raise PreconditionError("f11 and f22 must have the same size")
    nn, mm, p = sys.n, sys.m, f11.shape[0]
    zp = _as_z(z_plus, mm, p, "z_plus")
    zm = _as_z(z_minus, mm, p, "z_minus")
    npl, nmi, dpl, dmi = coprime.plus_minus()

    def half(sign):
        z, fs = (zp, f11) if sign > 0 else (zm, f22)
        same = (npl, dpl) if sign > 0 else (nmi, dmi)
        other = (nmi, dmi) if sign > 0 else (npl, dpl)
        zs, zd = z + z.conj(), z - z.conj()
        x = np.zeros((nn, p), dtype=complex)
        y = np.zeros((mm, p), dtype=complex)
        fi = np.eye(p)
        real_z = not np.any(z.imag)
        for i in range(same[0].shape[0]):
            if real_z:
                x += same[0][i] @ z @ fi
                y += same[1][i] @ z @ fi
            else:
                x += (same[0][i] @ zs + other[0][i] @ zd) @ fi / 2
                y += (same[1][i] @ zs + other[1][i] @ zd) @ fi / 2
            fi = fi @ fs
        return x, y

    xp, yp = half(+1)
    xm, ym = half(-1)
    x = Bimatrix((xp + xm) / 2, ((xp - xm) / 2).conj())
    y = Bimatrix((yp + ym) / 2, ((yp - ym) / 2).conj())
    f = Bimatrix((f11 + f22) / 2, (f11 - f22) / 2)
    z1 = (zp + zm) / 2
    z2 = ((zp - zm) / 2).conj()
    return (xp, yp, xm, ym), _finish(sys.a, sys.b, f, x, y, z1, z2, tol)


def _mpow(m, k):
    return np.linalg.matrix_power(m, k)


def solve_antilinear(sys, mode, anti, f, z1, z2=None, tol=RESIDUAL_TOL):
    """Parametric solutions of ``A X + B Y = X F`` for ``A = {0, A2}, B = {0, B2}``.

    Parameters
    ----------
    mode : {"general", "normalize", "anti_preserve"}
        ``general`` needs ``F1`` and ``F2`` real (``F`` block diagonal in its
        real form); ``normalize`` needs ``F2 = 0``; ``anti_preserve`` needs
        ``F1 = 0``.
    anti : CoprimeFactorization
        An anti-right-coprime factorization (``variant == "anti"``).
    f : Bimatrix
        ``{F1, F2}``.
    z1, z2 : complex ``m x p`` arrays
        Free parameters.  In ``general`` mode they enter through
        ``Z+- = Z1 +- conj(Z2)``.
    """
    if anti.variant != "anti" or anti.n0 is None:
        raise PreconditionError("solve_antilinear needs an anti-right-coprime factorization")
    if not anti.certified:
        raise PreconditionError("the factorization has not been certified")
    if sys.structure != "antilinear":
        raise PreconditionError("solve_antilinear needs an antilinear system")
    _require_square(f, "F")
    nn, mm, p = sys.n, sys.m, f.shape[0]
    z1 = _as_z(z1, mm, p, "Z1")
    z2 = _as_z(z2, mm, p, "Z2")
    n0, d0 = anti.n0, anti.d0
    w = n0.shape[0] - 1
    f1, f2 = f.p1, f.p2

    if mode == "general":
        if np.any(f1.imag) or np.any(f2.imag):
            raise PreconditionError("general antilinear mode needs real F1 and F2")
        zp, zm = z1 + z2.conj(), z1 - z2.conj()

        def half(z, fs, sign):
            x = np.zeros((nn, p), dtype=complex)
            y = np.zeros((mm, p), dtype=complex)
            for i in range(w + 1):
                fi = _mpow(fs, i)
                if i % 2 == 0:
                    x += n0[i] @ z @ fi
                    y += d0[i] @ z @ fi
                else:
                    x += sign * n0[i] @ z.conj() @ fi
                    y += sign * d0[i] @ z.conj() @ fi
            return x, y

        xp, yp = half(zp, (f1 + f2).real, 1.0)
        xm, ym = half(zm, (f1 - f2).real, -1.0)
        x = Bimatrix((xp + xm) / 2, ((xp - xm) / 2).conj())
        y = Bimatrix((yp + ym) / 2, ((yp - ym) / 2).conj())

    elif mode == "normalize":
        if np.any(f2):
            raise PreconditionError("normalize mode needs F2 = 0")
        x1 = np.zeros((nn, p), dtype=complex)
        y1 = np.zeros((mm, p), dtype=complex)
        x2 = np.zeros((nn, p), dtype=complex)
        y2 = np.zeros((mm, p), dtype=complex)
        for i in range(w + 1):
            fi = _mpow(f1, i)
            za, zb = (z1, z2) if i % 2 == 0 else (z2, z1)
            x1 += n0[i] @ za @ fi
            y1 += d0[i] @ za @ fi
            x2 += n0[i].conj() @ zb @ fi
            y2 += d0[i].conj() @ zb @ fi
        x, y = Bimatrix(x1, x2), Bimatrix(y1, y2)

    elif mode == "anti_preserve":
        if np.any(f1):
            raise PreconditionError("anti_preserve mode needs F1 = 0")
        g = f2.conj() @ f2
        x1 = np.zeros((nn, p), dtype=complex)
        y1 = np.zeros((mm, p), dtype=complex)
        x2 = np.zeros((nn, p), dtype=complex)
        y2 = np.zeros((mm, p), dtype=complex)
        for i in range(w + 1):
            if i % 2 == 0:
                t1 = z1 @ _mpow(g, i // 2)
                t2 = z2 @ _mpow(g, i // 2)
            else:
                t1 = z1.conj() @ f2 @ _mpow(g, (i - 1) // 2)
                t2 = z2.conj() @ f2 @ _mpow(g, (i - 1) // 2)
            x1 += n0[i] @ t1
            y1 += d0[i] @ t1
            x2 += n0[i].conj() @ t2
            y2 += d0[i].conj() @ t2
        x, y = Bimatrix(x1, x2), Bimatrix(y1, y2)
    else:
        raise InputError(f"unknown antilinear mode {mode!r}")
    return _finish(sys.a, sys.b, f, x, y, z1, z2, tol)


# ---------------------------------------------------------------------------
# Sylvester and Stein closed forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveInfo:
    """Diagnostics of a closed-form solve."""

    residual: float
    gap: float
    prefactor_condition: float


def sylvester_terms(a, f, c, count, method="recursive"):
    """``D(k) = sum_{i<k} A^i C F^(k-1-i)`` for ``k = 1..count``.

    ``method="direct"`` evaluates each sum from powers; ``"recursive"`` uses
    ``D(k+1) = A D(k) + C F^k``.
    """
    if method == "direct":
        return [sum((multiply(multiply(power(a, i), c), power(f, k - 1 - i))
                     for i in range(1, k)), multiply(c, power(f, k - 1)))
                for k in range(1, count + 1)]
    if method != "recursive":
        raise InputError(f"unknown method {method!r}")
    out = [c]
    cf = c
    for _ in range(1, count):
        cf = multiply(cf, f)
        out.append(multiply(a, out[-1]) + cf)
    return out


def stein_terms(a, f, c, count, method="recursive"):
    """``D(k) = sum_{i<k} A^i C F^i`` for ``k = 1..count``.

    ``method="recursive"`` uses ``D(k+1) = A D(k) F + C``.
    """
    if method == "direct":
        return [sum((multiply(multiply(power(a, i), c), power(f, i))
                     for i in range(1, k)), c)
                for k in range(1, count + 1)]
    if method != "recursive":
        raise InputError(f"unknown method {method!r}")
    out = [c]
    for _ in range(1, count):
        out.append(multiply(multiply(a, out[-1]), f) + c)
    return out


def _check_sylvester_shapes(a, f, c):
    _require_square(a, "A")
    _require_square(f, "F")
    if c.shape != (a.shape[0], f.shape[0]):
        raise DimensionError(
            f"C must be {a.shape[0]}x{f.shape[0]}, got {c.shape}")


def _min_gap(values):
    return float(np.min(values)) if np.size(values) else np.inf


def _closed_sylvester(ar, fr, cr):
    """Ordinary ``ar X - X fr = cr`` by the characteristic-polynomial formula."""
    beta = char_poly(fr).coefficients
    q = len(beta) - 1
    numer = np.zeros(cr.shape, dtype=np.result_type(ar, fr, cr, beta))
    dk = cr
    cf = cr
    for k in range(1, q + 1):
        numer = numer + beta[k] * dk
        cf = cf @ fr
        dk = ar @ dk + cf
    pre = CharPoly(beta)(ar)
    cond = float(np.linalg.cond(pre))
    return np.linalg.solve(pre, numer), cond


def _closed_stein(ar, fr, cr):
    """Ordinary ``X = ar X fr + cr`` by the characteristic-polynomial formula."""
    beta = char_poly(fr).coefficients
    q = len(beta) - 1
    dtype = np.result_type(ar, fr, cr, beta)
    # A^(q-k) for k = 0..q
    apow = [np.eye(ar.shape[0], dtype=dtype)]
    for _ in range(q):
        apow.append(apow[-1] @ ar)
    pre = sum(beta[k] * apow[q - k] for k in range(q + 1))
    numer = np.zeros(cr.shape, dtype=dtype)
    dk = cr
    for k in range(1, q + 1):
        numer = numer + beta[k] * (apow[q - k] @ dk)
        dk = ar @ dk @ fr + cr
    cond = float(np.linalg.cond(pre))
    return np.linalg.solve(pre, numer), cond


def solve_sylvester(a, f, c, tol=RESIDUAL_TOL, full_output=False):
    """Unique ``X`` with ``A X - X F = C``.

    Uses ``X = beta(A)^{-1} sum_{k=1}^{2p} beta_k D(k)`` where ``beta`` is the
    characteristic polynomial of ``F``; the prefactor is applied by a linear
    solve.

    Raises
    ------
    NoUniqueSolutionError
        If the spectra of ``A`` and ``F`` come within ``1e-8`` of each other.
    """
    _check_sylvester_shapes(a, f, c)
    la = spectrum(a).eigenvalues
    lf = spectrum(f).eigenvalues
    gap = _min_gap(np.abs(la[:, None] - lf[None, :]))
    if gap < SPECTRAL_GAP:
        raise NoUniqueSolutionError(
            f"spectra of A and F intersect (minimum gap {gap:.3e})", gap)
    xr, cond = _closed_sylvester(to_real(a), to_real(f), to_real(c))
    x = from_real(xr)
    res = sylvester_residual(a, f, c, x)
    info = SolveInfo(res, gap, cond)
    _check_residual(res, tol, info)
    return (x, info) if full_output else x


def solve_stein(a, f, c, tol=RESIDUAL_TOL, full_output=False):
    """Unique ``X`` with ``X = A X F + C``.

    Uses ``X = (sum_{k=0}^{2p} beta_k A^{2p-k})^{-1} sum_{k=1}^{2p} beta_k A^{2p-k} D(k)``
    with ``D(k) = sum_{i<k} A^i C F^i``.

    Raises
    ------
    NoUniqueSolutionError
        If some ``lambda_i(A) lambda_j(F)`` is within ``1e-8`` of one.
    """
    _check_sylvester_shapes(a, f, c)
    la = spectrum(a).eigenvalues
    lf = spectrum(f).eigenvalues
    gap = _min_gap(np.abs(la[:, None] * lf[None, :] - 1))
    if gap < SPECTRAL_GAP:
        raise NoUniqueSolutionError(
            f"an eigenvalue product of A and F equals one (minimum gap {gap:.3e})", gap)
    xr, cond = _closed_stein(to_real(a), to_real(f), to_real(c))
    x = from_real(xr)
    res = stein_residual(a, f, c, x)
    info = SolveInfo(res, gap, cond)
    _check_residual(res, tol, info)
    return (x, info) if full_output else x


def _check_residual(res, tol, info):
    if res > tol:
        raise NumericError(
            f"closed-form residual {res:.3e} exceeds {tol:g} "
            f"(prefactor condition {info.prefactor_condition:.3e})")


def _series(ar, fr, cr, max_terms):
    """``sum_k ar^k cr fr^k`` until two consecutive terms are below 1e-14 of the sum."""
    total = cr.copy()
    term = cr
    small = 0
    for k in range(1, max_terms + 1):
        term = ar @ term @ fr
        total = total + term
        if np.linalg.norm(term) <= 1e-14 * np.linalg.norm(total):
            small += 1
            if small == 2:
                return total, k
        else:
            small = 0
    raise NumericError(f"series did not converge within {max_terms} terms")


def _term_cap(rho):
    # the tail falls like rho^k; allow generous transient growth
    if rho <= 0:
        return 64
    return int(min(10 ** 6, 64 + 4 * np.log(1e-16) / np.log(rho)))


def solve_stein_series(a, f, c, max_terms=None):
    """``X = sum_k A^k C F^k`` for ``rho(A) rho(F) < 1``."""
    _check_sylvester_shapes(a, f, c)
    rho = spectrum(a).rho * spectrum(f).rho
    if rho >= 1:
        raise PreconditionError(
            f"series needs rho(A) rho(F) < 1, got {rho:.6g}")
    cap = _term_cap(rho) if max_terms is None else max_terms
    xr, k = _series(to_real(a), to_real(f), to_real(c), cap)
    log.debug("Stein series converged after %d terms", k)
    return from_real(xr)


def solve_lyapunov_ct(a, q):
    """``P`` with ``A^H P + P A = -Q`` for stable ``A`` (``mu(A) < 0``).

    Solved by a Schur-based Lyapunov kernel on the real representation.
    """
    _require_square(a, "A")
    if q.shape != a.shape:
        raise DimensionError(f"Q must be {a.shape}, got {q.shape}")
    mu = spectrum(a).mu
    if mu >= 0:
        raise PreconditionError(f"A is not asymptotically stable (abscissa {mu:.6g})")
    ar = to_real(a)
    pr = scipy.linalg.solve_continuous_lyapunov(ar.T, -to_real(q))
    return from_real(pr)


def solve_lyapunov_dt(a, q, max_terms=None):
    """``P = A^H P A + Q`` for ``rho(A) < 1``, summed as ``sum_k (A^H)^k Q A^k``."""
    _require_square(a, "A")
    if q.shape != a.shape:
        raise DimensionError(f"Q must be {a.shape}, got {q.shape}")
    rho = spectrum(a).rho
    if rho >= 1:
        raise PreconditionError(f"A is not Schur stable (spectral radius {rho:.6g})")
    ar = to_real(a)
    cap = _term_cap(rho * rho) if max_terms is None else max_terms
    pr, k = _series(ar.T, ar, to_real(q), cap)
    log.debug("discrete Lyapunov series converged after %d terms", k)
    return from_real(pr)


def _as_complex(m, name):
    m = np.array(m, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a matrix")
    return m


def _check_conj_shapes(a2, f2, c2):
    if a2.shape[0] != a2.shape[1] or f2.shape[0] != f2.shape[1]:
        raise DimensionError("a2 and f2 must be square")
    if c2.shape != (a2.shape[0], f2.shape[0]):
        raise DimensionError(f"c2 must be {a2.shape[0]}x{f2.shape[0]}, got {c2.shape}")


def solve_conjugate_sylvester(a2, f2, c2, tol=RESIDUAL_TOL):
    """``X`` with ``conj(a2) X - conj(X) f2 = c2``.

    Eliminating ``conj(X)`` gives the ordinary Sylvester equation
    ``(a2 conj(a2)) X - X (conj(f2) f2) = a2 c2 + conj(c2) f2``, solved by
    the characteristic-polynomial formula of ``conj(f2) f2``.
    """
    a2, f2, c2 = (_as_complex(a2, "a2"), _as_complex(f2, "f2"), _as_complex(c2, "c2"))
    _check_conj_shapes(a2, f2, c2)
    m = a2 @ a2.conj()
    nmat = f2.conj() @ f2
    gap = _min_gap(np.abs(np.linalg.eigvals(m)[:, None] - np.linalg.eigvals(nmat)[None, :]))
    if gap < SPECTRAL_GAP:
        raise NoUniqueSolutionError(
            f"a2 conj(a2) and conj(f2) f2 share an eigenvalue (gap {gap:.3e})", gap)
    x, cond = _closed_sylvester(m, nmat, a2 @ c2 + c2.conj() @ f2)
    r = a2.conj() @ x - x.conj() @ f2 - c2
    res = _rel(np.linalg.norm(r), np.linalg.norm(a2) * np.linalg.norm(x),
               np.linalg.norm(x) * np.linalg.norm(f2), np.linalg.norm(c2))
    _check_residual(res, tol, SolveInfo(res, gap, cond))
    return x


def solve_conjugate_stein(a2, f2, c2, tol=RESIDUAL_TOL, method="closed"):
    """``X`` with ``X = a2 conj(X) f2 + c2``.

    Substituting the conjugated equation gives the ordinary Stein equation
    ``X = (a2 conj(a2)) X (conj(f2) f2) + c2 + a2 conj(c2) f2``.  ``method``
    selects its closed form or, when ``rho(a2 conj(a2)) rho(conj(f2) f2) < 1``,
    its series.
    """
    a2, f2, c2 = (_as_complex(a2, "a2"), _as_complex(f2, "f2"), _as_complex(c2, "c2"))
    _check_conj_shapes(a2, f2, c2)
    m = a2 @ a2.conj()
    nmat = f2.conj() @ f2
    cc = c2 + a2 @ c2.conj() @ f2
    lm, ln = np.linalg.eigvals(m), np.linalg.eigvals(nmat)
    gap = _min_gap(np.abs(lm[:, None] * ln[None, :] - 1))
    if gap < SPECTRAL_GAP:
        raise NoUniqueSolutionError(
            f"an eigenvalue product equals one (gap {gap:.3e})", gap)
    if method == "closed":
        x, cond = _closed_stein(m, nmat, cc)
    elif method == "series":
        rho = np.max(np.abs(lm)) * np.max(np.abs(ln))
        if rho >= 1:
            raise PreconditionError(f"series needs spectral radius product < 1, got {rho:.6g}")
        x, _ = _series(m, nmat, cc, _term_cap(rho))
        cond = 1.0
    else:
        raise InputError(f"unknown method {method!r}")
    r = x - a2 @ x.conj() @ f2 - c2
    res = _rel(np.linalg.norm(r), np.linalg.norm(x),
               np.linalg.norm(a2) * np.linalg.norm(x) * np.linalg.norm(f2),
               np.linalg.norm(c2))
    _check_residual(res, tol, SolveInfo(res, gap, cond))
    return x
