"""Polynomial bimatrices and right-coprime factorizations.

Throughout, the indeterminate ``s`` is self-conjugate: conjugating a
polynomial bimatrix conjugates its coefficients only.  Under that convention
the real representation of ``sum_i P_i s^i`` is ``sum_i to_real(P_i) s^i``,
so every factorization problem reduces to a classical one for the real pair
``(to_real(A), to_real(B))``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bimatrix import Bimatrix, complex_lifting, from_real, multiply, to_real
from .errors import (CoprimenessError, DimensionError, InputError, NumericError,
                     PreconditionError, StructuralError)

__all__ = [
    "PolyBimatrix",
    "RealPolyPair",
    "CoprimeFactorization",
    "CoprimeReport",
    "eval_poly",
    "minimal_right_factorization",
    "coprime_factorization",
    "anti_coprime_factorization",
    "check_coprime",
    "rank_drop_points",
    "RANK_RTOL",
    "COPRIME_RTOL",
    "certify",
    "IDENTITY_RTOL",
]

log = logging.getLogger(__name__)

#: Relative tolerance for Krylov dependencies in the minimal basis search.
RANK_RTOL = 1e-8
#: Column-normalized ``sigma_min / sigma_max`` below this is a rank drop.
COPRIME_RTOL = 1e-10
#: Relative residual allowed in a factorization identity.
IDENTITY_RTOL = 1e-9
_N_PROBES = 16


def _trim(coeffs):
    """Drop exactly-zero leading (highest-degree) coefficients, keep at least one."""
    k = len(coeffs)
    while k > 1 and not np.any(coeffs[k - 1]):
        k -= 1
    return coeffs[:k]


def _polyval(coeffs, s):
    """Horner evaluation of a stacked coefficient array ``(deg+1, rows, cols)``."""
    out = np.zeros(coeffs.shape[1:], dtype=np.result_type(coeffs, complex))
    for c in coeffs[::-1]:
        out = out * s + c
    return out


@dataclass(frozen=True, eq=False)
class PolyBimatrix:
    """``sum_i coeffs[i] s^i`` with bimatrix coefficients, lowest degree first.

    Exactly-zero leading coefficients are trimmed unless ``padded`` is set,
    in which case the given length is kept as the formal degree.
    """

    coeffs: tuple
    padded: bool = False

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise InputError("a polynomial bimatrix needs at least one coefficient")
        shape = coeffs[0].shape
        for c in coeffs:
            if not isinstance(c, Bimatrix):
                raise InputError("coefficients must be Bimatrix instances")
            if c.shape != shape:
                raise DimensionError("all coefficients must share one shape")
        if not self.padded:
            k = len(coeffs)
            while k > 1 and not (np.any(coeffs[k - 1].p1) or np.any(coeffs[k - 1].p2)):
                k -= 1
            coeffs = coeffs[:k]
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_arrays(cls, p1, p2=None, padded=False):
        """Build from stacked component coefficients of shape ``(deg+1, n, m)``."""
        p1 = np.asarray(p1, dtype=complex)
        p2 = np.zeros_like(p1) if p2 is None else np.asarray(p2, dtype=complex)
        if p1.shape != p2.shape or p1.ndim != 3:
            raise DimensionError("component coefficient stacks must be 3-D and equal")
        return cls(tuple(Bimatrix(a, b) for a, b in zip(p1, p2)), padded)

    @classmethod
    def from_real_coeffs(cls, real, padded=False):
        return cls(tuple(from_real(r) for r in real), padded)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def shape(self):
        return self.coeffs[0].shape

    def p1_coeffs(self):
        return np.array([c.p1 for c in self.coeffs])

    def p2_coeffs(self):
        return np.array([c.p2 for c in self.coeffs])

    def real_coeffs(self):
        return np.array([to_real(c) for c in self.coeffs])

    def lifted_coeffs(self):
        return np.array([complex_lifting(c) for c in self.coeffs])

    def coefficient(self, i):
        """Coefficient ``i``; zero beyond the stored degree."""
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Bimatrix.zeros(*self.shape)

    def pad(self, degree):
        if degree < self.degree:
            raise InputError("cannot pad to a lower degree")
        extra = (Bimatrix.zeros(*self.shape),) * (degree - self.degree)
        return PolyBimatrix(self.coeffs + extra, padded=True)

    def __call__(self, s):
        return eval_poly(self, s)


def eval_poly(p, s):
    """Evaluate both components at ``s`` (Horner); ``s`` is never conjugated."""
    return _polyval(p.p1_coeffs(), s), _polyval(p.p2_coeffs(), s)


@dataclass(frozen=True, eq=False)
class RealPolyPair:
    """Real factorization ``(sI - A) N(s) = B D(s)``, coefficients lowest first."""

    n0: np.ndarray
    d0: np.ndarray
    column_degrees: tuple

    @property
    def degree(self):
        return self.d0.shape[0] - 1

    def residual(self, a, b, points=None):
        return _pair_residual(a, b, self.n0, self.d0, points)


@dataclass(frozen=True)
class CoprimeReport:
    passed: bool
    failures: tuple
    residual: float
    candidates: int = 0

    def to_json(self):
        return {"pass": self.passed,
                "failures": [[float(z.real), float(z.imag)] for z in self.failures],
                "residual": float(self.residual)}


@dataclass(frozen=True, eq=False)
class CoprimeFactorization:
    """Polynomial bimatrices ``N`` (n x m) and ``D`` (m x m) for a system ``(A, B)``.

    ``variant`` is ``general``, ``decoupled_pair`` or ``anti``; for ``anti``
    the complex pair ``(N0, D0)`` is kept in ``n0``/``d0`` as stacked
    coefficient arrays.  ``certified`` is only true once the rank test passed.
    """

    n: PolyBimatrix
    d: PolyBimatrix
    a: Bimatrix
    b: Bimatrix
    variant: str = "general"
    certified: bool = False
    report: CoprimeReport = None
    n0: np.ndarray = field(default=None, repr=False)
    d0: np.ndarray = field(default=None, repr=False)
    padded: bool = False

    def __post_init__(self):
        if self.variant not in ("general", "decoupled_pair", "anti"):
            raise InputError(f"unknown factorization variant {self.variant!r}")
        nn, mm = self.n.shape
        if self.d.shape != (mm, mm):
            raise DimensionError(f"D must be {mm}x{mm}, got {self.d.shape}")
        if self.a.shape != (nn, nn) or self.b.shape != (nn, mm):
            raise DimensionError("factorization does not conform to the system")

    @property
    def degree(self):
        return max(self.n.degree, self.d.degree)

    def n_coeff(self, i):
        return self.n.coefficient(i)

    def d_coeff(self, i):
        return self.d.coefficient(i)

    def plus_minus(self):
        """Coefficient stacks of ``N+-, D+-`` with ``N+- = N1 +- conj(N2)``."""
        w = self.degree
        n1 = self.n.pad(w).p1_coeffs()
        n2 = self.n.pad(w).p2_coeffs()
        d1 = self.d.pad(w).p1_coeffs()
        d2 = self.d.pad(w).p2_coeffs()
        return n1 + n2.conj(), n1 - n2.conj(), d1 + d2.conj(), d1 - d2.conj()

    def residual(self, points=None):
        """Relative residual of ``{sI - A1, -A2} N = B D`` at real sample points."""
        if points is None:
            points = _sample_points(self.degree)
        worst = 0.0
        for s in points:
            lhs = (s * _eval_bimatrix(self.n, s)
                   - multiply(self.a, _eval_bimatrix(self.n, s)))
            rhs = multiply(self.b, _eval_bimatrix(self.d, s))
            r = to_real(lhs - rhs)
            scale = (np.linalg.norm(to_real(_eval_bimatrix(self.n, s))) * (abs(s) + np.linalg.norm(to_real(self.a)))
                     + np.linalg.norm(to_real(self.b)) * np.linalg.norm(to_real(_eval_bimatrix(self.d, s))))
            worst = max(worst, float(np.linalg.norm(r) / max(scale, 1e-300)))
        return worst

    def anti_residual(self, points=None):
        """Relative residual of ``s conj(N0) - A2 N0 = B2 D0`` (anti variant only)."""
        if self.n0 is None:
            raise PreconditionError("factorization carries no antilinear pair")
        if points is None:
            points = _sample_points(self.degree)
        a2, b2 = self.a.p2, self.b.p2
        worst = 0.0
        for s in points:
            n0 = _polyval(self.n0, s)
            n0c = _polyval(self.n0.conj(), s)
            d0 = _polyval(self.d0, s)
            r = s * n0c - a2 @ n0 - b2 @ d0
            scale = (abs(s) * np.linalg.norm(n0c) + np.linalg.norm(a2) * np.linalg.norm(n0)
                     + np.linalg.norm(b2) * np.linalg.norm(d0))
            worst = max(worst, float(np.linalg.norm(r) / max(scale, 1e-300)))
        return worst


def _eval_bimatrix(p, s):
    """Value at real ``s`` as a Bimatrix."""
    p1, p2 = eval_poly(p, s)
    return Bimatrix(p1, p2)


def _sample_points(degree):
    # 2(degree+1)+1 distinct real points: enough to pin a polynomial identity
    k = 2 * (degree + 1) + 1
    return np.cos(np.pi * (np.arange(k) + 0.5) / k) * 2.0


def _pair_residual(a, b, n0, d0, points=None):
    if points is None:
        points = _sample_points(d0.shape[0] - 1)
    worst = 0.0
    for s in points:
        nv = _polyval(n0, s)
        dv = _polyval(d0, s)
        r = s * nv - a @ nv - b @ dv
        scale = np.linalg.norm(nv) * (abs(s) + np.linalg.norm(a)) + np.linalg.norm(b) * np.linalg.norm(dv)
        worst = max(worst, float(np.linalg.norm(r) / max(scale, 1e-300)))
    return worst


# ---------------------------------------------------------------------------
# minimal factorization of a matrix pair
# ---------------------------------------------------------------------------

def minimal_right_factorization(a, b, rtol=RANK_RTOL):
    """Right-coprime ``(N, D)`` with ``(sI - a) N(s) = b D(s)``.

    The Krylov vectors ``a^k b_i`` are scanned in crate order
    (``b_1..b_r, a b_1..a b_r, ...``).  When ``a^k b_i`` depends on the
    vectors kept so far, column ``i`` of ``D`` gets degree ``k`` from that
    dependency and the chain of ``b_i`` is closed.  The result is the minimal
    basis in column Popov form: each column of ``D`` is monic of degree
    ``k_i`` on the diagonal, column degrees equal the controllability
    indices, and ``N`` follows from ``N_{t-1} = a N_t + b D_t``.

    Works for real or complex pairs.

    Raises
    ------
    StructuralError
        If the pair is not controllable.
    CoprimenessError
        If the rank certification of the result fails.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    q = a.shape[0]
    if a.ndim != 2 or a.shape != (q, q):
        raise DimensionError(f"a must be square, got {a.shape}")
    if b.shape[0] != q or b.shape[1] < 1:
        raise DimensionError(f"b must be {q} x r with r >= 1, got {b.shape}")
    dtype = np.result_type(a, b, float)
    r = b.shape[1]

    basis = np.zeros((q, 0), dtype=dtype)     # orthonormal span of kept vectors
    kept = []                                 # kept Krylov vectors, crate order
    labels = []                               # (input, power) of each kept vector
    degrees = [None] * r
    relations = {}
    chain = {i: b[:, i].astype(dtype) for i in range(r)}
    active = list(range(r))
    k = 0
    while active:
        for i in list(active):
            v = chain[i]
            nv = np.linalg.norm(v)
            res = v - basis @ (basis.conj().T @ v)
            res = res - basis @ (basis.conj().T @ res)
            nres = np.linalg.norm(res)
            if nv == 0 or nres <= rtol * nv or len(kept) == q:
                degrees[i] = k
                if kept:
                    coef = np.linalg.lstsq(np.column_stack(kept), v, rcond=None)[0]
                else:
                    coef = np.zeros(0, dtype=dtype)
                relations[i] = coef
                active.remove(i)
            else:
                basis = np.column_stack([basis, res / nres])
                kept.append(v)
                labels.append((i, k))
        for i in active:
            chain[i] = a @ chain[i]
        k += 1

    if len(kept) < q:
        raise StructuralError(
            f"pair is not controllable: controllability rank {len(kept)} < {q} "
            f"(rank defect {q - len(kept)})")

    deg = max(degrees)
    d0 = np.zeros((deg + 1, r, r), dtype=dtype)
    for i in range(r):
        d0[degrees[i], i, i] = 1.0
        for (l, kk), c in zip(labels, relations[i]):
            d0[kk, l, i] -= c
    n0 = np.zeros((deg + 1, q, r), dtype=dtype)
    for t in range(deg, 0, -1):
        n0[t - 1] = a @ n0[t] + b @ d0[t]

    pair = RealPolyPair(n0, d0, tuple(int(x) for x in degrees))
    res = pair.residual(a, b)
    if res > IDENTITY_RTOL:
        raise NumericError(f"factorization identity residual {res:.3e} too large")
    report = _rank_report(np.concatenate([n0, d0], axis=1), res)
    if not report.passed:
        raise CoprimenessError(
            "computed factorization failed the coprimeness test", report.failures)
    return pair


# ---------------------------------------------------------------------------
# coprimeness certification
# ---------------------------------------------------------------------------

def rank_drop_points(coeffs, rtol=COPRIME_RTOL, seed=0):
    """Points where a tall polynomial matrix loses full column rank.

    Candidates are the finite eigenvalues of a block-companion pencil of the
    randomly compressed square matrix ``W P(s)`` (every rank drop of ``P`` is
    a root of ``det W P``); each candidate and ``16`` random probe points are
    then checked by SVD on ``P`` itself.

    Returns ``(failures, n_candidates)``.
    """
    coeffs = _trim(np.asarray(coeffs, dtype=complex))
    d = coeffs.shape[0] - 1
    rows, cols = coeffs.shape[1:]
    rng = np.random.default_rng(seed)
    candidates = []
    if d >= 1 and rows >= cols:
        w = rng.standard_normal((cols, rows)) + 1j * rng.standard_normal((cols, rows))
        qc = np.einsum("ij,kjl->kil", w, coeffs)
        size = d * cols
        pa = np.zeros((size, size), dtype=complex)
        pe = np.eye(size, dtype=complex)
        for blk in range(d - 1):
            pa[blk * cols:(blk + 1) * cols, (blk + 1) * cols:(blk + 2) * cols] = np.eye(cols)
        for blk in range(d):
            pa[(d - 1) * cols:, blk * cols:(blk + 1) * cols] = -qc[blk]
        pe[(d - 1) * cols:, (d - 1) * cols:] = qc[d]
        with np.errstate(all="ignore"):
            ev = scipy.linalg.eigvals(pa, pe)
        candidates = [complex(z) for z in ev if np.isfinite(z) and abs(z) < 1e12]
    radius = 1.0 + max((abs(z) for z in candidates), default=0.0)
    probes = radius * (rng.uniform(-1, 1, _N_PROBES) + 1j * rng.uniform(-1, 1, _N_PROBES))
    failures = []
    for s in list(candidates) + [complex(z) for z in probes]:
        val = _polyval(coeffs, s)
        # columns of different degree differ wildly in scale at large |s|
        norms = np.linalg.norm(val, axis=0)
        val = val / np.where(norms > 0, norms, 1.0)
        sv = np.linalg.svd(val, compute_uv=False)
        if sv.size < cols or sv[0] == 0 or sv[cols - 1] <= rtol * sv[0]:
            failures.append(s)
    return failures, len(candidates)


def _rank_report(coeffs, residual):
    failures, ncand = rank_drop_points(coeffs)
    return CoprimeReport(not failures, tuple(failures), float(residual), ncand)


def _stack_lifted(n, d, degree):
    """Coefficients of the lifted stacked matrix ``[N; D]``."""
    out = []
    for i in range(degree + 1):
        ni, di = n.coefficient(i), d.coefficient(i)
        stacked = Bimatrix(np.vstack([ni.p1, di.p1]), np.vstack([ni.p2, di.p2]))
        out.append(complex_lifting(stacked))
    return np.array(out)


def _stack_decoupled(f):
    npl, nmi, dpl, dmi = f.plus_minus()
    top = np.concatenate([np.concatenate([npl, -nmi], axis=2),
                          np.concatenate([dpl, -dmi], axis=2)], axis=1)
    bot = np.concatenate([np.concatenate([npl.conj(), nmi.conj()], axis=2),
                          np.concatenate([dpl.conj(), dmi.conj()], axis=2)], axis=1)
    return np.concatenate([top, bot], axis=1)


def _stack_anti(n0, d0):
    sign = (-1.0) ** np.arange(n0.shape[0])[:, None, None]
    nneg, dneg = n0 * sign, d0 * sign
    top = np.concatenate([np.concatenate([n0, -nneg], axis=2),
                          np.concatenate([d0, -dneg], axis=2)], axis=1)
    bot = np.concatenate([np.concatenate([n0.conj(), nneg.conj()], axis=2),
                          np.concatenate([d0.conj(), dneg.conj()], axis=2)], axis=1)
    return np.concatenate([top, bot], axis=1)


def check_coprime(f):
    """Certify that ``f`` has full column rank ``2m`` for every complex ``s``.

    The rank matrix follows the variant: the lifted ``[N; D]`` for
    ``general``, the ``N+-/D+-`` block matrix for ``decoupled_pair`` and the
    ``N0(s), N0(-s)`` block matrix for ``anti``.  Failures are returned in
    the report, never raised.
    """
    if f.variant == "anti" and f.n0 is not None:
        coeffs = _stack_anti(f.n0, f.d0)
        residual = max(f.residual(), f.anti_residual())
    elif f.variant == "decoupled_pair":
        coeffs = _stack_decoupled(f)
        residual = f.residual()
    else:
        coeffs = _stack_lifted(f.n, f.d, f.degree)
        residual = f.residual()
    return _rank_report(coeffs, residual)


def _certify(f):
    report = check_coprime(f)
    if report.residual > IDENTITY_RTOL:
        raise NumericError(
            f"factorization identity residual {report.residual:.3e} exceeds "
            f"{IDENTITY_RTOL:g}")
    if not report.passed:
        raise CoprimenessError(
            "factorization is not right-coprime at "
            + ", ".join(f"{z:.6g}" for z in report.failures[:5]), report.failures)
    return CoprimeFactorization(f.n, f.d, f.a, f.b, f.variant, True, report,
                                f.n0, f.d0, f.padded)


def certify(f):
    """Return a copy of ``f`` with ``certified=True`` or raise CoprimenessError."""
    return _certify(f)


def coprime_factorization(sys):
    """Right-coprime ``{N1, N2}``, ``{D1, D2}`` with ``{sI - A1, -A2} N = B D``.

    A normal system (``A2 = B2 = 0``) gets ``N = {N0, 0}``, ``D = {D0, 0}``
    from the complex pair ``(A1, B1)``.  Otherwise one real factorization of
    ``(to_real(A), to_real(B))`` is mapped back coefficientwise; its first
    ``m`` columns carry ``N+`` and its last ``m`` columns carry ``j N-``.
    """
    a, b = sys.a, sys.b
    if not (np.any(a.p2) or np.any(b.p2)):
        pair = minimal_right_factorization(a.p1, b.p1)
        n = PolyBimatrix.from_arrays(pair.n0)
        d = PolyBimatrix.from_arrays(pair.d0)
        variant = "general"
    else:
        pair = minimal_right_factorization(to_real(a), to_real(b))
        n = PolyBimatrix.from_real_coeffs(pair.n0)
        d = PolyBimatrix.from_real_coeffs(pair.d0)
        variant = "decoupled_pair"
    return _certify(CoprimeFactorization(n, d, a, b, variant))


def _assemble_anti(n0, d0):
    """``{N1, N2}, {D1, D2}`` from ``N+ = N0(s)``, ``N- = N0(-s)``."""
    sign = (-1.0) ** np.arange(n0.shape[0])[:, None, None]
    n1 = (n0 + n0 * sign) / 2
    n2 = ((n0 - n0 * sign) / 2).conj()
    d1 = (d0 + d0 * sign) / 2
    d2 = ((d0 - d0 * sign) / 2).conj()
    return (PolyBimatrix.from_arrays(n1, n2, padded=True),
            PolyBimatrix.from_arrays(d1, d2, padded=True))


def anti_coprime_factorization(sys, max_tries=8, seed=0):
    """Anti-right-coprime ``(N0, D0)`` with ``s conj(N0) - A2 N0 = B2 D0``.

    ``N0`` is built from ``m`` real combinations of the columns of a real
    minimal basis for the antilinear pair, read as complex columns.  The
    basis is closed under ``P(s) -> J P(-s)`` (``J`` is multiplication by
    ``j``), so every column degree occurs an even number of times; half of
    each degree class is taken, first the leading half, then seeded random
    real combinations, until the rank condition on
    ``[N0(s), -N0(-s); D0(s), -D0(-s); ...]`` is certified.  An odd degree is
    padded by one zero coefficient (flagged by ``padded``).
    """
    a, b = sys.a, sys.b
    if np.any(a.p1) or np.any(b.p1):
        raise PreconditionError("anti factorization needs A1 = 0 and B1 = 0")
    nn, mm = b.shape
    pair = minimal_right_factorization(to_real(a), to_real(b))
    degrees = np.array(pair.column_degrees)
    groups = [np.flatnonzero(degrees == k) for k in sorted(set(pair.column_degrees))]
    if any(g.size % 2 for g in groups):
        raise CoprimenessError(
            "column degrees of the real basis are not paired", ())
    rng = np.random.default_rng(seed)

    def selector(random):
        sel = np.zeros((2 * mm, mm))
        col = 0
        for g in groups:
            h = g.size // 2
            if random:
                sel[np.ix_(g, range(col, col + h))] = rng.standard_normal((g.size, h))
            else:
                sel[g[:h], range(col, col + h)] = 1.0
            col += h
        return sel

    selectors = [selector(False)] + [selector(True) for _ in range(max_tries)]
    last_report = None
    for sel in selectors:
        nr = pair.n0 @ sel
        dr = pair.d0 @ sel
        n0 = _trim(nr[:, :nn, :] + 1j * nr[:, nn:, :])
        d0 = _trim(dr[:, :mm, :] + 1j * dr[:, mm:, :])
        w = max(n0.shape[0], d0.shape[0]) - 1
        padded = bool(w % 2)
        w += padded
        n0 = np.concatenate([n0, np.zeros((w + 1 - n0.shape[0], nn, mm))])
        d0 = np.concatenate([d0, np.zeros((w + 1 - d0.shape[0], mm, mm))])
        n, d = _assemble_anti(n0, d0)
        f = CoprimeFactorization(n, d, a, b, "anti", n0=n0, d0=d0, padded=padded)
        report = check_coprime(f)
        last_report = report
        if report.passed and report.residual <= IDENTITY_RTOL:
            if padded:
                log.info("antilinear factorization padded to even degree %d", w)
            return CoprimeFactorization(n, d, a, b, "anti", True, report, n0, d0, padded)
    raise CoprimenessError(
        "no anti-right-coprime pair found among the candidate column selections",
        last_report.failures if last_report else ())
