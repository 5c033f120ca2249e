"""Bimatrix value type and its algebra.

A bimatrix ``{P1, P2}`` is an ordered pair of complex ``n x m`` matrices acting
on ``x in C^m`` as ``P1 @ x + conj(P2) @ conj(x)``.  The map is linear over
the reals only.  Its real representation

    [[Re(P1 + P2), -Im(P1 + P2)],
     [Im(P1 - P2),  Re(P1 - P2)]]

acts on ``[Re x; Im x]`` and is a multiplicative homomorphism, so spectra,
inverses, exponentials and definiteness are all defined through it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from numbers import Real

import numpy as np
import scipy.linalg

from .errors import DimensionError, InputError, NumericError, SingularityError

__all__ = [
    "Bimatrix",
    "Spectrum",
    "apply",
    "multiply",
    "adjoint",
    "to_real",
    "from_real",
    "complex_lifting",
    "spectrum",
    "inverse",
    "exponential",
    "power",
    "is_positive_definite",
    "is_nonsingular",
    "SINGULAR_CONDITION",
]

log = logging.getLogger(__name__)

#: Condition number (of the real representation) above which a bimatrix is
#: treated as singular.
SINGULAR_CONDITION = 1e12


def _as_complex_2d(value, name):
    arr = np.array(value, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True, eq=False)
class Bimatrix:
    """Immutable pair ``{p1, p2}`` of equally shaped complex matrices.

    Scalars and 1-D inputs are promoted to ``(1, 1)`` and column matrices.
    The stored arrays are read-only.
    """

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        p1 = _as_complex_2d(self.p1, "p1")
        p2 = _as_complex_2d(self.p2, "p2")
        if p1.shape != p2.shape:
            raise DimensionError(
                f"bimatrix components differ in shape: {p1.shape} vs {p2.shape}")
        if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
            raise InputError("bimatrix entries must be finite")
        p1.setflags(write=False)
        p2.setflags(write=False)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros((n, n)))

    @classmethod
    def zeros(cls, n, m=None):
        m = n if m is None else m
        return cls(np.zeros((n, m)), np.zeros((n, m)))

    @classmethod
    def conjugation(cls, n):
        """The bimatrix ``{0, I}`` realizing ``x -> conj(x)``."""
        return cls(np.zeros((n, n)), np.eye(n))

    @property
    def shape(self):
        return self.p1.shape

    @property
    def is_square(self):
        return self.p1.shape[0] == self.p1.shape[1]

    # algebra -------------------------------------------------------------

    def __matmul__(self, other):
        if isinstance(other, Bimatrix):
            return multiply(self, other)
        return apply(self, other)

    def __add__(self, other):
        if not isinstance(other, Bimatrix):
            return NotImplemented
        _check_same_shape(self, other)
        return Bimatrix(self.p1 + other.p1, self.p2 + other.p2)

    def __sub__(self, other):
        if not isinstance(other, Bimatrix):
            return NotImplemented
        _check_same_shape(self, other)
        return Bimatrix(self.p1 - other.p1, self.p2 - other.p2)

    def __neg__(self):
        return Bimatrix(-self.p1, -self.p2)

    def __mul__(self, scalar):
        # complex scalars do not commute with conjugation, only reals are allowed
        if not isinstance(scalar, Real):
            return NotImplemented
        return Bimatrix(scalar * self.p1, scalar * self.p2)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return Bimatrix(self.p1 / scalar, self.p2 / scalar)

    @property
    def H(self):
        return adjoint(self)

    def conj(self):
        """Entrywise conjugate ``{conj(p1), conj(p2)}``."""
        return Bimatrix(self.p1.conj(), self.p2.conj())

    def to_real(self):
        return to_real(self)

    def norm(self):
        """Frobenius norm of the real representation."""
        return float(np.linalg.norm(to_real(self)))

    def allclose(self, other, rtol=1e-10, atol=1e-12):
        _check_same_shape(self, other)
        return bool(np.allclose(self.p1, other.p1, rtol=rtol, atol=atol)
                    and np.allclose(self.p2, other.p2, rtol=rtol, atol=atol))

    def __repr__(self):
        return f"Bimatrix(p1={self.p1!r}, p2={self.p2!r})"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of the real representation with radius and abscissa."""

    eigenvalues: np.ndarray
    rho: float
    mu: float


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def _require_square(b, what="bimatrix"):
    if not b.is_square:
        raise DimensionError(f"{what} must be square, got shape {b.shape}")


def apply(b, x):
    """Evaluate ``b.p1 @ x + conj(b.p2) @ conj(x)``.

    ``x`` may be a vector or a matrix; a matrix is acted on column by column.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[0] != b.shape[1]:
        raise DimensionError(
            f"cannot apply a {b.shape} bimatrix to an operand with "
            f"{x.shape[0]} rows")
    return b.p1 @ x + b.p2.conj() @ x.conj()


def multiply(a, b):
    """Composition ``a o b`` so that ``apply(a @ b, x) == apply(a, apply(b, x))``."""
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return Bimatrix(a.p1 @ b.p1 + a.p2.conj() @ b.p2,
                    a.p1.conj() @ b.p2 + a.p2 @ b.p1)


def adjoint(b):
    """``{p1^H, p2^T}``, whose real representation is the transpose of ``b``'s."""
    return Bimatrix(b.p1.conj().T, b.p2.T)


def to_real(b):
    """Real ``(2n, 2m)`` representation of ``b``."""
    s = b.p1 + b.p2
    d = b.p1 - b.p2
    return np.block([[s.real, -s.imag], [d.imag, d.real]])


def from_real(r):
    """Inverse of :func:`to_real`; every real ``(2n, 2m)`` matrix has a preimage."""
    r = np.asarray(r)
    if r.ndim != 2 or r.shape[0] % 2 or r.shape[1] % 2:
        raise DimensionError(
            f"real representation must have even dimensions, got {r.shape}")
    if np.iscomplexobj(r):
        if np.any(r.imag != 0):
            raise InputError("real representation must be real-valued")
        r = r.real
    n, m = r.shape[0] // 2, r.shape[1] // 2
    f11, f12 = r[:n, :m], r[:n, m:]
    f21, f22 = r[n:, :m], r[n:, m:]
    p1 = ((f11 + f22) + 1j * (f21 - f12)) / 2
    p2 = ((f11 - f22) - 1j * (f12 + f21)) / 2
    return Bimatrix(p1, p2)


def complex_lifting(b):
    """Complex ``(2n, 2m)`` lifting ``[[p1, conj(p2)], [p2, conj(p1)]]``."""
    return np.block([[b.p1, b.p2.conj()], [b.p2, b.p1.conj()]])


def spectrum(b):
    """Eigenvalues (``2n`` of them) of the real representation of square ``b``."""
    _require_square(b)
    try:
        eig = scipy.linalg.eigvals(to_real(b))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    if eig.size == 0:
        return Spectrum(eig, 0.0, -np.inf)
    return Spectrum(eig, float(np.max(np.abs(eig))), float(np.max(eig.real)))


def is_nonsingular(b, threshold=SINGULAR_CONDITION):
    _require_square(b)
    return bool(np.linalg.cond(to_real(b)) < threshold)


def inverse(b, threshold=SINGULAR_CONDITION):
    """Inverse bimatrix, computed as ``from_real(inv(to_real(b)))``.

    Raises
    ------
    SingularityError
        If the condition number of the real representation exceeds
        ``threshold``; the estimate is carried on the exception.
    """
    _require_square(b)
    r = to_real(b)
    cond = float(np.linalg.cond(r))
    if not np.isfinite(cond) or cond > threshold:
        raise SingularityError(
            f"bimatrix is singular to working precision (cond={cond:.3e})", cond)
    return from_real(np.linalg.inv(r))


def exponential(b, t=1.0):
    """``e^{t b}`` evaluated on the real representation."""
    _require_square(b)
    return from_real(scipy.linalg.expm(float(t) * to_real(b)))


def power(b, k):
    """``b`` composed with itself ``k >= 0`` times."""
    _require_square(b)
    if k < 0:
        raise InputError("negative powers are not supported; use inverse()")
    return from_real(np.linalg.matrix_power(to_real(b), int(k)))


def is_positive_definite(b, rtol=1e-10):
    """True iff the real representation is symmetric and positive definite."""
    if not b.is_square:
        return False
    r = to_real(b)
    scale = max(np.linalg.norm(r), np.finfo(float).tiny)
    asym = np.linalg.norm(r - r.T) / scale
    if asym > rtol:
        log.debug("not symmetric: relative asymmetry %.3e", asym)
        return False
    lam_min = float(np.linalg.eigvalsh((r + r.T) / 2)[0])
    if lam_min <= 0:
        log.debug("not positive definite: minimum eigenvalue %.3e", lam_min)
    return lam_min > 0
