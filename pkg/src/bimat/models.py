"""Plant descriptions: complex-valued first-order systems and real second-order ones."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bimatrix import Bimatrix, to_real
from .errors import DimensionError, InputError

__all__ = ["SystemModel", "SecondOrderModel", "controllability_rank"]

TIME_DOMAINS = ("continuous", "discrete")
STRUCTURES = ("general", "normal", "antilinear")


def _is_zero(m):
    return not np.any(m)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """``x+ = {A1, A2} x + {B1, B2} u`` in continuous or discrete time.

    ``structure`` is inferred from exact zero blocks when omitted: ``normal``
    when ``A2 = B2 = 0`` and ``antilinear`` when ``A1 = B1 = 0``.
    """

    a: Bimatrix
    b: Bimatrix
    time_domain: str = "continuous"
    structure: str = field(default=None)

    def __post_init__(self):
        if not self.a.is_square:
            raise DimensionError(f"A must be square, got {self.a.shape}")
        if self.b.shape[0] != self.a.shape[0]:
            raise DimensionError(
                f"B has {self.b.shape[0]} rows but A is {self.a.shape}")
        if self.time_domain not in TIME_DOMAINS:
            raise InputError(f"unknown time domain {self.time_domain!r}")
        inferred = self.infer_structure(self.a, self.b)
        if self.structure is None:
            object.__setattr__(self, "structure", inferred)
        elif self.structure not in STRUCTURES:
            raise InputError(f"unknown structure {self.structure!r}")
        elif self.structure == "normal" and not (
                _is_zero(self.a.p2) and _is_zero(self.b.p2)):
            raise InputError("normal structure requires A2 = 0 and B2 = 0")
        elif self.structure == "antilinear" and not (
                _is_zero(self.a.p1) and _is_zero(self.b.p1)):
            raise InputError("antilinear structure requires A1 = 0 and B1 = 0")

    @staticmethod
    def infer_structure(a, b):
        if _is_zero(a.p2) and _is_zero(b.p2):
            return "normal"
        if _is_zero(a.p1) and _is_zero(b.p1):
            return "antilinear"
        return "general"

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.b.shape[1]

    def real_pair(self):
        return to_real(self.a), to_real(self.b)

    def is_controllable(self, rtol=1e-8):
        a, b = self.real_pair()
        return controllability_rank(a, b, rtol) == a.shape[0]


def controllability_rank(a, b, rtol=1e-8):
    """Numerical rank of ``[b, a b, ..., a^{q-1} b]``."""
    q = a.shape[0]
    blocks = [b]
    for _ in range(q - 1):
        blocks.append(a @ blocks[-1])
    ctrb = np.hstack(blocks)
    sv = np.linalg.svd(ctrb, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


@dataclass(frozen=True, eq=False)
class SecondOrderModel:
    """``M xi'' + D xi' + K xi = G v`` with real coefficient matrices."""

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    input: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("mass", "damping", "stiffness", "input"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            if arr.ndim != 2:
                raise DimensionError(f"{name} must be a matrix")
            arr.setflags(write=False)
            mats[name] = arr
            object.__setattr__(self, name, arr)
        n = mats["mass"].shape[0]
        for name in ("mass", "damping", "stiffness"):
            if mats[name].shape != (n, n):
                raise DimensionError(
                    f"{name} must be {n}x{n}, got {mats[name].shape}")
        if mats["input"].shape[0] != n:
            raise DimensionError(f"input must have {n} rows")
        cond = np.linalg.cond(mats["mass"])
        if not np.isfinite(cond) or cond > 1e12:
            raise InputError(f"mass matrix is singular (cond={cond:.3e})")

    @property
    def n(self):
        return self.mass.shape[0]

    @property
    def q(self):
        return self.input.shape[1]

    def companion(self):
        """First-order real form on ``[xi; xi']`` and its input matrix."""
        n = self.n
        minv_k = np.linalg.solve(self.mass, self.stiffness)
        minv_d = np.linalg.solve(self.mass, self.damping)
        minv_g = np.linalg.solve(self.mass, self.input)
        a = np.block([[np.zeros((n, n)), np.eye(n)], [-minv_k, -minv_d]])
        b = np.vstack([np.zeros_like(minv_g), minv_g])
        return a, b
