"""Pole assignment by full state feedback ``u = {K1, K2} x``.

A target spectrum is realized as a real matrix ``F`` and its bimatrix
``{F1, F2} = from_real(F)``.  A nonsingular solution ``(X, Y)`` of
``A X + B Y = X F`` then gives ``K = Y X^{-1}`` with
``X^{-1} (A + B K) X = F``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .bimatrix import Bimatrix, from_real, multiply, spectrum, to_real
from .errors import (DimensionError, InputError, NonsingularSearchError,
                     PreconditionError, SingularityError, StructuralError)
from .models import SecondOrderModel, SystemModel, controllability_rank
from .polyfactor import anti_coprime_factorization, coprime_factorization
from .solvers import NONSINGULAR_CONDITION, solve_antilinear, solve_gsyl

__all__ = [
    "TargetSpectrum",
    "DesignReport",
    "FeedbackDesign",
    "build_target",
    "assign_poles",
    "closed_loop",
    "second_order_to_complex",
    "realize_feedback",
    "rendezvous_model",
    "rendezvous_target",
    "verify_design",
    "spectrum_error",
    "match_spectra",
    "spectra_match",
    "MODES",
]

log = logging.getLogger(__name__)

MODES = ("general", "normalize", "anti_preserve")
EIG_TOL = 1e-8
MAX_DRAWS = 32


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def match_spectra(a, b):
    """Optimal one-to-one pairing of two eigenvalue multisets.

    Returns ``(errors, pairs)`` where ``errors[k] = |a_i - b_j|`` for the
    ``k``-th pair ``(i, j)``.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise DimensionError(f"cannot match {a.size} eigenvalues against {b.size}")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols], list(zip(rows.tolist(), cols.tolist()))


def spectra_match(a, b, tol=EIG_TOL):
    """True if every pair is within ``tol * (1 + |lambda|)``."""
    errs, pairs = match_spectra(a, b)
    b = np.asarray(b, dtype=complex).ravel()
    return all(e <= tol * (1 + abs(b[j])) for e, (_, j) in zip(errs, pairs))


def _conjugate_symmetric(gamma, tol=EIG_TOL):
    return spectra_match(gamma, np.conj(gamma), tol)


# ---------------------------------------------------------------------------
# target construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TargetSpectrum:
    """Desired closed-loop eigenvalues and their realization.

    ``decoupled`` records that ``f_real = diag(F11, F22)`` with real
    ``n x n`` blocks, i.e. that ``F1`` and ``F2`` are both real.
    """

    gamma_set: np.ndarray
    f_real: np.ndarray
    f_bimatrix: Bimatrix
    mode: str = "general"
    time_domain: str = "continuous"
    decoupled: bool = False

    @property
    def n(self):
        return self.f_bimatrix.shape[0]

    def is_stable(self):
        sp = spectrum(self.f_bimatrix)
        return sp.rho < 1 if self.time_domain == "discrete" else sp.mu < 0


def _split_spectrum(gamma, tol):
    """Real eigenvalues and the upper-half-plane members of conjugate pairs."""
    scale = 1 + np.abs(gamma)
    reals = np.sort(gamma[np.abs(gamma.imag) <= tol * scale].real)
    upper = gamma[gamma.imag > tol * scale]
    upper = upper[np.lexsort((upper.imag, upper.real))]
    return reals, upper


def _pair_off(values, tol):
    """Split sorted ``values`` into equal neighbours; None if impossible."""
    if len(values) % 2:
        return None
    firsts = values[0::2]
    if np.any(np.abs(values[0::2] - values[1::2]) > tol * (1 + np.abs(firsts))):
        return None
    return firsts


def _rotation(a, b):
    return np.array([[a, b], [-b, a]])


def _general_blocks(reals, upper, n):
    blocks2 = [_rotation(z.real, z.imag) for z in upper]
    blocks1 = [np.array([[r]]) for r in reals]
    k = min(len(blocks2), n // 2)
    if n - 2 * k > len(blocks1):
        # n odd with only complex pairs: no split into two real n x n blocks
        return scipy.linalg.block_diag(*(blocks2 + blocks1)), False
    left = blocks2[:k] + blocks1[:n - 2 * k]
    right = blocks2[k:] + blocks1[n - 2 * k:]
    return scipy.linalg.block_diag(scipy.linalg.block_diag(*left),
                                   scipy.linalg.block_diag(*right)), True


def _anti_blocks(reals, upper, tol):
    """Real ``F2`` whose bimatrix ``{0, F2}`` has the given spectrum."""
    blocks = []
    zeros = reals[np.abs(reals) <= tol]
    pos = np.sort(reals[reals > tol])
    neg = np.sort(-reals[reals < -tol])
    if len(zeros) % 2 or len(pos) != len(neg) or np.any(
            np.abs(pos - neg) > tol * (1 + pos)):
        raise InputError("anti_preserve needs real eigenvalues in pairs +-r")
    blocks += [np.zeros((1, 1))] * (len(zeros) // 2)
    blocks += [np.array([[r]]) for r in pos]
    imag = np.sort(upper[np.abs(upper.real) <= tol * (1 + np.abs(upper))].imag)
    right = upper[upper.real > tol * (1 + np.abs(upper))]
    left = upper[upper.real < -tol * (1 + np.abs(upper))]
    half = _pair_off(imag, tol)
    if half is None:
        raise InputError("anti_preserve needs imaginary eigenvalues +-bj with even multiplicity")
    blocks += [_rotation(0.0, b) for b in half]
    if len(right) != len(left):
        raise InputError("anti_preserve needs the spectrum closed under negation")
    if len(right):
        errs, pairs = match_spectra(right, -left.conj())
        if np.any(errs > tol * (1 + np.abs(right))):
            raise InputError("anti_preserve needs the spectrum closed under negation")
        blocks += [_rotation(right[i].real, right[i].imag) for i, _ in pairs]
    return scipy.linalg.block_diag(*blocks)


def build_target(gamma=None, f_real=None, mode="general", time_domain="continuous",
                 allow_unstable=False, tol=EIG_TOL):
    """Realize a desired spectrum as ``F`` and ``{F1, F2}``.

    Parameters
    ----------
    gamma : sequence of complex, optional
        ``2n`` eigenvalues, closed under conjugation.
    f_real : real ``2n x 2n`` array, optional
        An explicit realization; used as given after checking the mode.
    mode : {"general", "normalize", "anti_preserve"}
        ``general`` uses real blocks (split as ``diag(F11, F22)`` when
        possible); ``normalize`` yields ``F2 = 0`` and needs real eigenvalues
        with even multiplicity; ``anti_preserve`` yields ``F1 = 0`` and needs
        the spectrum closed under negation.
    time_domain : {"continuous", "discrete"}
    allow_unstable : bool
        Skip the ``rho(F2 conj(F2)) < 1`` check of ``anti_preserve``.

    Raises
    ------
    StructuralError
        For ``anti_preserve`` in continuous time: an antilinear closed loop
        has a spectrum symmetric about the imaginary axis, so it can never be
        asymptotically stable there.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}")
    if time_domain not in ("continuous", "discrete"):
        raise InputError(f"unknown time domain {time_domain!r}")
    if mode == "anti_preserve" and time_domain == "continuous":
        raise StructuralError(
            "anti_preserve is impossible in continuous time: an antilinear "
            "closed loop cannot be asymptotically stable")
    if (gamma is None) == (f_real is None):
        raise InputError("give exactly one of gamma and f_real")

    if f_real is not None:
        f_real = np.array(f_real, dtype=float)
        if f_real.ndim != 2 or f_real.shape[0] != f_real.shape[1] or f_real.shape[0] % 2:
            raise DimensionError(f"f_real must be square of even size, got {f_real.shape}")
        fb = from_real(f_real)
        scale = max(np.linalg.norm(f_real), 1.0)
        if mode == "normalize":
            if np.linalg.norm(fb.p2) > 1e-12 * scale:
                raise InputError("f_real does not give F2 = 0")
            fb = Bimatrix(fb.p1, np.zeros_like(fb.p2))
        elif mode == "anti_preserve":
            if np.linalg.norm(fb.p1) > 1e-12 * scale:
                raise InputError("f_real does not give F1 = 0")
            fb = Bimatrix(np.zeros_like(fb.p1), fb.p2)
        gamma = scipy.linalg.eigvals(f_real)
        decoupled = not (np.any(fb.p1.imag) or np.any(fb.p2.imag))
    else:
        gamma = np.asarray(gamma, dtype=complex).ravel()
        if gamma.size == 0 or gamma.size % 2:
            raise InputError(f"gamma must have an even number 2n of entries, got {gamma.size}")
        if not _conjugate_symmetric(gamma, tol):
            raise InputError("gamma is not symmetric with respect to the real axis")
        n = gamma.size // 2
        reals, upper = _split_spectrum(gamma, tol)
        if mode == "general":
            f_real, decoupled = _general_blocks(reals, upper, n)
            fb = from_real(f_real)
        elif mode == "normalize":
            half = _pair_off(reals, tol)
            if half is None:
                raise InputError("normalize needs every real eigenvalue with even multiplicity")
            f1 = np.diag(np.concatenate([half, upper]).astype(complex))
            fb = Bimatrix(f1, np.zeros((n, n)))
            f_real = to_real(fb)
            decoupled = not np.any(f1.imag)
        else:
            f2 = _anti_blocks(reals, upper, tol)
            fb = Bimatrix(np.zeros((n, n)), f2)
            f_real = to_real(fb)
            decoupled = True

    if mode == "anti_preserve" and not allow_unstable:
        rho = float(np.max(np.abs(np.linalg.eigvals(fb.p2 @ fb.p2.conj()))))
        if rho >= 1:
            raise InputError(
                f"anti_preserve target is not stable: rho(F2 conj(F2)) = {rho:.6g}")
    return TargetSpectrum(np.asarray(gamma, dtype=complex), f_real, fb, mode,
                          time_domain, bool(decoupled))


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DesignReport:
    closed_loop_spectrum: np.ndarray
    spectrum_error: float
    raw_spectrum_error: float
    similarity_residual: float
    x_condition: float
    gsyl_residual: float
    draws_used: int

    @property
    def passed(self):
        return self.similarity_residual <= EIG_TOL and self.spectrum_error <= EIG_TOL


@dataclass(frozen=True, eq=False)
class FeedbackDesign:
    """Gain ``K`` with ``X^{-1} (A + B K) X = {F1, F2}``."""

    k: Bimatrix
    x: Bimatrix
    y: Bimatrix
    real_gain: np.ndarray
    report: DesignReport
    target: TargetSpectrum = field(repr=False)
    system: SystemModel = field(repr=False)
    z_used: tuple = field(repr=False, default=None)


def closed_loop(sys, k):
    """``{A1, A2} + {B1, B2} {K1, K2}``."""
    if k.shape != (sys.m, sys.n):
        raise DimensionError(f"K must be {sys.m}x{sys.n}, got {k.shape}")
    return sys.a + multiply(sys.b, k)


def realize_feedback(k):
    """Real gain acting on ``[Re x; Im x]``."""
    return to_real(k)


def spectrum_error(computed, target, tol=EIG_TOL, radius=1e-5):
    """Distance between a computed spectrum and a target multiset.

    Target eigenvalues equal within ``tol`` form clusters.  Each cluster is
    compared through the centroid of the computed eigenvalues matched to it:
    a defective eigenvalue of multiplicity ``k`` is only computable to about
    ``eps^(1/k)``, while the centroid stays accurate to rounding.  A matched
    eigenvalue further than ``radius`` from its cluster counts in full.

    Returns ``(centroid_error, raw_error)``, both relative to ``1 + |lambda|``.
    """
    computed = np.asarray(computed, dtype=complex).ravel()
    target = np.asarray(target, dtype=complex).ravel()
    errs, pairs = match_spectra(computed, target)
    scale = 1 + np.abs(target)
    raw = max((e / scale[j] for e, (_, j) in zip(errs, pairs)), default=0.0)
    owner = dict((j, i) for i, j in pairs)
    seen = np.zeros(target.size, dtype=bool)
    worst = 0.0
    for j in range(target.size):
        if seen[j]:
            continue
        members = np.flatnonzero(np.abs(target - target[j]) <= tol * scale[j])
        members = members[~seen[members]]
        seen[members] = True
        vals = computed[[owner[k] for k in members]]
        spread = np.max(np.abs(vals - target[j])) / scale[j]
        centroid = abs(np.mean(vals) - target[j]) / scale[j]
        worst = max(worst, centroid, spread if spread > radius else 0.0)
    return float(worst), float(raw)


def verify_design(sys, target, k, x):
    """Closed-loop spectrum, its errors and the similarity residual of a gain."""
    acl = to_real(closed_loop(sys, k))
    xr = to_real(x)
    fr = target.f_real
    sim = np.linalg.solve(xr, acl @ xr) - fr
    scale = max(np.linalg.norm(fr), np.linalg.norm(acl), 1.0)
    sim_res = float(np.linalg.norm(sim) / scale)
    eig = scipy.linalg.eigvals(acl)
    err, raw = spectrum_error(eig, target.gamma_set)
    return eig, err, raw, sim_res


def _draw(rng, m, p):
    return rng.standard_normal((m, p)) + 1j * rng.standard_normal((m, p))


def assign_poles(sys, target, z=None, seed=0, max_draws=MAX_DRAWS, factorization=None):
    """Full state feedback placing the spectrum of ``A + B K`` at ``target``.

    The factorization follows the system structure: normal systems use the
    complex pair ``(A1, B1)``, antilinear ones the anti-right-coprime pair
    (solved in the target's mode) and general ones the decoupled pair.

    Parameters
    ----------
    z : tuple (Z1, Z2), optional
        Explicit free parameters.  When omitted, up to ``max_draws`` seeded
        standard complex normal draws are tried until ``X`` has condition
        below ``1e10`` and the design verifies.

    Raises
    ------
    StructuralError
        If the system is not controllable.
    NonsingularSearchError
        If no draw produced an acceptable ``X``.
    SingularityError
        If explicit ``z`` gives a singular ``X``.
    """
    if not isinstance(target, TargetSpectrum):
        raise InputError("target must be a TargetSpectrum")
    n, m = sys.n, sys.m
    if target.n != n:
        raise DimensionError(f"target is for n={target.n}, system has n={n}")
    if target.mode == "anti_preserve" and sys.time_domain != "discrete":
        raise StructuralError("anti_preserve designs are only meaningful in discrete time")
    ar, br = sys.real_pair()
    rank = controllability_rank(ar, br)
    if rank < 2 * n:
        raise StructuralError(
            f"system is not controllable (rank {rank} of {2 * n}, defect {2 * n - rank})")
    f = target.f_bimatrix

    if sys.structure == "antilinear":
        if target.mode == "general" and not target.decoupled:
            raise PreconditionError(
                "general antilinear design needs real F1 and F2; use normalize instead")
        fac = factorization or anti_coprime_factorization(sys)
        solve = lambda z1, z2: solve_antilinear(sys, target.mode, fac, f, z1, z2)
    else:
        fac = factorization or coprime_factorization(sys)
        solve = lambda z1, z2: solve_gsyl(sys, f, fac, z1, z2)

    rng = np.random.default_rng(seed)
    candidates = ([tuple(z)] if z is not None
                  else ((_draw(rng, m, n), _draw(rng, m, n)) for _ in range(max_draws)))
    best = np.inf
    draws = 0
    for z1, z2 in candidates:
        draws += 1
        sol = solve(z1, z2)
        best = min(best, sol.condition)
        if not sol.nonsingular_x:
            log.debug("draw %d: X has condition %.3e", draws, sol.condition)
            continue
        xr, yr = to_real(sol.x), to_real(sol.y)
        k = from_real(np.linalg.solve(xr.T, yr.T).T)
        eig, err, raw, sim = verify_design(sys, target, k, sol.x)
        report = DesignReport(eig, err, raw, sim, sol.condition, sol.residual, draws)
        if report.passed:
            return FeedbackDesign(k, sol.x, sol.y, to_real(k), report, target, sys,
                                  (sol.z_used[0], sol.z_used[1]))
        log.debug("draw %d rejected: similarity %.3e, spectrum %.3e", draws, sim, err)
    if z is not None:
        raise SingularityError(
            f"the given (Z1, Z2) does not yield an acceptable X (cond={best:.3e})", best)
    raise NonsingularSearchError(
        f"no acceptable X in {max_draws} draws (best condition {best:.3e}, "
        f"limit {NONSINGULAR_CONDITION:g})", best)


# ---------------------------------------------------------------------------
# second-order systems
# ---------------------------------------------------------------------------

def second_order_to_complex(m2, input_mode="paired"):
    """Complex-valued model on ``x = xi + j xi'`` for ``M xi'' + D xi' + K xi = G v``.

    ``paired`` splits ``G = [G1, G2]`` (a zero column is appended when ``q``
    is odd) with ``u = v1 + j v2``; ``padded`` keeps all ``q`` inputs and
    ``u = v + j w`` with an idle ``w``.  In both cases ``B2 = -B1``.
    """
    if not isinstance(m2, SecondOrderModel):
        raise InputError("expected a SecondOrderModel")
    n = m2.n
    minv_k = np.linalg.solve(m2.mass, m2.stiffness)
    minv_d = np.linalg.solve(m2.mass, m2.damping)
    minv_g = np.linalg.solve(m2.mass, m2.input)
    eye = np.eye(n)
    a1 = -0.5 * minv_d - 0.5j * (eye + minv_k)
    a2 = 0.5 * minv_d - 0.5j * (eye - minv_k)
    if input_mode == "paired":
        g = minv_g
        if g.shape[1] % 2:
            g = np.hstack([g, np.zeros((n, 1))])
        h = g.shape[1] // 2
        b1 = 0.5 * g[:, h:] + 0.5j * g[:, :h]
    elif input_mode == "padded":
        b1 = 0.5j * minv_g
    else:
        raise InputError(f"unknown input mode {input_mode!r}")
    return SystemModel(Bimatrix(a1, a2), Bimatrix(b1, -b1), "continuous")


def rendezvous_model(omega, include_radial=False):
    """Relative orbital motion about a circular target orbit of rate ``omega``.

    States are the three relative positions; inputs are the along-track and
    cross-track accelerations, plus the radial one if ``include_radial``.
    """
    omega = float(omega)
    if not omega > 0:
        raise InputError(f"omega must be positive, got {omega}")
    w = omega
    damping = np.array([[0.0, -2 * w, 0.0], [2 * w, 0.0, 0.0], [0.0, 0.0, 0.0]])
    stiffness = np.diag([-3 * w * w, 0.0, w * w])
    g = np.eye(3) if include_radial else np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return SecondOrderModel(np.eye(3), damping, stiffness, g)


def rendezvous_target(omega, gamma, jordan=True):
    """Closed-loop target ``{-gamma (x2), -gamma +- omega j (x2 each)}``.

    ``jordan=True`` gives a real form with a 2x2 Jordan block at ``-gamma``
    and two rotation blocks.  The diagonalizable alternative is not
    assignable to the two-input rendezvous plant: its invariant factors both
    have degree 3, while the plant's controllability indices (4, 2) require
    one of degree at least 4.
    """
    w, g = float(omega), float(gamma)
    if jordan:
        rot = np.array([[0.0, w], [-w, 0.0]])
        f = scipy.linalg.block_diag(np.array([[0.0, 1.0], [0.0, 0.0]]), rot, rot) - g * np.eye(6)
        return build_target(f_real=f)
    return build_target(gamma=[-g, -g, -g + w * 1j, -g - w * 1j, -g + w * 1j, -g - w * 1j])
