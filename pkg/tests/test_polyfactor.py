import numpy as np
import pytest

from bimat import (Bimatrix, CoprimeFactorization, PolyBimatrix, StructuralError,
                   SystemModel, anti_coprime_factorization, check_coprime,
                   coprime_factorization, minimal_right_factorization, multiply,
                   rendezvous_model, second_order_to_complex, to_real)
from bimat.polyfactor import eval_poly, rank_drop_points
from oracles import rand_bim, rand_system, rc


def _coeff_residual(f, s):
    """``(s I - A) N(s) - B D(s)`` at a complex point, as a real matrix norm ratio."""
    nv = Bimatrix(*eval_poly(f.n, s))
    dv = Bimatrix(*eval_poly(f.d, s))
    # s is self-conjugate, so it scales both components
    r = Bimatrix(s * nv.p1, s * nv.p2) - multiply(f.a, nv) - multiply(f.b, dv)
    return np.linalg.norm(to_real(r)) / max(np.linalg.norm(to_real(nv)), 1e-300)


def test_scalar_integrator():
    pair = minimal_right_factorization(np.zeros((1, 1)), np.ones((1, 1)))
    assert np.allclose(pair.n0[:, 0, 0], [1.0, 0.0])
    assert np.allclose(pair.d0, [[[0.0]], [[1.0]]])
    assert pair.column_degrees == (1,)


def test_double_integrator():
    pair = minimal_right_factorization([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
    # N(s) = [1; s], D(s) = s^2
    assert np.allclose(pair.n0[:, :, 0], [[1, 0], [0, 1], [0, 0]])
    assert np.allclose(pair.d0[:, 0, 0], [0, 0, 1])


def test_random_pairs_residual(rng):
    for _ in range(25):
        q = int(rng.integers(1, 7))
        r = int(rng.integers(1, 3))
        a, b = rng.standard_normal((q, q)), rng.standard_normal((q, r))
        pair = minimal_right_factorization(a, b)
        pts = 2 * rc(rng, 20)
        assert pair.residual(a, b, pts) < 1e-9
        assert sum(pair.column_degrees) == q


def test_complex_pair(rng):
    a, b = rc(rng, 4, 4), rc(rng, 4, 1)
    pair = minimal_right_factorization(a, b)
    assert pair.residual(a, b, rc(rng, 10)) < 1e-9


def test_uncontrollable_names_defect():
    a = np.diag([1.0, 2.0, 3.0])
    b = np.array([[1.0], [1.0], [0.0]])
    with pytest.raises(StructuralError, match="rank defect 1"):
        minimal_right_factorization(a, b)


def test_uncontrollable_system():
    sys_ = SystemModel(Bimatrix(np.eye(2), np.zeros((2, 2))),
                       Bimatrix([[1.0], [0.0]], [[0.0], [0.0]]))
    with pytest.raises(StructuralError):
        coprime_factorization(sys_)


@pytest.mark.parametrize("structure", ["general", "normal"])
def test_coprime_factorization_random(rng, structure):
    for _ in range(15):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 3))
        f = coprime_factorization(rand_system(rng, n, m, structure))
        assert f.certified and f.report.passed
        assert f.variant == ("general" if structure == "normal" else "decoupled_pair")
        for s in rc(rng, 5):
            assert _coeff_residual(f, s) < 1e-9


def test_normal_route_has_no_conjugate_part(rng):
    f = coprime_factorization(rand_system(rng, 3, 1, "normal"))
    assert not np.any(f.n.p2_coeffs()) and not np.any(f.d.p2_coeffs())


def _reference_rendezvous_factors(w):
    # N1, N2 (degree 3) and D1, D2 (degree 4), coefficients lowest first
    j = 1j
    n1 = np.zeros((4, 3, 1), complex)
    n2 = np.zeros((4, 3, 1), complex)
    # w s (1 + j s)
    n1[1, 0], n1[2, 0] = w, j * w
    # -(1 + j s)(3w^2 - s^2)/2
    n1[0, 1], n1[1, 1], n1[2, 1], n1[3, 1] = -1.5 * w**2, -1.5j * w**2, 0.5, 0.5j
    # s/2 - j/2
    n1[0, 2], n1[1, 2] = -0.5j, 0.5
    # -w s (-1 + j s)
    n2[1, 0], n2[2, 0] = w, -j * w
    # j (3w^2 - s^2)(s + j)/2
    n2[0, 1], n2[1, 1], n2[2, 1], n2[3, 1] = -1.5 * w**2, 1.5j * w**2, 0.5, -0.5j
    # -s/2 - j/2
    n2[0, 2], n2[1, 2] = -0.5j, -0.5
    # (s^2 +- 1)(w^2 + s^2)/2
    d1 = np.array([w**2, 0, 1 + w**2, 0, 1]).reshape(5, 1, 1) / 2
    d2 = np.array([-w**2, 0, w**2 - 1, 0, 1]).reshape(5, 1, 1) / 2
    return (PolyBimatrix.from_arrays(n1, n2), PolyBimatrix.from_arrays(d1, d2))


@pytest.mark.parametrize("omega", [1.0, 0.2])
def test_rendezvous_factorization_matches_reference(omega):
    sys_ = second_order_to_complex(rendezvous_model(omega))
    ours = coprime_factorization(sys_)
    assert ours.certified
    assert ours.n.degree == 3 and ours.d.degree == 4
    n_p, d_p = _reference_rendezvous_factors(omega)
    ref = CoprimeFactorization(n_p, d_p, sys_.a, sys_.b, "decoupled_pair")
    assert ref.residual() < 1e-12
    assert check_coprime(ref).passed
    # ours = ref o T for a constant nonsingular 1x1 bimatrix T
    lhs = np.vstack([to_real(ref.n_coeff(i)) for i in range(4)]
                    + [to_real(ref.d_coeff(i)) for i in range(5)])
    rhs = np.vstack([to_real(ours.n_coeff(i)) for i in range(4)]
                    + [to_real(ours.d_coeff(i)) for i in range(5)])
    t, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    assert np.linalg.norm(lhs @ t - rhs) < 1e-10 * np.linalg.norm(rhs)
    assert abs(np.linalg.det(t)) > 1e-6


def test_check_coprime_classical_pair():
    a = Bimatrix([[0, 1], [0, 0]], np.zeros((2, 2)))
    b = Bimatrix([[0], [1]], [[0], [0]])
    n = PolyBimatrix.from_arrays(np.array([[[1], [0]], [[0], [1]]]))
    d = PolyBimatrix.from_arrays(np.array([[[0]], [[0]], [[1]]]))
    rep = check_coprime(CoprimeFactorization(n, d, a, b))
    assert rep.passed and rep.residual < 1e-15
    assert set(rep.to_json()) == {"pass", "failures", "residual"}


def test_check_coprime_common_zero():
    # N = D = s satisfies (s - 0) s = 1 s but both vanish at 0
    a, b = Bimatrix([[0]], [[0]]), Bimatrix([[1]], [[0]])
    s = PolyBimatrix.from_arrays(np.array([[[0]], [[1]]]))
    rep = check_coprime(CoprimeFactorization(s, s, a, b))
    assert not rep.passed
    assert min(abs(z) for z in rep.failures) < 1e-8
    assert rep.to_json()["pass"] is False


def test_rank_drop_points_full_rank():
    coeffs = np.array([[[1.0], [0.0]], [[0.0], [1.0]]])  # [1; s]
    failures, ncand = rank_drop_points(coeffs)
    assert failures == []


def test_eval_poly():
    rng = np.random.default_rng(3)
    c = [rand_bim(rng, 2, 3) for _ in range(4)]
    p0 = PolyBimatrix((c[0],))
    assert np.allclose(eval_poly(p0, 7.5 + 1j)[0], c[0].p1)
    mono = PolyBimatrix((Bimatrix.zeros(2, 3), Bimatrix.zeros(2, 3), c[2]))
    got = eval_poly(mono, 2.0)
    assert np.allclose(got[0], 4 * c[2].p1) and np.allclose(got[1], 4 * c[2].p2)
    p = PolyBimatrix(tuple(c))
    s = 0.3 - 1.2j
    naive1 = sum(ci.p1 * s**i for i, ci in enumerate(c))
    naive2 = sum(ci.p2 * s**i for i, ci in enumerate(c))
    h1, h2 = eval_poly(p, s)
    assert np.abs(h1 - naive1).max() < 1e-12 and np.abs(h2 - naive2).max() < 1e-12


def test_trimming_and_padding():
    z = Bimatrix.zeros(1)
    one = Bimatrix.identity(1)
    assert PolyBimatrix((one, z, z)).degree == 0
    assert PolyBimatrix((one, z, z), padded=True).degree == 2
    assert PolyBimatrix((one,)).pad(3).degree == 3


def test_decoupling_round_trip(rng):
    f = coprime_factorization(rand_system(rng, 3, 2))
    npl, nmi, dpl, dmi = f.plus_minus()
    w = f.degree
    n1 = f.n.pad(w).p1_coeffs()
    n2 = f.n.pad(w).p2_coeffs()
    assert np.allclose((npl + nmi) / 2, n1)
    assert np.allclose(((npl - nmi) / 2).conj(), n2)
    assert np.allclose((dpl + dmi) / 2, f.d.pad(w).p1_coeffs())


def test_anti_scalar():
    # s conj(N0) - N0 = D0 with N0 = c gives D0 = conj(c) s - c
    sys_ = SystemModel(Bimatrix([[0]], [[1]]), Bimatrix([[0]], [[1]]), "discrete")
    f = anti_coprime_factorization(sys_)
    assert f.certified and f.variant == "anti"
    n0 = f.n0[:, 0, 0]
    d0 = f.d0[:, 0, 0]
    assert np.allclose(n0[1:], 0)
    c = n0[0]
    assert np.allclose(d0[:2], [-c, np.conj(c)])
    assert np.allclose(d0[2:], 0)
    assert f.anti_residual() < 1e-12


def test_anti_random(rng):
    for _ in range(30):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 3))
        f = anti_coprime_factorization(rand_system(rng, n, m, "antilinear", "discrete"))
        assert f.certified
        assert f.anti_residual() < 1e-9 and f.residual() < 1e-9
        assert f.degree % 2 == 0
        # the decoupled halves are N0(s) and N0(-s)
        npl, nmi, dpl, dmi = f.plus_minus()
        sign = (-1.0) ** np.arange(f.n0.shape[0])[:, None, None]
        assert np.allclose(npl, f.n0) and np.allclose(nmi, f.n0 * sign)
        assert np.allclose(dpl, f.d0) and np.allclose(dmi, f.d0 * sign)


def test_anti_rejects_non_antilinear(rng):
    with pytest.raises(ValueError):
        anti_coprime_factorization(rand_system(rng, 2, 1))
