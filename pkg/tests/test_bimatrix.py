import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimat import (Bimatrix, DimensionError, InputError, SingularityError,
                   adjoint, apply, complex_lifting, exponential, from_real,
                   inverse, is_nonsingular, is_positive_definite, multiply,
                   power, spectrum, to_real)
from oracles import rand_bim, rc, rel, taylor_expm

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 4)


def test_scalar_action():
    b = Bimatrix([[2]], [[1j]])
    # 2x + conj(j) conj(x) = 2x - j conj(x)
    x = np.array([1 + 1j])
    assert np.allclose(apply(b, x), 2 * x - 1j * x.conj())


def test_identity_and_conjugation():
    x = np.array([1 + 2j, -3j])
    assert np.allclose(apply(Bimatrix.identity(2), x), x)
    assert np.allclose(apply(Bimatrix.conjugation(2), x), x.conj())


def test_real_representation_layout():
    b = Bimatrix([[1 + 2j]], [[3 - 1j]])
    s, d = 4 + 1j, -2 + 3j
    assert np.allclose(to_real(b), [[s.real, -s.imag], [d.imag, d.real]])


@settings(max_examples=60, deadline=None)
@given(seeds, sizes, sizes, sizes)
def test_product_matches_composition(seed, n, m, p):
    rng = np.random.default_rng(seed)
    a, b = rand_bim(rng, n, m), rand_bim(rng, m, p)
    x = rc(rng, p)
    assert np.allclose(apply(multiply(a, b), x), apply(a, apply(b, x)))
    assert rel(to_real(multiply(a, b)), to_real(a) @ to_real(b)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, sizes, sizes)
def test_action_through_real_form(seed, n, m):
    rng = np.random.default_rng(seed)
    b = rand_bim(rng, n, m)
    x = rc(rng, m)
    y = apply(b, x)
    assert np.allclose(to_real(b) @ np.concatenate([x.real, x.imag]),
                       np.concatenate([y.real, y.imag]))


@settings(max_examples=60, deadline=None)
@given(seeds, sizes, sizes)
def test_round_trip_and_adjoint(seed, n, m):
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((2 * n, 2 * m))
    assert np.allclose(to_real(from_real(r)), r)
    b = from_real(r)
    assert np.allclose(to_real(adjoint(b)), r.T)


@settings(max_examples=40, deadline=None)
@given(seeds, sizes)
def test_lifting_is_similar(seed, n):
    rng = np.random.default_rng(seed)
    b = rand_bim(rng, n)
    lift = np.sort_complex(np.linalg.eigvals(complex_lifting(b)))
    real = np.sort_complex(spectrum(b).eigenvalues)
    assert np.allclose(np.sort(np.abs(lift)), np.sort(np.abs(real)))
    # eigenvalues of the real form come in conjugate pairs
    assert np.allclose(np.sort_complex(real), np.sort_complex(real.conj()))


def test_spectrum_radius_and_abscissa():
    sp = spectrum(Bimatrix([[0.5]], [[0]]))
    assert np.allclose(sp.eigenvalues, [0.5, 0.5])
    assert sp.rho == pytest.approx(0.5) and sp.mu == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(seeds, sizes)
def test_inverse(seed, n):
    rng = np.random.default_rng(seed)
    b = rand_bim(rng, n)
    if np.linalg.cond(to_real(b)) > 1e8:
        return
    prod = multiply(b, inverse(b))
    assert prod.allclose(Bimatrix.identity(n), atol=1e-9)


def test_inverse_singular():
    # x + conj(x) kills imaginary vectors
    b = Bimatrix([[1]], [[1]])
    assert not is_nonsingular(b)
    with pytest.raises(SingularityError) as exc:
        inverse(b)
    assert exc.value.condition > 1e12


@settings(max_examples=30, deadline=None)
@given(seeds, sizes, st.floats(-2, 2))
def test_exponential_against_taylor(seed, n, t):
    rng = np.random.default_rng(seed)
    b = rand_bim(rng, n, scale=0.7)
    got = to_real(exponential(b, t))
    assert rel(got, taylor_expm(t * to_real(b))) < 1e-10


def test_exponential_of_zero_is_identity():
    assert exponential(Bimatrix.zeros(2)).allclose(Bimatrix.identity(2))


def test_power():
    rng = np.random.default_rng(1)
    b = rand_bim(rng, 3)
    assert power(b, 0).allclose(Bimatrix.identity(3))
    assert power(b, 3).allclose(multiply(b, multiply(b, b)))
    with pytest.raises(InputError):
        power(b, -1)


def test_positive_definite():
    assert is_positive_definite(Bimatrix.identity(2))
    assert not is_positive_definite(-Bimatrix.identity(2))
    # {1, 0.5}: real form [[1.5, 0], [0, 0.5]]
    assert is_positive_definite(Bimatrix([[1]], [[0.5]]))
    assert not is_positive_definite(Bimatrix([[1]], [[2]]))
    assert not is_positive_definite(Bimatrix([[1, 2]], [[0, 0]]))


def test_validation():
    with pytest.raises(DimensionError):
        Bimatrix(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(InputError):
        Bimatrix([[np.nan]], [[0]])
    with pytest.raises(DimensionError):
        multiply(Bimatrix.zeros(2, 3), Bimatrix.zeros(2, 2))
    with pytest.raises(DimensionError):
        from_real(np.zeros((3, 2)))
    b = Bimatrix.identity(2)
    with pytest.raises((AttributeError, ValueError, TypeError)):
        b.p1[0, 0] = 5
