"""Random generators and independent reference computations for the tests."""
import numpy as np

from bimat import Bimatrix, SystemModel


def rc(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_bim(rng, n, p=None, scale=1.0):
    p = n if p is None else p
    return Bimatrix(scale * rc(rng, n, p), scale * rc(rng, n, p))


def rand_system(rng, n, m, structure="general", time_domain="continuous"):
    a, b = rand_bim(rng, n), rand_bim(rng, n, m)
    if structure == "normal":
        a, b = Bimatrix(a.p1, 0 * a.p2), Bimatrix(b.p1, 0 * b.p2)
    elif structure == "antilinear":
        a, b = Bimatrix(0 * a.p1, a.p2), Bimatrix(0 * b.p1, b.p2)
    return SystemModel(a, b, time_domain)


def rel(a, b):
    """Relative distance of two arrays or bimatrices."""
    if isinstance(a, Bimatrix):
        a, b = a.to_real(), b.to_real()
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def taylor_expm(m):
    """Matrix exponential by scaling, a degree-30 Taylor sum and squaring.

    Kept independent of scipy so it can serve as an oracle.
    """
    m = np.asarray(m, dtype=float)
    norm = np.linalg.norm(m, 1)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    x = m / 2.0 ** s
    term = np.eye(m.shape[0])
    total = term.copy()
    for k in range(1, 31):
        term = term @ x / k
        total = total + term
    for _ in range(s):
        total = total @ total
    return total


def vec_sylvester(a, f, c):
    """Ordinary ``a X - X f = c`` by Kronecker vectorization."""
    n, p = c.shape
    op = np.kron(np.eye(p), a) - np.kron(f.T, np.eye(n))
    return np.linalg.solve(op, c.reshape(-1, order="F")).reshape((n, p), order="F")


def vec_conjugate(kind, a2, f2, c2):
    """Conjugate Sylvester/Stein solved over the reals on ``[Re X, Im X]``."""
    n, p = c2.shape
    cols = []
    for k in range(2 * n * p):
        e = np.zeros(2 * n * p)
        e[k] = 1.0
        x = (e[:n * p] + 1j * e[n * p:]).reshape(n, p)
        if kind == "conj_sylvester":
            r = a2.conj() @ x - x.conj() @ f2
        else:
            r = x - a2 @ x.conj() @ f2
        cols.append(np.concatenate([r.real.ravel(), r.imag.ravel()]))
    op = np.column_stack(cols)
    v = np.linalg.solve(op, np.concatenate([c2.real.ravel(), c2.imag.ravel()]))
    return (v[:n * p] + 1j * v[n * p:]).reshape(n, p)
