import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_pt import linalg as la
from liouville_pt.errors import DimensionError, NotHermitianError, NotPositiveDefinite

from conftest import random_complex, random_density


def test_kron_small_example():
    a = np.array([[1, 2], [3, 4]])
    b = np.array([[0, 1], [1, 0]])
    expected = np.array([[0, 1, 0, 2], [1, 0, 2, 0], [0, 3, 0, 4], [3, 0, 4, 0]])
    np.testing.assert_array_equal(la.kron(a, b), expected)


def test_vec_is_column_stacking():
    np.testing.assert_array_equal(la.vec(np.array([[1, 2], [3, 4]])), [1, 3, 2, 4])
    np.testing.assert_array_equal(la.unvec(np.array([1, 3, 2, 4]), 2), [[1, 2], [3, 4]])


def test_unvec_rejects_wrong_length():
    with pytest.raises(DimensionError):
        la.unvec(np.arange(5), 2)


def test_vec_sandwich_identity(rng):
    x, y, z = (random_complex(rng, 3) for _ in range(3))
    np.testing.assert_allclose(la.vec(x @ y @ z), la.kron(z.T, x) @ la.vec(y), atol=1e-12)


def test_pinv_of_singular_diagonal():
    p = la.pinv(np.diag([2.0, 0.0]))
    np.testing.assert_allclose(p.matrix, np.diag([0.5, 0.0]))
    assert p.rank == 1


def test_pinv_is_inverse_when_invertible(rng):
    a = random_complex(rng, 5) + 5 * np.eye(5)
    np.testing.assert_allclose(la.pinv(a).matrix, np.linalg.inv(a), atol=1e-12)


def test_pinv_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        la.pinv(np.eye(2), rel_tol=0.0)


def test_range_projector_rank_three(rng):
    b = random_complex(rng, 6, 3)
    a = b @ random_complex(rng, 3, 6)
    q, _ = np.linalg.qr(b)
    np.testing.assert_allclose(la.range_projector(a), q @ q.conj().T, atol=1e-10)
    np.testing.assert_allclose(a @ la.pinv(a).matrix, q @ q.conj().T, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 12), n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_penrose_conditions(m, n, seed, data):
    r = data.draw(st.integers(1, min(m, n)))
    rng = np.random.default_rng(seed)
    a = random_complex(rng, m, r) @ random_complex(rng, r, n)
    p = la.pinv(a)
    assert max(la.penrose_residuals(a, p.matrix)) <= 1e-10
    assert p.rank == r


def test_cholesky_examples():
    low = la.cholesky_lower(np.array([[4.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(low, [[2.0, 0.0], [1.0, 2.0]])
    with pytest.raises(NotPositiveDefinite):
        la.cholesky_lower(np.diag([1.0, 0.0]))
    with pytest.raises(NotPositiveDefinite):
        la.cholesky_lower(np.diag([1.0, -1.0]))
    with pytest.raises(NotHermitianError):
        la.cholesky_lower(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_cholesky_reproduces_input(d, seed):
    rho = random_density(np.random.default_rng(seed), d)
    low = la.cholesky_lower(rho)
    assert np.all(np.triu(low, 1) == 0)
    assert np.all(np.diag(low).real > 0) and np.all(np.diag(low).imag == 0)
    np.testing.assert_allclose(low @ low.conj().T, rho, atol=1e-13)


def test_min_eigenvalue_examples():
    assert la.min_eigenvalue_hermitian(np.diag([0.3, -0.1, 2.0])) == pytest.approx(-0.1)
    assert la.min_eigenvalue_hermitian(np.array([[0, 1j], [-1j, 0]])) == pytest.approx(-1.0)


def test_hermitize_and_trace_norm():
    h = la.hermitize(np.array([[1.0, 2.0], [2.0, -1.0]]))
    assert la.trace_norm(h) == pytest.approx(2 * np.sqrt(5))
    with pytest.raises(DimensionError):
        la.hermitize(np.ones((2, 3)))


def test_corank_one_solver_equals_pinv(rng):
    # rank-5 6x6 with known null vectors
    a = random_complex(rng, 6, 5) @ random_complex(rng, 5, 6)
    u, s, vh = np.linalg.svd(a)
    solver = la.CorankOneSolver(a, vh[-1].conj(), u[:, -1])
    f = rng.normal(size=6) + 1j * rng.normal(size=6)
    np.testing.assert_allclose(solver.solve(f), la.pinv(a).matrix @ f, atol=1e-10)
    assert solver.rcond > 1e-10
