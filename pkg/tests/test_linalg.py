from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from numpy.testing import assert_allclose

from pqdlab.exceptions import SingularMatrixError
from pqdlab.linalg import cho_solve, cholesky, dot2, jacobi_eigenvalues, spd_solve

# products stay clear of the subnormal range, where no dot product can be accurate
finite = st.floats(-1e3, 1e3).filter(lambda v: v == 0.0 or abs(v) > 1e-100)


def _spd(rng, p):
    a = rng.standard_normal((p + 3, p))
    return a.T @ a + 0.1 * np.eye(p)


@pytest.mark.parametrize("p", [1, 2, 5, 16])
def test_cholesky_matches_numpy(p):
    a = _spd(np.random.default_rng(p), p)
    assert_allclose(cholesky(a), np.linalg.cholesky(a), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("p", [1, 3, 8])
def test_spd_solve_recovers_solution(p):
    rng = np.random.default_rng(10 + p)
    a = _spd(rng, p)
    x = rng.standard_normal(p)
    assert_allclose(spd_solve(a, a @ x), x, rtol=1e-10)
    assert_allclose(cho_solve(cholesky(a), a @ x), np.linalg.solve(a, a @ x), rtol=1e-10)


def test_singular_matrix_names_pivot():
    a = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularMatrixError) as info:
        cholesky(a)
    assert info.value.pivot == 2


def test_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        cholesky(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(-10, 10)))
def test_jacobi_matches_eigvalsh(b):
    a = b.T @ b
    scale = max(np.linalg.norm(a), 1.0)
    assert_allclose(jacobi_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-10 * scale)


def test_jacobi_limits():
    assert_allclose(jacobi_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])
    assert np.all(jacobi_eigenvalues(np.zeros((3, 3))) == 0)
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.eye(17))


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=40))
def test_dot2_is_nearly_correctly_rounded(pairs):
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    exact = sum(Fraction(a) * Fraction(b) for a, b in zip(x, y))
    mag = sum(abs(Fraction(a) * Fraction(b)) for a, b in zip(x, y))
    err = abs(Fraction(dot2(x, y)) - exact)
    u = Fraction(1, 2**53)
    assert err <= u * abs(exact) + len(pairs) ** 2 * u * u * mag * 4


def test_dot2_beats_naive_on_cancellation():
    x = np.array([1e16, 1.0, -1e16])
    assert dot2(x, np.ones(3)) == 1.0
    with pytest.raises(ValueError):
        dot2([1.0], [1.0, 2.0])
