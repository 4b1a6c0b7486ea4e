import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from diracspec.errors import DimensionMismatch, NotPositiveDefinite, TooFewSamples
from diracspec.numerics import (
    UniformGrid,
    central_difference,
    cholesky_lower,
    cumulative_trapezoid,
    hermitian_part,
    is_hermitian,
    matrix_exponential,
    trapezoid_integrate,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def test_grid_basics():
    g = UniformGrid(0.0, 2.0, 4)
    assert g.h == 0.5 and g.size == 5
    np.testing.assert_allclose(g.nodes, [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(g.midpoints, [0.25, 0.75, 1.25, 1.75])
    assert g.refine().n == 8
    with pytest.raises(ValueError):
        UniformGrid(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        UniformGrid(0.0, 1.0, 1)


class TestCholesky:
    def test_scaled_identity(self):
        np.testing.assert_allclose(cholesky_lower(2 * np.eye(2)), np.sqrt(2) * np.eye(2))

    def test_diagonal(self):
        np.testing.assert_allclose(cholesky_lower(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_two_by_two(self):
        # L L* by hand: l11 = sqrt 2, l21 = 1/sqrt 2, l22 = sqrt(2 - 1/2)
        expected = np.array([[np.sqrt(2), 0], [1 / np.sqrt(2), np.sqrt(1.5)]])
        np.testing.assert_allclose(cholesky_lower(np.array([[2.0, 1.0], [1.0, 2.0]])), expected)

    def test_pivot_reported(self):
        with pytest.raises(NotPositiveDefinite) as info:
            cholesky_lower(np.diag([1.0, 1.0, -1.0]))
        assert info.value.pivot_index == 2

    def test_rejects_non_hermitian_and_non_square(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_lower(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(DimensionMismatch):
            cholesky_lower(np.ones((2, 3)))

    @given(arrays(complex, (4, 4), elements=st.complex_numbers(max_magnitude=2, allow_nan=False,
                                                               allow_infinity=False)))
    def test_reconstructs(self, a):
        m = a @ a.conj().T + 0.5 * np.eye(4)
        L = cholesky_lower(m)
        np.testing.assert_allclose(L @ L.conj().T, m, atol=1e-10)
        assert np.allclose(np.triu(L, 1), 0)
        assert np.all(np.diag(L).real > 0)


class TestExpm:
    def test_zero(self):
        np.testing.assert_allclose(matrix_exponential(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        th = 0.7
        out = matrix_exponential(np.diag([1j * th, -1j * th]))
        np.testing.assert_allclose(out, np.diag([np.exp(1j * th), np.exp(-1j * th)]))

    def test_nilpotent(self):
        np.testing.assert_allclose(matrix_exponential(np.array([[0.0, 1.0], [0.0, 0.0]])),
                                   [[1, 1], [0, 1]])

    @given(arrays(float, (3, 3), elements=finite))
    def test_inverse_and_determinant(self, a):
        e = matrix_exponential(a)
        np.testing.assert_allclose(e @ matrix_exponential(-a), np.eye(3), atol=1e-8)
        assert np.isclose(np.linalg.det(e), np.exp(np.trace(a)), rtol=1e-8)

    def test_stack_and_errors(self):
        out = matrix_exponential(np.zeros((5, 2, 2)))
        assert out.shape == (5, 2, 2)
        with pytest.raises(DimensionMismatch):
            matrix_exponential(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            matrix_exponential(np.array([[np.nan]]))


class TestTrapezoid:
    def test_constant(self):
        g = UniformGrid(0.0, 1.0, 7)
        assert np.isclose(trapezoid_integrate(np.full(g.size, 3.0), g), 3.0)

    def test_affine_exact(self):
        g = UniformGrid(0.0, 1.0, 4)
        assert trapezoid_integrate(g.nodes, g) == pytest.approx(0.5, abs=1e-15)

    def test_square_hand_value(self):
        g = UniformGrid(0.0, 1.0, 2)
        # (1/2)(0/2 + 1/4 + 1/2) = 0.375
        assert trapezoid_integrate(g.nodes ** 2, g) == pytest.approx(0.375)

    def test_second_order(self):
        errs = []
        for n in (16, 32, 64):
            g = UniformGrid(0.0, 2.0, n)
            errs.append(abs(trapezoid_integrate(np.sin(g.nodes), g) - (1 - np.cos(2.0))))
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert all(3.8 < r < 4.2 for r in ratios)

    def test_cumulative_matches_total(self):
        g = UniformGrid(0.0, 1.0, 10)
        f = np.exp(g.nodes)
        c = cumulative_trapezoid(f, g.h)
        assert c[0] == 0
        assert np.isclose(c[-1], trapezoid_integrate(f, g))

    def test_sample_count_checked(self):
        with pytest.raises(DimensionMismatch):
            trapezoid_integrate(np.ones(3), UniformGrid(0.0, 1.0, 4))


class TestCentralDifference:
    def test_constant(self):
        g = UniformGrid(0.0, 1.0, 5)
        assert np.all(central_difference(np.full(g.size, 2.0), g) == 0)

    def test_affine(self):
        g = UniformGrid(0.0, 1.0, 5)
        np.testing.assert_allclose(central_difference(3 * g.nodes, g), 3.0)

    def test_square_midpoint(self):
        g = UniformGrid(0.0, 1.0, 2)
        assert central_difference(g.nodes ** 2, g)[1] == pytest.approx(1.0)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            central_difference(np.ones(2), 0.1)


def test_hermitian_helpers():
    m = np.array([[1.0, 2j], [0.0, 1.0]])
    assert not is_hermitian(m)
    assert is_hermitian(hermitian_part(m))
