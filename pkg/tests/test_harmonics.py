"""Homogeneous harmonic polynomials, even in the vertical coordinate."""

import numpy as np
import pytest

from bilaplab.harmonics import HomogeneousHarmonicPoly, basis_size, harmonic_basis


def _random_points(n, count=60, seed=11):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(count, n + 1))
    pts[:, -1] = np.abs(pts[:, -1])
    return pts


def test_basis_sizes_n1():
    # one even-in-y harmonic per degree on the half plane: Re((x+iy)^mu)
    assert [basis_size(1, mu) for mu in range(5)] == [1, 1, 1, 1, 1]


def test_basis_sizes_n2():
    # seeds x1^(mu-j) x2^j give mu+1 polynomials in three variables
    assert [basis_size(2, mu) for mu in range(4)] == [1, 2, 3, 4]


def test_degree_two_matches_real_part():
    """The n = 1 degree-2 element is Re((x+iy)^2) = x^2 - y^2."""
    p = harmonic_basis(1, 2)[0]
    pts = _random_points(1)
    x, y = pts[:, 0], pts[:, 1]
    assert np.allclose(p(pts), x ** 2 - y ** 2, atol=1e-14)


def test_degree_three_matches_real_part():
    p = harmonic_basis(1, 3)[0]
    pts = _random_points(1)
    x, y = pts[:, 0], pts[:, 1]
    assert np.allclose(p(pts), x ** 3 - 3 * x * y ** 2, atol=1e-14)


def test_basis_is_harmonic_by_finite_differences():
    d = 1e-4
    for n in (1, 2):
        for mu in (2, 3):
            for p in harmonic_basis(n, mu):
                pts = _random_points(n, count=20, seed=mu)
                lap = -2.0 * (n + 1) * p(pts)
                for ax in range(n + 1):
                    e = np.zeros(n + 1)
                    e[ax] = d
                    lap = lap + p(pts + e) + p(pts - e)
                assert np.abs(lap / d ** 2).max() < 1e-5


def test_homogeneity():
    for mu in (1, 2, 3):
        p = harmonic_basis(1, mu)[0]
        pts = _random_points(1, count=25, seed=mu)
        assert np.allclose(p(0.5 * pts), 0.5 ** mu * p(pts), atol=1e-13)


def test_coefficient_count_validated():
    with pytest.raises(ValueError, match="does not match"):
        HomogeneousHarmonicPoly(1, 2, np.array([1.0, 2.0]))


def test_thin_gradient_matrix_degree_one():
    """For P = x the thin gradient is the constant 1, a 1 x 1 matrix."""
    p = HomogeneousHarmonicPoly(1, 1, np.array([1.0]))
    A = p.thin_gradient_matrix()
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(1.0)


def test_thin_gradient_matrix_degree_two_n2():
    """For the n = 2 seeds of degree 2 the trace gradient is linear in x;
    a generic combination has trivial kernel, a cylindrical one does not."""
    basis = harmonic_basis(2, 2)
    combo = HomogeneousHarmonicPoly(2, 2, np.array([1.0, 0.0, -1.0]))
    A = combo.thin_gradient_matrix()
    assert A.shape[0] == 2
    assert np.linalg.matrix_rank(A) >= 1
    assert len(basis) == 3
