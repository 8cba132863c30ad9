"""Grid construction, classification, interpolation, and quadrature."""

import numpy as np
import pytest

from bilaplab.grid import (
    CORNER,
    INTERIOR,
    OUTER,
    THIN,
    OutOfDomainError,
    build_grid,
    interp,
    sphere_quadrature,
)
from bilaplab.problem import ProblemSpec, ScalarField


def test_nine_node_grid_enumeration():
    """At h = 1/2 the upper half ball holds exactly nine lattice nodes.

    Hand enumeration: the face row carries five nodes at x in
    {-1, -1/2, 0, 1/2, 1}, the row y = 1/2 carries three (|x| <= 1/2),
    and the pole (0, 1) closes the list.
    """
    g = build_grid(1, 0.5)
    assert g.node_count == 9
    expected = {
        (-1.0, 0.0), (-0.5, 0.0), (0.0, 0.0), (0.5, 0.0), (1.0, 0.0),
        (-0.5, 0.5), (0.0, 0.5), (0.5, 0.5),
        (0.0, 1.0),
    }
    assert {tuple(z) for z in g.nodes} == expected
    assert len(g.face_ids) == 5


def test_nine_node_grid_classes():
    g = build_grid(1, 0.5)
    assert len(g.interior_ids) == 1
    assert len(g.outer_ids) == 3
    assert len(g.thin_ids) == 1
    assert len(g.corner_ids) == 4
    # the lone thin node is the origin and the lone interior node sits above it
    assert tuple(g.nodes[g.thin_ids[0]]) == (0.0, 0.0)
    assert tuple(g.nodes[g.interior_ids[0]]) == (0.0, 0.5)


def test_twentynine_node_grid_counts():
    """Hand count at h = 1/4: rows hold 9 + 7 + 7 + 5 + 1 = 29 nodes."""
    g = build_grid(1, 0.25)
    assert g.node_count == 29
    assert len(g.interior_ids) == 11
    assert len(g.outer_ids) == 9
    assert len(g.thin_ids) == 5
    assert len(g.corner_ids) == 4


def test_node_count_matches_independent_enumeration():
    """Brute double loop over the lattice agrees with the builder for n = 1."""
    for h in (0.5, 0.25, 0.125):
        m = round(1.0 / h)
        count = 0
        for i in range(-m, m + 1):
            for j in range(0, m + 1):
                if i * i + j * j <= m * m:
                    count += 1
        assert build_grid(1, h).node_count == count


def test_invalid_spacing_rejected():
    with pytest.raises(ValueError, match="does not divide"):
        build_grid(1, 0.3)


def test_invalid_dimension_rejected():
    with pytest.raises(ValueError, match="must be 1 or 2"):
        build_grid(3, 0.25)


def test_interp_reproduces_linear_fields():
    g = build_grid(1, 0.125)
    vals = 2.0 * g.nodes[:, 0] - 0.5 * g.nodes[:, 1] + 1.0
    f = ScalarField(g, vals)
    rng = np.random.default_rng(3)
    t = rng.uniform(0.0, 2 * np.pi, size=40)
    # Radii kept below 0.8 so every stencil cell has all corners inside
    # the ball; rim-cut cells use extrapolated ghosts and are only
    # second-order accurate.
    rad = rng.uniform(0.0, 0.8, size=40)
    pts = np.column_stack([rad * np.cos(t), np.abs(rad * np.sin(t))])
    expected = 2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 1.0
    assert np.allclose(interp(f, pts), expected, atol=1e-12)
    near_rim = np.array([[0.93, 0.05], [0.0, 0.94], [-0.66, 0.66]])
    expected_rim = 2.0 * near_rim[:, 0] - 0.5 * near_rim[:, 1] + 1.0
    assert np.allclose(interp(f, near_rim), expected_rim, atol=1e-2)


def test_interp_even_extension():
    """Queries below the face answer as their mirror image when extended."""
    g = build_grid(1, 0.125)
    f = ScalarField(g, g.nodes[:, 0] ** 2 + g.nodes[:, 1])
    up = interp(f, [[0.3, 0.4]], extended=True)
    down = interp(f, [[0.3, -0.4]], extended=True)
    assert up == pytest.approx(down)
    with pytest.raises(OutOfDomainError):
        interp(f, [[0.3, -0.4]])


def test_out_of_domain_query_rejected():
    g = build_grid(1, 0.125)
    f = ScalarField(g, np.zeros(g.node_count))
    with pytest.raises(OutOfDomainError):
        interp(f, [[1.2, 0.0]])


def test_quadrature_measures_match_closed_forms():
    """Weights integrate 1 to the half circle length, half disc area, and
    thin segment length."""
    g = build_grid(1, 1 / 16)
    q = sphere_quadrature(g, np.array([0.0, 0.0]), 0.8, m=256)
    assert q.surface_weights.sum() == pytest.approx(np.pi * 0.8, rel=1e-12)
    assert q.solid_weights.sum() == pytest.approx(np.pi * 0.64 / 2, rel=1e-12)
    assert q.thin_weights.sum() == pytest.approx(1.6, rel=1e-12)


def test_quadrature_exactness_on_smooth_integrand():
    """The surface rule integrates x^2 over the half circle exactly:
    the integral is pi r^3 / 2."""
    g = build_grid(1, 1 / 16)
    r = 0.7
    q = sphere_quadrature(g, np.array([0.0, 0.0]), r, m=128)
    val = (q.surface_weights * q.surface_points[:, 0] ** 2).sum()
    assert val == pytest.approx(np.pi * r ** 3 / 2, rel=1e-12)


def test_quadrature_guards():
    g = build_grid(1, 1 / 8)
    with pytest.raises(ValueError, match="under-resolved"):
        sphere_quadrature(g, np.array([0.0, 0.0]), 0.25, m=128)
    with pytest.raises(ValueError, match="not contained"):
        sphere_quadrature(g, np.array([0.5, 0.0]), 0.75, m=128)
    with pytest.raises(ValueError, match="too small"):
        sphere_quadrature(g, np.array([0.0, 0.0]), 0.5, m=8)


def test_three_dimensional_grid_smoke():
    g = build_grid(2, 0.25)
    assert g.n == 2
    assert g.node_count > 0
    assert g.nodes.shape[1] == 3
    assert (g.nodes[g.face_ids][:, 2] == 0.0).all()
    rad = np.linalg.norm(g.nodes, axis=1)
    assert rad.max() <= 1.0 + 1e-12


def test_spec_grid_is_cached():
    spec = ProblemSpec(n=1, h=0.25, p=2.0, lambda_plus=1.0, lambda_minus=1.0,
                       g="zero")
    assert spec.grid() is spec.grid()
