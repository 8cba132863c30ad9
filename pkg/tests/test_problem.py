"""Problem description: boundary data, energy, gradient, thin reaction."""

import numpy as np
import pytest

from bilaplab.problem import (
    BoundaryDatum,
    ProblemSpec,
    ScalarField,
    dirichlet_values,
    discrete_laplacian,
    energy,
    energy_gradient,
    energy_hessian_apply,
    thin_reaction,
    thin_reaction_derivative,
)


def _spec(**kw):
    base = dict(n=1, p=2.0, lambda_plus=1.0, lambda_minus=1.0, g="zero", h=0.125)
    base.update(kw)
    return ProblemSpec(**base)


# ---------------------------------------------------------------------------
# boundary data


def test_boundary_datum_families():
    pts = np.array([[0.6, 0.8], [-0.6, 0.8], [1.0, 0.0]])
    x, y = pts[:, 0], pts[:, 1]
    lin = BoundaryDatum("harmonic:deg=1")
    assert np.allclose(lin(pts), x)
    # coefficient list starts at degree 1: x + 0.2 Re((x+iy)^2)
    combo = BoundaryDatum("harmonic:coeffs=1;0.2")
    assert np.allclose(combo(pts), x + 0.2 * (x ** 2 - y ** 2))
    zero = BoundaryDatum("zero")
    assert np.allclose(zero(pts), 0.0)


def test_boundary_datum_trig():
    g = BoundaryDatum("trig:freq=2,amp=0.5")
    pts = np.array([[0.6, 0.8], [-1.0, 0.0]])
    expected = 0.5 * np.cos(2 * pts[:, 0]) * np.cosh(2 * pts[:, 1])
    assert np.allclose(g(pts), expected, atol=1e-14)


def test_boundary_datum_tabulated():
    """Three samples pin the datum at angles 0, pi/2, pi."""
    g = BoundaryDatum("tabulated:values=1;0;-1")
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(g(pts), [1.0, 0.0, -1.0])


def test_boundary_datum_errors():
    with pytest.raises(ValueError, match="family"):
        BoundaryDatum("fourier:deg=1")
    with pytest.raises(ValueError, match="zero"):
        BoundaryDatum("zero:deg=1")
    with pytest.raises(ValueError, match="at least two"):
        BoundaryDatum("tabulated:values=1")


def test_spec_validation():
    with pytest.raises(ValueError, match="p > 1"):
        _spec(p=1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        _spec(lambda_plus=-1.0)
    with pytest.raises(ValueError, match="must be 1 or 2"):
        _spec(n=3)
    # a vanishing weight is allowed: it turns that phase off
    assert _spec(lambda_minus=0.0).lambda_minus == 0.0


def test_dirichlet_values_evaluated_at_nodes():
    spec = _spec(g="harmonic:deg=1")
    grid = spec.grid()
    vals = dirichlet_values(spec)
    pinned = grid.pinned_ids
    assert vals.shape == (len(pinned),)
    assert np.allclose(vals, grid.nodes[pinned, 0])


# ---------------------------------------------------------------------------
# thin reaction


def test_thin_reaction_signs_quadratic():
    spec = _spec(lambda_plus=2.0, lambda_minus=0.5)
    assert thin_reaction(1.0, spec) == pytest.approx(-2.0)
    assert thin_reaction(-1.0, spec) == pytest.approx(0.5)
    assert thin_reaction(0.0, spec) == pytest.approx(0.0)


def test_thin_reaction_cubic_growth():
    spec = _spec(p=3.0, lambda_plus=1.0, lambda_minus=1.0)
    assert thin_reaction(2.0, spec) == pytest.approx(-4.0)
    assert thin_reaction(-2.0, spec) == pytest.approx(4.0)


def test_thin_reaction_derivative_values():
    spec = _spec(lambda_plus=2.0, lambda_minus=0.5)
    assert thin_reaction_derivative(1.0, spec) == pytest.approx(-2.0)
    assert thin_reaction_derivative(-1.0, spec) == pytest.approx(-0.5)
    # minimal-norm selection at the kink
    assert thin_reaction_derivative(0.0, spec) == pytest.approx(0.0)


def test_thin_reaction_derivative_rejects_p_below_two():
    spec = _spec(p=1.5)
    with pytest.raises(ValueError, match="p >= 2"):
        thin_reaction_derivative(0.3, spec)


# ---------------------------------------------------------------------------
# energy and derivatives


def test_energy_of_zero_field_is_zero():
    spec = _spec()
    w = ScalarField(spec.grid(), np.zeros(spec.grid().node_count))
    assert energy(w, spec) == pytest.approx(0.0, abs=1e-15)


def test_gradient_matches_finite_differences():
    """Central differences of the energy reproduce the analytic gradient."""
    spec = _spec(p=2.0, lambda_plus=2.0, lambda_minus=0.5, g="harmonic:coeffs=1;0.2")
    grid = spec.grid()
    rng = np.random.default_rng(5)
    vals = np.zeros(grid.node_count)
    vals[grid.free_ids] = rng.normal(scale=0.4, size=len(grid.free_ids))
    w = ScalarField(grid, vals)
    g = energy_gradient(w, spec)
    for i in rng.choice(grid.free_ids, size=12, replace=False):
        d = 1e-6
        up, dn = vals.copy(), vals.copy()
        up[i] += d
        dn[i] -= d
        fd = (energy(w.with_values(up), spec) - energy(w.with_values(dn), spec)) / (2 * d)
        assert g.values[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_gradient_matches_finite_differences_cubic():
    spec = _spec(p=3.0)
    grid = spec.grid()
    rng = np.random.default_rng(7)
    vals = np.zeros(grid.node_count)
    vals[grid.free_ids] = rng.normal(scale=0.4, size=len(grid.free_ids))
    w = ScalarField(grid, vals)
    g = energy_gradient(w, spec)
    for i in rng.choice(grid.free_ids, size=8, replace=False):
        d = 1e-6
        up, dn = vals.copy(), vals.copy()
        up[i] += d
        dn[i] -= d
        fd = (energy(w.with_values(up), spec) - energy(w.with_values(dn), spec)) / (2 * d)
        assert g.values[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_hessian_apply_is_positive_semidefinite():
    """d . H d >= 0 along random directions: the energy model is convex."""
    spec = _spec(p=2.0, lambda_plus=2.0, lambda_minus=0.5)
    grid = spec.grid()
    rng = np.random.default_rng(9)
    vals = np.zeros(grid.node_count)
    vals[grid.free_ids] = rng.normal(size=len(grid.free_ids))
    w = ScalarField(grid, vals)
    for _ in range(6):
        d = np.zeros(grid.node_count)
        d[grid.free_ids] = rng.normal(size=len(grid.free_ids))
        assert d @ energy_hessian_apply(w, d, spec) >= -1e-10


def test_hessian_is_gradient_jacobian():
    spec = _spec(p=2.0)
    grid = spec.grid()
    rng = np.random.default_rng(13)
    vals = np.zeros(grid.node_count)
    vals[grid.free_ids] = rng.normal(scale=0.3, size=len(grid.free_ids))
    w = ScalarField(grid, vals)
    d = np.zeros(grid.node_count)
    d[grid.free_ids] = rng.normal(size=len(grid.free_ids))
    eps = 1e-6
    gp = energy_gradient(w.with_values(vals + eps * d), spec).values
    gm = energy_gradient(w.with_values(vals - eps * d), spec).values
    fd = (gp - gm) / (2 * eps)
    hd = energy_hessian_apply(w, d, spec)
    mask = np.zeros(grid.node_count, dtype=bool)
    mask[grid.free_ids] = True
    assert np.abs((hd - fd)[mask]).max() < 1e-5 * max(1.0, np.abs(hd[mask]).max())


# ---------------------------------------------------------------------------
# discrete Laplacian


def test_discrete_laplacian_of_quadratic():
    """The five-point stencil is exact on x^2 + y^2 away from the rim."""
    spec = _spec(h=1 / 16)
    grid = spec.grid()
    w = ScalarField(grid, grid.nodes[:, 0] ** 2 + grid.nodes[:, 1] ** 2)
    lap = discrete_laplacian(w)
    inner = grid.interior_ids
    rad = np.linalg.norm(grid.nodes[inner], axis=1)
    core = inner[rad < 0.8]
    assert np.allclose(lap.values[core], 4.0, atol=1e-9)


def test_discrete_laplacian_kills_harmonics():
    spec = _spec(h=1 / 16)
    grid = spec.grid()
    x, y = grid.nodes[:, 0], grid.nodes[:, 1]
    w = ScalarField(grid, x ** 2 - y ** 2)
    lap = discrete_laplacian(w)
    inner = grid.interior_ids
    rad = np.linalg.norm(grid.nodes[inner], axis=1)
    core = inner[rad < 0.8]
    assert np.abs(lap.values[core]).max() < 1e-9


def test_scalar_field_validation():
    spec = _spec()
    grid = spec.grid()
    with pytest.raises(ValueError, match="one float per grid node"):
        ScalarField(grid, np.zeros(grid.node_count - 1))
    bad = np.zeros(grid.node_count)
    bad[0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        ScalarField(grid, bad)
