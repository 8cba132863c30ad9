"""Free-boundary extraction, classification, rescaling, and blow-up fitting."""

import numpy as np
import pytest

from bilaplab import ProblemSpec, ScalarField, build_grid
from bilaplab.diagnostics import compute_profile
from bilaplab.freeboundary import (
    FreeBoundaryPoint,
    almgren_rescale,
    blowup_fit,
    classify_point,
    continuity_probe,
    extract_gamma,
    homogeneous_rescale,
    nondegeneracy_check,
    singular_dimension,
)
from bilaplab.harmonics import HomogeneousHarmonicPoly, harmonic_basis

FINE = build_grid(1, 1.0 / 256.0)
SPEC = ProblemSpec(n=1, p=2.0, lambda_plus=1.0, lambda_minus=1.0,
                   g="zero", h=1.0 / 256.0)


def _rez2(p):
    return p[:, 0] ** 2 - p[:, 1] ** 2


def test_extract_gamma_single_crossing():
    g = build_grid(1, 1.0 / 16.0)
    u = ScalarField(g, g.nodes[:, 0].copy())
    points = extract_gamma(u, SPEC)
    assert len(points) == 1
    assert points[0].x == pytest.approx(0.0, abs=1e-12)
    assert points[0].side == "both"


def test_extract_gamma_two_crossings():
    g = build_grid(1, 1.0 / 16.0)
    u = ScalarField(g, g.nodes[:, 0] ** 2 - 0.25)
    points = extract_gamma(u, SPEC)
    assert [round(p.x, 6) for p in points] == [-0.5, 0.5]
    assert all(p.side == "both" for p in points)


def test_extract_gamma_zero_plateau_contributes_endpoint():
    # Trace max(x, 0): the zero run [-1, 0] meets the positive side at 0;
    # its other end touches the corner and is dropped.
    g = build_grid(1, 1.0 / 16.0)
    u = ScalarField(g, np.maximum(g.nodes[:, 0], 0.0))
    points = extract_gamma(u, SPEC)
    assert len(points) == 1
    assert points[0].x == pytest.approx(0.0, abs=1e-12)
    assert points[0].side == "+"


def test_extract_gamma_sign_definite_trace_has_no_points():
    g = build_grid(1, 1.0 / 16.0)
    u = ScalarField(g, np.ones(g.node_count))
    assert extract_gamma(u, SPEC) == []


def test_classify_transversal_crossing_as_regular():
    point = FreeBoundaryPoint(x=0.0)
    lin = lambda p: p[:, 0]
    label = classify_point(point, lin, lin, SPEC, grid=FINE)
    assert label == "REGULAR"
    assert point.classification == "REGULAR"
    assert point.grad_u == pytest.approx(1.0, abs=1e-9)
    assert point.metadata["graph_smoothness"] == "C3,alpha"


def test_classify_flat_touch_as_singular():
    point = FreeBoundaryPoint(x=0.0)
    flat = lambda p: p[:, 0] ** 2
    assert classify_point(point, flat, flat, SPEC, grid=FINE) == "SINGULAR"


def test_homogeneous_rescale_fixes_homogeneous_fields():
    resc = homogeneous_rescale(_rez2, 0.0, 0.5, 2.0, grid=FINE)
    ev = resc.grid
    expected = ev.nodes[:, 0] ** 2 - ev.nodes[:, 1] ** 2
    assert np.abs(resc.values - expected).max() == 0.0


def test_homogeneous_rescale_guards():
    with pytest.raises(ValueError, match="under-resolved"):
        homogeneous_rescale(_rez2, 0.0, 2.0 * FINE.h, 2.0, grid=FINE)
    with pytest.raises(ValueError, match="leaves the unit ball"):
        homogeneous_rescale(_rez2, 0.8, 0.5, 2.0, grid=FINE)


def test_almgren_rescale_normalizes_surface_mass():
    # For u = x, v = 0 the height is H(r) = pi r^3 / 2, so phi = pi r^2 / 2
    # and the rescaled pair is (x sqrt(2/pi), 0).
    ux = lambda p: p[:, 0]
    vz = lambda p: np.zeros(len(p))
    radii = np.geomspace(0.1, 0.5, 9)
    prof = compute_profile(ux, vz, 0.0, radii, SPEC, grid=FINE)
    ur, vr = almgren_rescale(ux, vz, 0.0, 0.5, prof, grid=FINE)
    expected = ur.grid.nodes[:, 0] * np.sqrt(2.0 / np.pi)
    assert np.abs(ur.values - expected).max() < 1e-12
    assert np.abs(vr.values).max() == 0.0
    with pytest.raises(ValueError, match="not present"):
        almgren_rescale(ux, vz, 0.0, 0.123, prof, grid=FINE)


def test_almgren_rescale_rejects_degenerate_height():
    vz = lambda p: np.zeros(len(p))
    radii = np.geomspace(0.1, 0.5, 9)
    prof = compute_profile(vz, vz, 0.0, radii, SPEC, grid=FINE)
    with pytest.raises(ValueError, match="degenerate phi"):
        almgren_rescale(vz, vz, 0.0, 0.5, prof, grid=FINE)


def test_blowup_fit_exact_on_homogeneous_pair():
    radii = np.geomspace(0.1, 0.5, 9)
    fit = blowup_fit(_rez2, _rez2, 0.0, radii, 2, grid=FINE)
    assert not fit.no_blowup
    assert fit.residuals.max() < 1e-12
    assert np.allclose(fit.coeff_curve_u, 1.0, atol=1e-12)
    assert np.allclose(fit.p_mu.coeffs, [1.0], atol=1e-12)


def test_blowup_fit_perturbation_residual_linear_in_radius():
    # A degree-3 perturbation of relative size eps contributes a misfit
    # eps * r, so the residual curve is linear through the origin.
    eps = 1e-3
    pert = lambda p: _rez2(p) + eps * (p[:, 0] ** 3 - 3 * p[:, 0] * p[:, 1] ** 2)
    radii = np.geomspace(0.1, 0.5, 9)
    fit = blowup_fit(pert, pert, 0.0, radii, 2, grid=FINE)
    assert not fit.no_blowup
    assert np.allclose(fit.coeff_curve_u, 1.0, atol=2e-3)
    assert np.allclose(fit.residuals, eps * radii, rtol=1e-3)


def test_blowup_fit_flags_degree_mismatch():
    lin = lambda p: p[:, 0]
    radii = np.geomspace(0.1, 0.5, 9)
    fit = blowup_fit(lin, lin, 0.0, radii, 3, grid=FINE)
    assert fit.no_blowup
    assert fit.residuals.min() > 0.5


def test_nondegeneracy_ratio():
    radii = np.geomspace(0.1, 0.5, 9)
    at_two = nondegeneracy_check(_rez2, _rez2, 0.0, radii, 2.0, grid=FINE)
    assert 0.99 < at_two <= 1.0
    # Claiming a lower frequency than the truth makes the ratio collapse
    # with the smallest radius.
    at_one = nondegeneracy_check(_rez2, _rez2, 0.0, radii, 1.0, grid=FINE)
    assert at_one == pytest.approx(0.1, rel=1e-3)


def test_singular_dimension_kernels():
    lin = HomogeneousHarmonicPoly(1, 1, [1.0])
    zero = HomogeneousHarmonicPoly(1, 1, [0.0])
    assert singular_dimension(lin, lin) == 0
    # A vanishing polynomial is uninformative: the other one decides,
    # conservatively capped at the thin dimension.
    assert singular_dimension(zero, lin) == 1
    with pytest.raises(ValueError, match="equal degree"):
        singular_dimension(lin, HomogeneousHarmonicPoly(1, 2, [1.0]))
    with pytest.raises(ValueError, match="zero"):
        singular_dimension(zero, zero)


def test_singular_dimension_two_thin_directions():
    b = harmonic_basis(2, 1)
    # Any nonzero linear form on a two-dimensional face has a line kernel.
    assert singular_dimension(b[0], b[1]) == 1


def test_continuity_probe_distances():
    p2 = HomogeneousHarmonicPoly(1, 2, [1.0])
    q2 = HomogeneousHarmonicPoly(1, 2, [2.0])
    a = FreeBoundaryPoint(x=-0.1, p_mu=p2, q_mu=p2)
    b = FreeBoundaryPoint(x=0.1, p_mu=p2, q_mu=p2)
    c = FreeBoundaryPoint(x=0.3, p_mu=p2, q_mu=q2)
    assert continuity_probe([a, b]) == 0.0
    # Adjacent pair (b, c) differs by one copy of Re z^2, whose
    # half-circle norm is sqrt(pi/2).
    assert continuity_probe([a, b, c]) == pytest.approx(np.sqrt(np.pi / 2), abs=1e-9)
    with pytest.raises(ValueError, match="at least two"):
        continuity_probe([a])
    with pytest.raises(ValueError, match="different fitted degrees"):
        continuity_probe([a, FreeBoundaryPoint(
            x=0.5, p_mu=HomogeneousHarmonicPoly(1, 3, [1.0]),
            q_mu=HomogeneousHarmonicPoly(1, 3, [1.0]))])
