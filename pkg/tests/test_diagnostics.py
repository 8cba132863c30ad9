"""Radial functionals, integral identities, and fitting helpers."""

import numpy as np
import pytest

from bilaplab import AnalyticField, ProblemSpec, ScalarField, build_grid
from bilaplab.diagnostics import (
    FieldProbe,
    RadialProfile,
    compute_profile,
    default_radii,
    estimate_mu,
    growth_fit,
    mean_value_violation,
    minimal_almgren_constant,
    minimal_monneau_constant,
    poincare_check,
    rellich_residual,
    sphere_sup,
    trace_check,
)

FINE = build_grid(1, 1.0 / 256.0)
SPEC = ProblemSpec(n=1, p=2.0, lambda_plus=1.0, lambda_minus=1.0,
                   g="zero", h=1.0 / 256.0)


def _ones(pts):
    return np.ones(len(np.atleast_2d(pts)))


def test_poincare_closed_form_for_constants():
    """For w = 1 the two sides are the half-disc and half-circle masses."""
    lhs, rhs = poincare_check(_ones, 0.5, grid=FINE)
    assert lhs == pytest.approx(np.pi / 2, abs=1e-12)
    assert rhs == pytest.approx(np.pi, abs=1e-12)
    assert lhs <= rhs


def test_trace_closed_form_for_constants():
    lhs, bracket = trace_check(_ones, 0.5, grid=FINE)
    assert lhs == pytest.approx(1.0, abs=1e-12)
    assert bracket == pytest.approx(np.pi / 2, abs=1e-12)


def test_rellich_identity_vanishes_on_smooth_field():
    ysq = AnalyticField(
        value=lambda p: p[:, 1] ** 2,
        gradient=lambda p: np.column_stack([np.zeros(len(p)), 2.0 * p[:, 1]]),
        laplacian=lambda p: np.full(len(p), 2.0),
    )
    assert rellich_residual(ysq, 0.0, 0.9, grid=FINE) < 1e-12


def test_frequency_of_homogeneous_harmonic_pair():
    # u = v = Re z^2 has scaling exponent exactly 2 at every radius.
    w = lambda p: p[:, 0] ** 2 - p[:, 1] ** 2
    radii = np.geomspace(0.05, 0.5, 9)
    prof = compute_profile(w, w, 0.0, radii, SPEC, grid=FINE)
    assert not prof.degenerate.any()
    assert np.abs(prof.N0 - 2.0).max() < 1e-9
    # The full frequency adds cross and reaction terms of lower order,
    # so it drifts from 2 by O(r) and tightens as r shrinks.
    assert np.abs(prof.N - 2.0).max() < 0.05
    assert abs(prof.N[0] - 2.0) < 0.01


def test_growth_fit_recovers_homogeneity_degree():
    w = lambda p: p[:, 0] ** 2 - p[:, 1] ** 2
    radii = np.geomspace(0.05, 0.5, 9)
    assert growth_fit(w, 0.0, radii, grid=FINE) == pytest.approx(2.0, abs=1e-12)


def test_sphere_sup_radial_field():
    w = lambda p: (p ** 2).sum(axis=1)
    assert sphere_sup(w, 0.0, 0.3, grid=FINE) == pytest.approx(0.09, abs=1e-14)


def test_default_radii_ladder():
    g = build_grid(1, 1.0 / 16.0)
    radii = default_radii(g, 0.0)
    assert radii[-1] == pytest.approx(0.9)
    assert radii[0] >= 4.0 * g.h - 1e-12
    assert np.all(np.diff(radii) > 0)
    ratios = radii[1:] / radii[:-1]
    assert np.allclose(ratios, 2.0 ** 0.25, atol=1e-12)
    with pytest.raises(ValueError, match="no admissible radii"):
        default_radii(g, 0.98)


def test_mean_value_violation_signs():
    g = build_grid(1, 1.0 / 16.0)
    rsq = ScalarField(g, (g.nodes ** 2).sum(axis=1))
    harmonic = ScalarField(g, g.nodes[:, 0].copy())
    cap = ScalarField(g, -(g.nodes ** 2).sum(axis=1))
    # Laplacian 4: circle mean exceeds the center value by rho^2.
    assert mean_value_violation(rsq, 0.25) < -0.05
    assert abs(mean_value_violation(harmonic, 0.25)) < 1e-12
    assert mean_value_violation(cap, 0.25) > 0.05


def _profile_with_n0(radii, n0):
    k = len(radii)
    z = np.zeros(k)
    return RadialProfile(center=np.zeros(1), radii=np.asarray(radii),
                         H=np.ones(k), D0=z, D=z, B=z, N0=np.asarray(n0),
                         N=np.asarray(n0), phi=np.ones(k),
                         degenerate=np.zeros(k, dtype=bool))


def test_estimate_mu_extrapolates_to_zero_radius():
    radii = np.geomspace(0.05, 0.4, 16)
    mu_hat, mu_int = estimate_mu(_profile_with_n0(radii, 2.0 + 0.5 * radii))
    assert mu_hat == pytest.approx(2.0, abs=1e-10)
    assert mu_int == 2


def test_estimate_mu_rejects_distant_integers():
    radii = np.geomspace(0.05, 0.4, 16)
    mu_hat, mu_int = estimate_mu(_profile_with_n0(radii, 2.3 + 0.1 * radii))
    assert mu_int is None


def test_estimate_mu_preconditions():
    with pytest.raises(ValueError, match="at least 8"):
        estimate_mu(_profile_with_n0(np.geomspace(0.1, 0.4, 6), np.ones(6)))
    with pytest.raises(ValueError, match="span"):
        estimate_mu(_profile_with_n0(np.linspace(0.1, 0.15, 10), np.ones(10)))


def test_minimal_almgren_constant_scan():
    # Drop from 2.0 to 1.9 over [1.9, 2.0] needs C ~ 10 ln(2/1.9); the
    # 0.01-step scan lands on 0.52.
    c = minimal_almgren_constant([1.9, 2.0], [1.0, 0.9])
    assert c == pytest.approx(0.52, abs=1e-9)
    assert minimal_almgren_constant([0.1, 0.2, 0.3], [1.0, 1.1, 1.2]) == 0.0
    # Over a step of 0.001 even C = 50 multiplies by only e^0.05, which
    # cannot compensate a drop from 100 to 1.
    assert np.isnan(minimal_almgren_constant([0.5, 0.501], [99.0, 0.0]))


def test_minimal_monneau_constant_closed_form():
    c = minimal_monneau_constant([1.0, 2.0], [1.0, 0.9])
    assert c == pytest.approx(0.099, abs=1e-12)
    assert minimal_monneau_constant([1.0, 2.0], [1.0, 1.5]) == 0.0
    assert np.isnan(minimal_monneau_constant([1.0, 1.001], [1.0, 0.0]))


def test_analytic_field_probe_uses_supplied_derivatives():
    f = AnalyticField(
        value=lambda p: p[:, 0] ** 2 * p[:, 1] ** 2,
        gradient=lambda p: np.column_stack([2 * p[:, 0] * p[:, 1] ** 2,
                                            2 * p[:, 0] ** 2 * p[:, 1]]),
        laplacian=lambda p: 2 * p[:, 1] ** 2 + 2 * p[:, 0] ** 2,
    )
    probe = FieldProbe(f, grid=FINE)
    below = np.array([[0.3, -0.4]])
    # Even extension: the vertical derivative flips sign below the face.
    assert np.allclose(probe.gradient(below), [[0.096, -0.072]], atol=1e-14)
    assert probe.laplacian(below)[0] == pytest.approx(0.5, abs=1e-14)


def test_probe_requires_grid_for_callables():
    with pytest.raises(ValueError, match="grid"):
        FieldProbe(lambda p: p[:, 0])
