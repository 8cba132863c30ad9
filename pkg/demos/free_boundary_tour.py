#!/usr/bin/env python3
"""Trace the free boundary of the thin trace across grid refinements.

The free boundary separates {u > 0} from {u < 0} inside the flat face.
Each extracted point is classified by the size of the tangential
derivatives of u and v = Lap u there, then the blow-up pipeline fits
homogeneous harmonic polynomials to the rescaled pair and reports the
fitted degree, the misfit, and the dimension of the singular stratum the
fitted pair would carry.
"""

import numpy as np

from bilaplab import ProblemSpec, minimize
from bilaplab.freeboundary import analyze_point, extract_gamma

CONFIGS = {
    "equal weights, odd datum": dict(lambda_plus=1.0, lambda_minus=1.0,
                                     g="harmonic:deg=1"),
    "unequal weights, mixed datum": dict(lambda_plus=2.0, lambda_minus=0.5,
                                         g="harmonic:coeffs=1;0.2"),
}

for label, kw in CONFIGS.items():
    print(f"\n=== {label} ===")
    for h_inv in (16, 32, 64):
        spec = ProblemSpec(n=1, p=2.0, h=1.0 / h_inv, **kw)
        result = minimize(spec)
        points = extract_gamma(result.u, spec)
        print(f"h = 1/{h_inv}: {len(points)} free-boundary point(s)")
        for pt in points:
            analyze_point(pt, result.u, result.v, spec)
            mu = "-" if pt.mu_hat is None else f"{pt.mu_hat:7.4f}"
            mi = "-" if pt.mu_int is None else str(pt.mu_int)
            res = "-" if pt.fit_residual is None else f"{pt.fit_residual:.2e}"
            dim = "-" if pt.dimension is None else str(pt.dimension)
            print(f"    x* = {pt.x:+.5f}  side {pt.side:4s}  {pt.classification:8s}"
                  f"  mu_hat {mu}  mu_int {mi}  misfit {res}  stratum dim {dim}")
            print(f"      |u(x*)| = {abs(pt.value_u):.2e}   |v(x*)| = {abs(pt.value_v):.2e}"
                  f"   |du/dx| = {abs(pt.grad_u):.3f}   |dv/dx| = {abs(pt.grad_v):.3f}")

print("""
Reading the table: a REGULAR point has a transversal zero of the trace
with a nonzero tangential derivative of v, so locally the free boundary
is a point moving smoothly with the data. |v(x*)| shrinking with h is
the numerical trace of the contact condition v = 0 on the free boundary;
in the unequal-weight run it saturates instead, which the acceptance
suite reports honestly as a failed check.""")
