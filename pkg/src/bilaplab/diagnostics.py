"""Radial diagnostics: frequency functionals, identity checks, growth fits.

Everything here measures a pair of fields (u, v) around a center on the thin
face through quadrature over half-spheres, half-balls, and thin balls:

    H(r)   surface integral of u^2 + v^2
    D0(r)  solid integral of |grad u|^2 + |grad v|^2
    D(r)   D0 + solid integral of u v + thin integral of F(u) v
    B(r)   surface integral of |grad u|^2 + |grad v|^2
    N0     r D0 / H        (frequency of the pair)
    N      r D / H         (perturbed frequency)
    phi    H / r^n
    W_mu   (H / r^(n+2mu)) (N0 - mu)
    M_mu   (1 / r^(n+2mu)) surface integral of (u-p)^2 + (v-q)^2

Fields may be ScalarFields (interpolated, gradients by central differences
with even reflection at the face) or plain callables on points (evaluated
exactly, gradients by small-step central differences on the even
extension). Analytic checks want callables; solver output wants fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import HalfBallGrid, sphere_quadrature
from .problem import ProblemSpec, ScalarField, discrete_laplacian, thin_reaction

_TOL = 1e-9

DEGENERATE_FACTOR = 1e-14  # H below this times sup(u^2+v^2) is flagged


# ---------------------------------------------------------------------------
# field probes


class AnalyticField:
    """Field on the half ball supplied with closed-form derivatives.

    `value` is required; `gradient` (points -> (N, d) array) and `laplacian`
    are optional and replace finite differences wherever given, which removes
    the finite-difference floor from identity checks. All three are called on
    (N, d) point arrays with y >= 0; queries below the face go through the
    even extension.
    """

    def __init__(self, value, gradient=None, laplacian=None):
        self.value = value
        self.gradient = gradient
        self.laplacian = laplacian

    def __call__(self, pts):
        return self.value(pts)


class FieldProbe:
    """Uniform evaluation interface over ScalarFields and callables.

    Evaluation always goes through the even extension: a query at (x, y) is
    answered at (x, |y|), so the vertical derivative vanishes on the face by
    symmetry rather than by approximation.
    """

    def __init__(self, w, grid: HalfBallGrid | None = None, fd_step: float = 1e-5):
        self._analytic = w if isinstance(w, AnalyticField) else None
        if isinstance(w, ScalarField):
            self.grid = w.grid
            self.kind = "grid"
            self._field = w
            self._gradient_boxes = None
        elif callable(w):
            if grid is None:
                raise ValueError("callable fields need an explicit grid for quadrature sizing")
            self.grid = grid
            self.kind = "callable"
            self._fn = w
            self.fd_step = float(fd_step)
        else:
            raise TypeError("field must be a ScalarField or a callable on points")

    # values ---------------------------------------------------------------

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if self.kind == "grid":
            return self._field(pts, extended=True)
        q = pts.copy()
        q[:, -1] = np.abs(q[:, -1])
        return np.asarray(self._fn(q), dtype=np.float64)

    # gradients ------------------------------------------------------------

    def _grid_gradient_boxes(self):
        if self._gradient_boxes is not None:
            return self._gradient_boxes
        g = self.grid
        box = self._field.ghost_box()
        h = g.h
        boxes = []
        for ax in range(g.n + 1):
            fwd = np.roll(box, -1, axis=ax)
            bwd = np.roll(box, 1, axis=ax)
            d = (fwd - bwd) / (2.0 * h)
            # roll wraps around; kill the wrapped faces
            sl = [slice(None)] * box.ndim
            sl[ax] = 0
            d[tuple(sl)] = np.nan
            sl[ax] = -1
            d[tuple(sl)] = np.nan
            if ax == g.n:
                # even extension: the vertical derivative vanishes on the face
                face = [slice(None)] * box.ndim
                face[ax] = 0
                second = [slice(None)] * box.ndim
                second[ax] = 1
                d[tuple(face)] = 0.0
                d[tuple(second)] = (np.take(box, 2, axis=ax) - np.take(box, 0, axis=ax)) / (2 * h)
            d = g.fill_extension(np.where(np.isfinite(d), d, np.nan))
            boxes.append(d)
        self._gradient_boxes = boxes
        return boxes

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if self._analytic is not None and self._analytic.gradient is not None:
            q = pts.copy()
            q[:, -1] = np.abs(q[:, -1])
            out = np.asarray(self._analytic.gradient(q), dtype=np.float64)
            out[pts[:, -1] < 0, -1] *= -1.0  # even extension
            return out
        if self.kind == "grid":
            boxes = self._grid_gradient_boxes()
            out = np.empty_like(pts)
            for ax, b in enumerate(boxes):
                out[:, ax] = self.grid.interp_box(b, pts, extended=True)
            return out
        d = self.fd_step
        out = np.empty_like(pts)
        for ax in range(pts.shape[1]):
            e = np.zeros(pts.shape[1])
            e[ax] = d
            out[:, ax] = (self.values(pts + e) - self.values(pts - e)) / (2.0 * d)
        return out

    def laplacian(self, pts: np.ndarray) -> np.ndarray:
        """Laplacian probe: exact-step differences for callables, the lattice
        Laplacian interpolated for grid fields (best away from the rim)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if self._analytic is not None and self._analytic.laplacian is not None:
            q = pts.copy()
            q[:, -1] = np.abs(q[:, -1])
            return np.asarray(self._analytic.laplacian(q), dtype=np.float64)
        if self.kind == "callable":
            d = max(self.fd_step, 1e-4)
            dim = pts.shape[1]
            acc = -2.0 * dim * self.values(pts)
            for ax in range(dim):
                e = np.zeros(dim)
                e[ax] = d
                acc += self.values(pts + e) + self.values(pts - e)
            return acc / d ** 2
        lap = discrete_laplacian(self._field)
        return lap(pts, extended=True)


def _as_probe(w, grid, spec: ProblemSpec | None = None) -> FieldProbe:
    if isinstance(w, FieldProbe):
        return w
    if grid is None and spec is not None:
        grid = spec.grid()
    return FieldProbe(w, grid=grid)


def _thin_center(n: int, center) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if c.size == n:
        c = np.concatenate([c, [0.0]])
    if c.size != n + 1:
        raise ValueError(f"center must have {n} or {n + 1} coordinates")
    return c


# ---------------------------------------------------------------------------
# radial profile


@dataclass
class RadialProfile:
    """Radial functionals of a field pair around a thin-face center.

    Arrays are indexed like `radii` (ascending). Rows where H is below
    DEGENERATE_FACTOR times the squared sup of the pair are flagged in
    `degenerate` and carry NaN in the H-normalized columns (N0, N, W, M).
    """

    center: np.ndarray
    radii: np.ndarray
    H: np.ndarray
    D0: np.ndarray
    D: np.ndarray
    B: np.ndarray
    N0: np.ndarray
    N: np.ndarray
    phi: np.ndarray
    mu: float | None = None
    W: np.ndarray | None = None
    M: np.ndarray | None = None
    degenerate: np.ndarray = dc_field(default=None)

    @property
    def degenerate_radii(self) -> np.ndarray:
        return self.radii[self.degenerate]


def default_radii(grid: HalfBallGrid, center, shrink: float = 0.9) -> np.ndarray:
    """Geometric radius ladder r_k = r_max 2^(-k/4) down to 4h, ascending.

    r_max is `shrink` times the distance from the center to the sphere.
    """
    c = _thin_center(grid.n, center)
    r_max = shrink * (1.0 - float(np.linalg.norm(c)))
    r_min = 4.0 * grid.h
    if r_max < r_min - _TOL:
        raise ValueError(f"no admissible radii: 0.9 dist = {r_max:.4g} < 4h = {r_min:.4g}")
    out = []
    r = r_max
    while r >= r_min - _TOL:
        out.append(r)
        r = r_max * 2.0 ** (-(len(out)) / 4.0)
    return np.array(out[::-1])


def compute_profile(u, v, center, radii, spec: ProblemSpec, mu: float | None = None,
                    p_mu=None, q_mu=None, m: int = 512, grid: HalfBallGrid | None = None,
                    ) -> RadialProfile:
    """Fill every radial functional by quadrature. See module docstring.

    u and v may be ScalarFields or callables; p_mu/q_mu (needed for M) are
    callables on points RELATIVE to the center, typically
    HomogeneousHarmonicPoly instances.
    """
    pu = _as_probe(u, grid, spec)
    pv = _as_probe(v, grid, spec)
    g = pu.grid
    c = _thin_center(g.n, center)
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    if radii.size == 0:
        raise ValueError("no radii supplied")

    K = radii.size
    H = np.zeros(K)
    D0 = np.zeros(K)
    Dv = np.zeros(K)
    Bv = np.zeros(K)
    sup2 = 0.0
    for k, r in enumerate(radii):
        quad = sphere_quadrature(g, c, float(r), m=m)
        us = pu.values(quad.surface_points)
        vs = pv.values(quad.surface_points)
        sup2 = max(sup2, float((us ** 2 + vs ** 2).max()))
        H[k] = quad.surface_weights @ (us ** 2 + vs ** 2)
        gu = pu.gradient(quad.surface_points)
        gv = pv.gradient(quad.surface_points)
        Bv[k] = quad.surface_weights @ ((gu ** 2).sum(axis=1) + (gv ** 2).sum(axis=1))
        gus = pu.gradient(quad.solid_points)
        gvs = pv.gradient(quad.solid_points)
        D0[k] = quad.solid_weights @ ((gus ** 2).sum(axis=1) + (gvs ** 2).sum(axis=1))
        ub = pu.values(quad.solid_points)
        vb = pv.values(quad.solid_points)
        cross = quad.solid_weights @ (ub * vb)
        ut = pu.values(quad.thin_points)
        vt = pv.values(quad.thin_points)
        thin = quad.thin_weights @ (thin_reaction(ut, spec) * vt)
        Dv[k] = D0[k] + cross + thin

    degenerate = H < DEGENERATE_FACTOR * max(sup2, 1e-300)
    safeH = np.where(degenerate, np.nan, H)
    N0 = radii * D0 / safeH
    N = radii * Dv / safeH
    phi = H / radii ** g.n

    W = M = None
    if mu is not None:
        W = (safeH / radii ** (g.n + 2 * mu)) * (N0 - mu)
        if p_mu is not None and q_mu is not None:
            M = np.zeros(K)
            for k, r in enumerate(radii):
                quad = sphere_quadrature(g, c, float(r), m=m)
                rel = quad.surface_points - c
                du = pu.values(quad.surface_points) - np.asarray(p_mu(rel))
                dv = pv.values(quad.surface_points) - np.asarray(q_mu(rel))
                M[k] = (quad.surface_weights @ (du ** 2 + dv ** 2)) / r ** (g.n + 2 * mu)
            M = np.where(degenerate, np.nan, M)

    return RadialProfile(center=c, radii=radii, H=H, D0=D0, D=Dv, B=Bv,
                         N0=N0, N=N, phi=phi, mu=mu, W=W, M=M,
                         degenerate=degenerate)


# ---------------------------------------------------------------------------
# identity checks


def rellich_residual(w, center, r: float, m: int = 512,
                     grid: HalfBallGrid | None = None,
                     spec: ProblemSpec | None = None) -> float:
    """|LHS - RHS| of the half-ball Rellich identity, coordinates centered.

        r int_surf (|grad w|^2 - 2 w_r^2)
          = (n-1) int_solid |grad w|^2
            - 2 int_solid (z . grad w) Lap w
            - 2 int_thin  (x . grad_x w) w_y

    The solid terms dot the full ambient position against the full ambient
    gradient; the thin term uses only the tangential coordinates and the
    vertical derivative (which vanishes for even fields, but the identity
    holds regardless).
    """
    p = _as_probe(w, grid, spec)
    g = p.grid
    c = _thin_center(g.n, center)
    quad = sphere_quadrature(g, c, float(r), m=m)

    gs = p.gradient(quad.surface_points)
    rel = quad.surface_points - c
    rad = rel / np.linalg.norm(rel, axis=1, keepdims=True)
    wr = (gs * rad).sum(axis=1)
    lhs = r * (quad.surface_weights @ ((gs ** 2).sum(axis=1) - 2.0 * wr ** 2))

    gb = p.gradient(quad.solid_points)
    relb = quad.solid_points - c
    lap = p.laplacian(quad.solid_points)
    rhs = (g.n - 1) * (quad.solid_weights @ (gb ** 2).sum(axis=1))
    rhs -= 2.0 * (quad.solid_weights @ ((relb * gb).sum(axis=1) * lap))

    gt = p.gradient(quad.thin_points)
    relt = quad.thin_points - c
    xdot = (relt[:, :-1] * gt[:, :-1]).sum(axis=1)
    rhs -= 2.0 * (quad.thin_weights @ (xdot * gt[:, -1]))
    return float(abs(lhs - rhs))


def poincare_check(w, r: float, m: int = 512, grid: HalfBallGrid | None = None,
                   spec: ProblemSpec | None = None) -> tuple[float, float]:
    """Both sides of (n/r^2) int w^2 <= (1/r) int_surf w^2 + int |grad w|^2."""
    p = _as_probe(w, grid, spec)
    g = p.grid
    quad = sphere_quadrature(g, np.zeros(g.n), float(r), m=m)
    wb = p.values(quad.solid_points)
    lhs = (g.n / r ** 2) * float(quad.solid_weights @ wb ** 2)
    ws = p.values(quad.surface_points)
    gb = p.gradient(quad.solid_points)
    rhs = float(quad.surface_weights @ ws ** 2) / r \
        + float(quad.solid_weights @ (gb ** 2).sum(axis=1))
    return lhs, rhs


def trace_check(w, r: float, m: int = 512, grid: HalfBallGrid | None = None,
                spec: ProblemSpec | None = None) -> tuple[float, float]:
    """Thin-ball mass of w^2 and the trace-inequality bracket (no constant).

    Returns (int_thin w^2, r int_solid |grad w|^2 + int_surf w^2); a uniform
    constant C with lhs <= C * bracket across a corpus certifies the trace
    inequality numerically.
    """
    p = _as_probe(w, grid, spec)
    g = p.grid
    quad = sphere_quadrature(g, np.zeros(g.n), float(r), m=m)
    wt = p.values(quad.thin_points)
    lhs = float(quad.thin_weights @ wt ** 2)
    gb = p.gradient(quad.solid_points)
    ws = p.values(quad.surface_points)
    bracket = r * float(quad.solid_weights @ (gb ** 2).sum(axis=1)) \
        + float(quad.surface_weights @ ws ** 2)
    return lhs, bracket


# ---------------------------------------------------------------------------
# frequency estimation and growth


def estimate_mu(profile: RadialProfile) -> tuple[float, int | None]:
    """Extrapolate the frequency N0 to r = 0 and gate it to an integer.

    Linear fit of N0 against r over the smallest half of the (non-degenerate)
    radii; the intercept is mu_hat. mu_int is the nearest integer when the
    distance to it is at most 0.15, else None.
    """
    ok = ~profile.degenerate & np.isfinite(profile.N0)
    r = profile.radii[ok]
    n0 = profile.N0[ok]
    if r.size < 8:
        raise ValueError(f"need at least 8 usable radii, have {r.size}")
    if r.max() < 2.0 * r.min() - _TOL:
        raise ValueError("radii must span at least one dyadic decade")
    half = max(2, r.size // 2)
    rs, ns = r[:half], n0[:half]
    slope, intercept = np.polyfit(rs, ns, 1)
    mu_hat = float(intercept)
    nearest = round(mu_hat)
    mu_int = int(nearest) if abs(mu_hat - nearest) <= 0.15 else None
    return mu_hat, mu_int


def sphere_sup(w, center, r: float, m: int = 512, grid=None,
               spec: ProblemSpec | None = None) -> float:
    """sup |w| over the upper half-sphere of radius r, by dense sampling."""
    p = _as_probe(w, grid, spec)
    quad = sphere_quadrature(p.grid, _thin_center(p.grid.n, center), float(r), m=m)
    return float(np.abs(p.values(quad.surface_points)).max())


def growth_fit(w, center, radii, m: int = 512, grid=None,
               spec: ProblemSpec | None = None) -> float:
    """Least-squares slope of log sup |w| on half-spheres against log r.

    Returns NaN when the field vanishes on every sampled sphere (degenerate);
    radii where the sup is exactly zero are dropped from the fit.
    """
    p = _as_probe(w, grid, spec)
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    sups = np.array([sphere_sup(p, center, r, m=m) for r in radii])
    keep = sups > 0
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(radii[keep]), np.log(sups[keep]), 1)[0]
    return float(slope)


def ball_sup(w: ScalarField, R: float) -> float:
    """Nodal sup of |w| over the ball of radius R (local boundedness report)."""
    g = w.grid
    rad = np.linalg.norm(g.nodes, axis=1)
    sel = rad <= R + _TOL
    return float(np.abs(w.values[sel]).max()) if sel.any() else 0.0


# ---------------------------------------------------------------------------
# mean-value (subharmonicity) check


def mean_value_violation(w: ScalarField, rho: float, m: int = 64) -> float:
    """Max over interior nodes of w(z) minus its circle average at radius rho.

    The average is over the full sphere of radius rho around the node inside
    the even extension (queries below the face are mirrored). Only nodes with
    the whole ball inside the unit ball participate. A subharmonic field has
    nonpositive violation up to interpolation error O(h^2).
    """
    g = w.grid
    ids = g.interior_ids
    pts = g.nodes[ids]
    ok = np.linalg.norm(pts, axis=1) + rho <= 1.0 + _TOL
    pts = pts[ok]
    vals = w.values[ids[ok]]
    if pts.shape[0] == 0:
        return 0.0
    if g.n == 1:
        theta = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        direc = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        wgt = np.full(m, 1.0 / m)
    else:
        mt = max(8, m // 4)
        t, wt = np.polynomial.legendre.leggauss(mt)
        phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        sinp = np.sqrt(1.0 - t ** 2)
        direc = np.stack([
            (sinp[:, None] * np.cos(phi)[None, :]).ravel(),
            (sinp[:, None] * np.sin(phi)[None, :]).ravel(),
            np.broadcast_to(t[:, None], (mt, m)).ravel(),
        ], axis=-1)
        wgt = (np.broadcast_to(wt[:, None], (mt, m)).ravel()) / (2.0 * m)
    samples = pts[:, None, :] + rho * direc[None, :, :]
    flat = samples.reshape(-1, g.n + 1)
    svals = w(flat, extended=True).reshape(pts.shape[0], -1)
    means = svals @ wgt
    return float((vals - means).max())


# ---------------------------------------------------------------------------
# monotonicity-constant fitting


def minimal_almgren_constant(radii, N, slack: float = 1e-3, c_max: float = 50.0,
                             c_steps: int = 5001) -> float:
    """Least C in [0, c_max] making e^(Cr) (N(r)+1) nondecreasing with slack.

    Nondecreasing with per-step slack means every adjacent pair (ascending r)
    satisfies value(r_next) >= value(r_prev) - slack. Returns NaN when even
    c_max fails. Scanned on a uniform C grid (resolution c_max/(c_steps-1)).
    """
    r = np.asarray(radii, dtype=np.float64)
    f = np.asarray(N, dtype=np.float64) + 1.0
    order = np.argsort(r)
    r, f = r[order], f[order]
    keep = np.isfinite(f)
    r, f = r[keep], f[keep]
    if r.size < 2:
        return 0.0
    C = np.linspace(0.0, c_max, c_steps)
    vals = np.exp(C[:, None] * r[None, :]) * f[None, :]
    ok = (np.diff(vals, axis=1) >= -slack).all(axis=1)
    if not ok.any():
        return float("nan")
    return float(C[np.argmax(ok)])


def minimal_monneau_constant(radii, M, slack: float = 1e-3, c_max: float = 50.0) -> float:
    """Least C in [0, c_max] making M(r) + C r nondecreasing with slack.

    Closed form: each adjacent pair needs C >= (drop - slack) / dr; the
    answer is the max over pairs, clamped at 0; NaN when it exceeds c_max.
    """
    r = np.asarray(radii, dtype=np.float64)
    f = np.asarray(M, dtype=np.float64)
    order = np.argsort(r)
    r, f = r[order], f[order]
    keep = np.isfinite(f)
    r, f = r[keep], f[keep]
    if r.size < 2:
        return 0.0
    need = (-(np.diff(f)) - slack) / np.diff(r)
    c = max(0.0, float(need.max()))
    return c if c <= c_max else float("nan")
