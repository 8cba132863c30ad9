"""Problem data and the discrete energy for the two-phase thin-obstacle model.

The continuous functional over the upper half-ball is

    J[w] = int_{B1+} (Lap w)^2
         + (2/p) int_{B1'} lambda_minus (w^-)^p + lambda_plus (w^+)^p,

minimized over fields matching the Dirichlet datum g on the spherical part
of the boundary, with the natural (even reflection) condition on the flat
face. This module discretizes J on the lattice half-ball: the Laplacian is
the standard (2n+3)-point star with the ghost row below the face eliminated
by even reflection, the volume term uses cell weights (half cells on the
face), and the face penalty uses trapezoid weights for n = 1 and full cell
weights for n = 2.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp

from .grid import CORNER, OUTER, THIN, HalfBallGrid, build_grid
from .harmonics import HomogeneousHarmonicPoly, basis_size


# ---------------------------------------------------------------------------
# boundary data


class BoundaryDatum:
    """Dirichlet datum on the spherical boundary, from a small family registry.

    Families (all extend evenly across y = 0 by construction):
      zero                          g = 0
      harmonic:deg=K[,coef=c]       c * (degree-K even harmonic polynomial,
                                    first basis element; n=1 gives Re((x+iy)^K))
      harmonic:coeffs=c1;c2;...     sum_k c_k * (first basis element of degree k),
                                    k = 1, 2, ...
      trig:freq=a[,amp=c][,kind=cos|sin]   c*cos(a x1)*cosh(a y) or the sin variant
      tabulated:values=v0;v1;...;vK  n=1 only: linear interpolation in the polar
                                    angle over [0, pi], sample i at i*pi/K
    """

    def __init__(self, description: str, n: int = 1):
        self.description = description.strip()
        self.n = n
        head, _, tail = self.description.partition(":")
        self.family = head.strip()
        params = {}
        if tail:
            for item in tail.split(","):
                key, _, val = item.partition("=")
                if not _:
                    raise ValueError(f"malformed boundary datum parameter {item!r}")
                params[key.strip()] = val.strip()
        self._build(params)

    def _build(self, params):
        fam = self.family
        if fam == "zero":
            if params:
                raise ValueError("family 'zero' takes no parameters")
            self._fn = lambda pts: np.zeros(pts.shape[0])
        elif fam == "harmonic":
            if "coeffs" in params:
                coeffs = [float(v) for v in params["coeffs"].split(";")]
                polys = []
                for k, c in enumerate(coeffs, start=1):
                    vec = np.zeros(basis_size(self.n, k))
                    vec[0] = c
                    polys.append(HomogeneousHarmonicPoly(self.n, k, vec))
                self._fn = lambda pts: sum(p(pts) for p in polys)
            else:
                deg = int(params.pop("deg"))
                coef = float(params.pop("coef", "1"))
                if params:
                    raise ValueError(f"unknown harmonic parameters {sorted(params)}")
                vec = np.zeros(basis_size(self.n, deg))
                vec[0] = coef
                poly = HomogeneousHarmonicPoly(self.n, deg, vec)
                self._fn = poly
        elif fam == "trig":
            freq = float(params.pop("freq"))
            amp = float(params.pop("amp", "1"))
            kind = params.pop("kind", "cos")
            if params:
                raise ValueError(f"unknown trig parameters {sorted(params)}")
            if kind == "cos":
                self._fn = lambda pts: amp * np.cos(freq * pts[:, 0]) * np.cosh(freq * pts[:, -1])
            elif kind == "sin":
                self._fn = lambda pts: amp * np.sin(freq * pts[:, 0]) * np.cosh(freq * pts[:, -1])
            else:
                raise ValueError(f"trig kind must be cos or sin, got {kind!r}")
        elif fam == "tabulated":
            if self.n != 1:
                raise ValueError("tabulated boundary data is only supported for n = 1")
            vals = np.array([float(v) for v in params.pop("values").split(";")])
            if params:
                raise ValueError(f"unknown tabulated parameters {sorted(params)}")
            if vals.size < 2:
                raise ValueError("tabulated datum needs at least two samples")
            thetas = np.linspace(0.0, math.pi, vals.size)

            def fn(pts):
                ang = np.arctan2(np.abs(pts[:, -1]), pts[:, 0])
                return np.interp(ang, thetas, vals)

            self._fn = fn
        else:
            raise ValueError(f"unknown boundary datum family {fam!r}")

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self._fn(pts)

    def __repr__(self):
        return f"BoundaryDatum({self.description!r}, n={self.n})"


def as_datum(g, n: int) -> object:
    """Coerce a string spec or callable into something callable on points."""
    if isinstance(g, str):
        return BoundaryDatum(g, n=n)
    if callable(g):
        return g
    raise TypeError("boundary datum must be a family string or a callable")


# ---------------------------------------------------------------------------
# problem record


@dataclass
class ProblemSpec:
    """Everything that pins down one discrete minimization problem.

    p is the penalty exponent (p > 1), lambda_plus / lambda_minus the phase
    weights (both > 0), g the Dirichlet datum on the spherical boundary,
    h the lattice spacing (1/h a positive integer). tol_grad = None selects
    the default stopping rule  sup|grad J| <= 1e-8 * (1 + |J|).
    """

    n: int = 1
    p: float = 2.0
    lambda_plus: float = 1.0
    lambda_minus: float = 1.0
    g: object = "zero"
    h: float = 1.0 / 16
    tol_grad: float | None = None
    max_iter: int = 200
    _grid: HalfBallGrid | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"thin dimension n must be 1 or 2, got {self.n}")
        if not self.p > 1:
            raise ValueError(f"penalty exponent must satisfy p > 1, got {self.p}")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            # the two-phase model has positive weights; 0 is accepted as the
            # pure-biharmonic limit used by the cross-check examples
            raise ValueError("phase weights lambda_plus, lambda_minus must be nonnegative")
        self.g = as_datum(self.g, self.n)

    @property
    def q(self) -> float:
        """Integrability exponent attached to the problem: q = max(2, p)."""
        return max(2.0, self.p)

    def grid(self) -> HalfBallGrid:
        if self._grid is None:
            self._grid = build_grid(self.n, self.h)
        return self._grid

    def describe(self) -> str:
        gdesc = getattr(self.g, "description", getattr(self.g, "__name__", "callable"))
        return (f"n={self.n} p={self.p:g} lambda_plus={self.lambda_plus:g} "
                f"lambda_minus={self.lambda_minus:g} g={gdesc} h={self.h:g}")

    def digest(self) -> str:
        return hashlib.sha256(self.describe().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# fields


@dataclass
class ScalarField:
    """Node values on a half-ball grid, with a role tag ("u", "v", ...)."""

    grid: HalfBallGrid
    values: np.ndarray
    role: str = "u"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.node_count,):
            raise ValueError("field values must be one float per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        self._box = None

    def ghost_box(self) -> np.ndarray:
        """Dense box of values with NaN outside, extrapolated one cell out."""
        if self._box is None:
            box = self.grid.to_box(self.values)
            self._box = self.grid.fill_extension(box)
        return self._box

    def with_values(self, values, role=None) -> "ScalarField":
        return ScalarField(self.grid, values, role or self.role)

    def __call__(self, points, extended: bool = False):
        return self.grid.interp_box(self.ghost_box(), points, extended=extended)


def zero_field(grid: HalfBallGrid, role: str = "u") -> ScalarField:
    return ScalarField(grid, np.zeros(grid.node_count), role)


# ---------------------------------------------------------------------------
# reaction terms on the thin face


def thin_reaction(t, spec: ProblemSpec):
    """F(t) = lambda_minus (t^-)^(p-1) - lambda_plus (t^+)^(p-1).

    The sign convention makes F(t) and t opposite in sign, so the natural
    boundary condition pushes the trace toward zero from both phases.
    """
    t = np.asarray(t, dtype=np.float64)
    pos = np.maximum(t, 0.0)
    neg = np.maximum(-t, 0.0)
    e = spec.p - 1.0
    return spec.lambda_minus * neg ** e - spec.lambda_plus * pos ** e


def thin_reaction_derivative(t, spec: ProblemSpec):
    """G(t) = F'(t) = -(p-1)(lambda_minus (t^-)^(p-2) + lambda_plus (t^+)^(p-2)).

    Defined for p >= 2 only; for 1 < p < 2 the derivative blows up at the
    sign change and the Newton model is invalid, so we refuse. At p = 2 the
    kink at t = 0 is resolved by G(0) = 0 (the minimal-norm element of the
    generalized derivative interval).
    """
    if spec.p < 2:
        raise ValueError("thin_reaction_derivative requires p >= 2")
    t = np.asarray(t, dtype=np.float64)
    e = spec.p - 2.0
    if spec.p == 2.0:
        out = np.where(t > 0, -spec.lambda_plus, 0.0) + np.where(t < 0, -spec.lambda_minus, 0.0)
        return out
    pos = np.maximum(t, 0.0)
    neg = np.maximum(-t, 0.0)
    return -(spec.p - 1.0) * (spec.lambda_minus * neg ** e + spec.lambda_plus * pos ** e)


# ---------------------------------------------------------------------------
# discrete operators, cached per grid


def operators(grid: HalfBallGrid) -> SimpleNamespace:
    """Assemble (once per grid) the pieces of the discrete energy.

    L      core Laplacian, rows = free nodes in free_ids order, columns = all
           nodes; the ghost row below the face is eliminated by even
           reflection, which doubles the upward coupling at face nodes.
    omega  volume weights per free node: h^(n+1), halved on the face.
    face_w face quadrature weights indexed like face_ids (trapezoid for n=1).
    K      L^T diag(omega) L, the quadratic-part matrix on all nodes.
    """
    ops = getattr(grid, "_ops", None)
    if ops is not None:
        return ops
    dim = grid.n + 1
    h = grid.h
    free = grid.free_ids
    E = free.size
    lat = grid.lattice[free]
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    base = np.arange(E)
    add(base, grid.box_ids[tuple(lat.T)], np.full(E, -2.0 * dim))
    for ax in range(dim):
        for d in (1, -1):
            nb = lat.copy()
            nb[:, ax] += d
            if ax == dim - 1:
                nb[nb[:, ax] < 0, ax] = 1  # even reflection across the face
            cid = grid.box_ids[tuple(nb.T)]
            if np.any(cid < 0):
                raise AssertionError("free-node stencil neighbor missing")
            add(base, cid, np.ones(E))
    L = sp.coo_matrix(
        (np.concatenate(vals) / h ** 2, (np.concatenate(rows), np.concatenate(cols))),
        shape=(E, grid.node_count),
    ).tocsr()

    omega = np.full(E, h ** dim)
    omega[grid.node_class[free] == THIN] *= 0.5

    if grid.n == 1:
        face_w = np.full(grid.face_ids.size, h)
        face_w[[0, -1]] = h / 2.0
    else:
        face_w = np.full(grid.face_ids.size, h ** 2)
    face_w_by_node = np.zeros(grid.node_count)
    face_w_by_node[grid.face_ids] = face_w

    K = (L.multiply(omega[:, None])).T @ L
    K = K.tocsr()

    ops = SimpleNamespace(L=L, omega=omega, face_w=face_w,
                          face_w_by_node=face_w_by_node, K=K,
                          K_diag=K.diagonal())
    grid._ops = ops
    return ops


def _sw_boundary_rows(grid: HalfBallGrid):
    """Unequal-arm Laplacian rows at pinned nodes, using boundary crossings.

    For each pinned node and each axis, the stencil arm toward the circle is
    shortened to the exact crossing point, where the Dirichlet datum supplies
    the value. Nodes lying on the circle itself (arm length 0) are skipped
    and reported in the mask. Returns (A, C, cross_points, defined_mask):
    values at pinned nodes come out as A @ w + C @ g(cross_points), valid
    where defined_mask is True.
    """
    cached = getattr(grid, "_sw", None)
    if cached is not None:
        return cached
    dim = grid.n + 1
    h, M = grid.h, grid.M
    pinned = grid.pinned_ids
    rowsA, colsA, valsA = [], [], []
    rowsC, colsC, valsC = [], [], []
    cross_pts = []
    defined = np.zeros(grid.node_count, dtype=bool)
    for nid in pinned:
        idx = grid.lattice[nid]
        z = grid.nodes[nid]
        r2 = float(z @ z)
        entries = []  # (kind, key, coef) with kind in {node, cross, center}
        ok = True
        for ax in range(dim):
            arm = {}
            for d in (1, -1):
                nb = idx.copy()
                nb[ax] += d
                if ax == dim - 1 and nb[ax] < 0:
                    nb[ax] = 1  # even reflection below the face
                cen = nb.astype(np.int64).copy()
                cen[:-1] -= M  # box indices are offset by M in the thin axes
                in_box = np.all(nb >= 0) and np.all(nb < np.array(grid.box_shape))
                inside = in_box and int(cen @ cen) <= M * M
                if inside:
                    arm[d] = ("node", int(grid.box_ids[tuple(nb)]), h)
                else:
                    rest2 = r2 - z[ax] ** 2
                    target = math.sqrt(max(1.0 - rest2, 0.0))
                    s = (target - z[ax]) if d > 0 else (z[ax] + target)
                    if s <= 1e-12:
                        ok = False
                        break
                    zc = z.copy()
                    zc[ax] = target if d > 0 else -target
                    arm[d] = ("cross", len(cross_pts), s)
                    cross_pts.append(zc)
            if not ok:
                break
            a = arm[1][2]
            b = arm[-1][2]
            entries.append((arm[1][0], arm[1][1], 2.0 / (a * (a + b))))
            entries.append((arm[-1][0], arm[-1][1], 2.0 / (b * (a + b))))
            entries.append(("center", nid, -2.0 / (a * b)))
        if not ok:
            continue
        defined[nid] = True
        for kind, key, coef in entries:
            if kind == "cross":
                rowsC.append(nid)
                colsC.append(key)
                valsC.append(coef)
            else:
                rowsA.append(nid)
                colsA.append(key)
                valsA.append(coef)
    N = grid.node_count
    A = sp.coo_matrix((valsA, (rowsA, colsA)), shape=(N, N)).tocsr()
    C = sp.coo_matrix((valsC, (rowsC, colsC)), shape=(N, max(len(cross_pts), 1))).tocsr()
    pts = np.array(cross_pts) if cross_pts else np.zeros((0, dim))
    grid._sw = (A, C, pts, defined)
    return grid._sw


def discrete_laplacian(w: ScalarField, boundary=None) -> ScalarField:
    """Lattice Laplacian of a field, as a field with role "v".

    At free nodes this is the reflected star stencil. At pinned nodes the
    value is 0 unless `boundary` (a callable on points) is given, in which
    case unequal-arm stencils reaching to the exact circle crossings are
    used; nodes sitting on the circle itself stay 0.
    """
    grid = w.grid
    ops = operators(grid)
    out = np.zeros(grid.node_count)
    out[grid.free_ids] = ops.L @ w.values
    if boundary is not None:
        A, C, pts, defined = _sw_boundary_rows(grid)
        gvals = np.asarray(boundary(pts), dtype=np.float64) if pts.size else np.zeros(0)
        vals = A @ w.values + C @ gvals
        sel = defined
        out[sel] = vals[sel]
    return ScalarField(grid, out, role="v")


# ---------------------------------------------------------------------------
# energy, gradient, Hessian action


def energy_array(grid: HalfBallGrid, w: np.ndarray, spec: ProblemSpec) -> float:
    ops = operators(grid)
    Lw = ops.L @ w
    quad = float(ops.omega @ (Lw * Lw))
    tr = w[grid.face_ids]
    pos = np.maximum(tr, 0.0)
    neg = np.maximum(-tr, 0.0)
    pen = (2.0 / spec.p) * float(
        ops.face_w @ (spec.lambda_minus * neg ** spec.p + spec.lambda_plus * pos ** spec.p)
    )
    return quad + pen


def gradient_array(grid: HalfBallGrid, w: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    ops = operators(grid)
    g = 2.0 * (ops.K @ w)
    thin = grid.thin_ids
    g[thin] -= 2.0 * ops.face_w_by_node[thin] * thin_reaction(w[thin], spec)
    g[grid.pinned_ids] = 0.0
    return g


def energy(w: ScalarField, spec: ProblemSpec) -> float:
    """Discrete J[w]: volume-weighted squared Laplacian plus face penalty."""
    return energy_array(w.grid, w.values, spec)


def energy_gradient(w: ScalarField, spec: ProblemSpec) -> ScalarField:
    """Gradient of the discrete energy; zero at pinned (Dirichlet) nodes.

    d/dw_i of the face penalty is -2 face_w_i F(w_i) by the sign convention
    of thin_reaction, so the stationarity system couples the bi-Laplacian
    rows with the reaction on the face.
    """
    return ScalarField(w.grid, gradient_array(w.grid, w.values, spec), role="residual")


def energy_hessian_apply(w: ScalarField, direction: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Action of the (generalized) Hessian at w on a free-node direction.

    The direction is a full-length vector; pinned entries are ignored and
    the output is zero there. Positive semidefinite: the quadratic part is
    2 L^T diag(omega) L and the penalty contributes +2 face_w |G| on the
    face diagonal (G <= 0 for p >= 2).
    """
    grid = w.grid
    ops = operators(grid)
    d = np.asarray(direction, dtype=np.float64).copy()
    d[grid.pinned_ids] = 0.0
    out = 2.0 * (ops.K @ d)
    thin = grid.thin_ids
    gg = thin_reaction_derivative(w.values[thin], spec)
    out[thin] += 2.0 * ops.face_w_by_node[thin] * np.abs(gg) * d[thin]
    out[grid.pinned_ids] = 0.0
    return out


def dirichlet_values(spec: ProblemSpec) -> np.ndarray:
    """Datum values at the pinned (Dirichlet-band) nodes.

    Boundary datum families define functions on the closed half-ball whose
    restriction to the circle is the datum (harmonic polynomials and
    trigonometric data are plane formulas; tabulated data reads the node's
    polar angle, which is its radial projection). Evaluating them at the
    node positions keeps analytic pairs exact when the datum extends the
    solution, and is O(h)-consistent in general, like any realization of
    circle data on an interior node band.
    """
    grid = spec.grid()
    return np.asarray(spec.g(grid.nodes[grid.pinned_ids]), dtype=np.float64)
