"""Uniform Cartesian grid over the closed upper half-ball.

The computational domain is the upper half-ball together with its thin face,

    {z = (x, y) : |z| <= 1, y >= 0},   x in R^n, y in R,

in ambient dimension n + 1 (n = 1: upper half-disk).  Nodes are the lattice
points (i*h, j*h) with j >= 0 inside the closed ball, classified as

    INTERIOR  y > 0, more than h from the curved boundary
    OUTER     y > 0, within h of the curved boundary (carries Dirichlet data)
    THIN      y = 0, |x| < 1 - h
    CORNER    y = 0, |x| >= 1 - h (carries Dirichlet data)

Classification is integer-exact: a lattice point (i, j) is inside iff
i.i + j^2 <= M^2 with M = 1/h, and the h-band tests compare against (M-1)^2.

Even extension across y = 0 is realized by index reflection (`mirror_points`,
`reflect`, and `interp(..., extended=True)`); mirrored values are never
stored twice.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

INTERIOR, OUTER, THIN, CORNER = 0, 1, 2, 3
CLASS_NAMES = {INTERIOR: "INTERIOR", OUTER: "OUTER", THIN: "THIN", CORNER: "CORNER"}

_TOL = 1e-9


class OutOfDomainError(ValueError):
    """Raised when an evaluation point lies outside the grid coverage."""


@functools.lru_cache(maxsize=64)
def _leggauss(m: int):
    return np.polynomial.legendre.leggauss(m)


def _gauss_on(a: float, b: float, m: int):
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    t, w = _leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


def _shift(a: np.ndarray, axis: int, k: int) -> np.ndarray:
    """Shift `a` by k along `axis`, filling vacated entries with NaN."""
    out = np.full_like(a, np.nan)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k > 0:
        dst[axis] = slice(k, None)
        src[axis] = slice(None, -k)
    else:
        dst[axis] = slice(None, k)
        src[axis] = slice(-k, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


class HalfBallGrid:
    """Discretized closed upper half-ball with node classification.

    Parameters
    ----------
    n : int
        Thin-space dimension, 1 or 2.
    h : float
        Grid spacing; 1/h must be a positive integer. Solving requires
        h <= 1/2; h = 1 is accepted for enumeration-only use.
    """

    def __init__(self, n: int, h: float):
        if n not in (1, 2):
            raise ValueError(f"thin dimension n must be 1 or 2, got {n}")
        M = int(round(1.0 / h))
        if M < 1 or abs(M * h - 1.0) > 1e-9:
            raise ValueError(f"spacing h={h} does not divide 1 into an integer number of cells")
        self.n = n
        self.h = float(h)
        self.M = M

        axes = [np.arange(-M, M + 1)] * n + [np.arange(0, M + 1)]
        lat = np.meshgrid(*axes, indexing="ij")
        r2 = sum(a * a for a in lat)
        y = lat[-1]
        x2 = r2 - y * y
        inside = r2 <= M * M

        band2 = (M - 1) * (M - 1)
        cls = np.where(
            y == 0,
            np.where(x2 >= band2, CORNER, THIN),
            np.where(r2 > band2, OUTER, INTERIOR),
        ).astype(np.uint8)

        self.box_shape = inside.shape
        self.inside = inside
        self.box_ids = np.full(inside.shape, -1, dtype=np.int64)
        N = int(inside.sum())
        self.box_ids[inside] = np.arange(N)
        self.node_count = N

        idx = np.argwhere(inside)  # row-major, deterministic
        self.lattice = idx
        coords = idx.astype(np.float64)
        coords[:, :n] -= M
        self.nodes = coords * h
        self.node_class = cls[inside]

        self.interior_ids = np.flatnonzero(self.node_class == INTERIOR)
        self.outer_ids = np.flatnonzero(self.node_class == OUTER)
        self.thin_ids = np.flatnonzero(self.node_class == THIN)
        self.corner_ids = np.flatnonzero(self.node_class == CORNER)
        # Free unknowns: interior + thin. Pinned: outer + corner (Dirichlet).
        self.free_ids = np.flatnonzero((self.node_class == INTERIOR) | (self.node_class == THIN))
        self.pinned_ids = np.flatnonzero((self.node_class == OUTER) | (self.node_class == CORNER))
        # All nodes on the thin face y = 0 (thin + corner), used for the
        # penalty line quadrature and trace extraction.
        self.face_ids = np.flatnonzero(self.nodes[:, -1] == 0.0)
        if n == 1:
            self.face_ids = self.face_ids[np.argsort(self.nodes[self.face_ids, 0], kind="stable")]

    # -- even reflection ---------------------------------------------------

    def reflect(self, ids: np.ndarray) -> np.ndarray:
        """Index realization of the even extension across y = 0.

        The mirror of a stored node (x, y) is the lattice point (x, -y),
        whose value under even symmetry is stored at (x, y) itself, so the
        map is the identity on stored indices. It is exposed (and tested)
        as an involution because consumers treat it as the reflection map.
        """
        return np.asarray(ids)

    @staticmethod
    def mirror_points(points: np.ndarray) -> np.ndarray:
        """Map evaluation points (x, y) -> (x, |y|) for even extension."""
        pts = np.array(points, dtype=np.float64, copy=True)
        pts[..., -1] = np.abs(pts[..., -1])
        return pts

    # -- interpolation -----------------------------------------------------

    def to_box(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-node values into the dense lattice box (NaN outside)."""
        box = np.full(self.box_shape, np.nan)
        box[self.inside] = values
        return box

    def fill_extension(self, box: np.ndarray) -> np.ndarray:
        """Fill off-domain lattice entries by axis-linear extrapolation.

        Cells cut by the curved boundary then have complete corner sets, so
        multilinear interpolation is defined on all of the closed half-ball.
        Extrapolated entries are second-order accurate for smooth fields.
        """
        V = np.where(self.inside, box, np.nan)
        for _ in range(3):
            nanmask = np.isnan(V)
            if not nanmask.any():
                break
            total = np.zeros_like(V)
            count = np.zeros(V.shape, dtype=np.int64)
            for ax in range(V.ndim):
                for d in (1, -1):
                    v1 = _shift(V, ax, d)
                    v2 = _shift(V, ax, 2 * d)
                    est = 2.0 * v1 - v2
                    est = np.where(np.isnan(est), v1, est)
                    ok = ~np.isnan(est)
                    total[ok] += est[ok]
                    count += ok
            have = count > 0
            fill = nanmask & have
            V = np.where(fill, np.divide(total, np.maximum(count, 1)), V)
        return V

    def interp_box(self, box: np.ndarray, points: np.ndarray, extended: bool = False) -> np.ndarray:
        """Multilinear interpolation of a dense box field at arbitrary points.

        `box` must be ghost-filled (see `fill_extension`) if any query point
        lies in a boundary-cut cell. With `extended=True` the even extension
        is evaluated: points are mirrored to y >= 0 first.
        """
        pts = np.asarray(points, dtype=np.float64)
        scalar_in = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.n + 1:
            raise ValueError(f"points must have {self.n + 1} coordinates")
        if extended:
            pts = self.mirror_points(pts)
        rad = np.sqrt((pts ** 2).sum(axis=-1))
        if (pts[:, -1] < -_TOL).any() or (rad > 1.0 + _TOL).any():
            raise OutOfDomainError("evaluation point outside the closed upper half-ball")

        dim = self.n + 1
        f = np.empty_like(pts)
        f[:, : self.n] = pts[:, : self.n] / self.h + self.M
        f[:, -1] = np.maximum(pts[:, -1], 0.0) / self.h
        base = np.empty(pts.shape, dtype=np.int64)
        frac = np.empty_like(pts)
        for ax in range(dim):
            hi = self.box_shape[ax] - 2
            b = np.clip(np.floor(f[:, ax]).astype(np.int64), 0, max(hi, 0))
            base[:, ax] = b
            frac[:, ax] = f[:, ax] - b

        out = np.zeros(pts.shape[0])
        for corner in range(1 << dim):
            w = np.ones(pts.shape[0])
            ix = []
            for ax in range(dim):
                bit = (corner >> ax) & 1
                w = w * (frac[:, ax] if bit else (1.0 - frac[:, ax]))
                ix.append(base[:, ax] + bit)
            out += w * box[tuple(ix)]
        if np.isnan(out).any():
            raise OutOfDomainError("evaluation point outside grid coverage")
        return out[0] if scalar_in else out


def build_grid(n: int, h: float) -> HalfBallGrid:
    """Build the classified half-ball grid. See `HalfBallGrid`."""
    return HalfBallGrid(n, h)


def interp(field, points, extended: bool = False):
    """Multilinear interpolation of a ScalarField (exact on per-axis affine fields)."""
    return field.grid.interp_box(field.ghost_box(), points, extended=extended)


@dataclass
class SphereQuadrature:
    """Sample points and weights over (dB_r)+, B_r+, and B_r'.

    Weights are positive and sum to the exact measures (n=1: pi*r surface,
    pi*r^2/2 solid, 2r thin). All points lie strictly inside the closed
    half-ball when |center| + r <= 1.
    """

    center: np.ndarray
    r: float
    surface_points: np.ndarray
    surface_weights: np.ndarray
    solid_points: np.ndarray
    solid_weights: np.ndarray
    thin_points: np.ndarray
    thin_weights: np.ndarray


def sphere_quadrature(grid: HalfBallGrid, center, r: float, m: int = 256) -> SphereQuadrature:
    """Quadrature over the half-sphere, half-ball, and thin ball of radius r.

    Surface samples are equi-angular (midpoint in each angle; Gauss in the
    polar cosine for n=2); solid samples use a Gauss radial rule against the
    polar volume factor so weight totals are exact; thin samples are Gauss
    points on the thin ball.

    Preconditions: B_r(center)+ inside B_1+, r >= 4h, m >= 64.
    """
    c = _as_thin_center(grid.n, center)
    if r < 4.0 * grid.h - _TOL:
        raise ValueError(f"radius r={r} under-resolved: need r >= 4h = {4 * grid.h}")
    if m < 64:
        raise ValueError(f"sample count m={m} too small: need m >= 64")
    if np.sqrt((c ** 2).sum()) + r > 1.0 + _TOL:
        raise ValueError("ball B_r(center) not contained in the unit ball")

    if grid.n == 1:
        theta = (np.arange(m) + 0.5) * (np.pi / m)
        direc = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        surf_pts = c + r * direc
        surf_w = np.full(m, np.pi * r / m)

        mr = max(4, m // 8)
        rho, wr = _gauss_on(0.0, r, mr)
        solid_pts = (c + rho[:, None, None] * direc[None, :, :]).reshape(-1, 2)
        solid_w = ((wr * rho)[:, None] * (np.pi / m) * np.ones(m)).reshape(-1)

        xt, wt = _gauss_on(c[0] - r, c[0] + r, m)
        thin_pts = np.stack([xt, np.zeros(m)], axis=-1)
        thin_w = wt
    else:
        mphi = m
        mt = max(8, m // 4)
        t, wt_t = _gauss_on(0.0, 1.0, mt)  # t = cos(polar angle from +y)
        phi = (np.arange(mphi) + 0.5) * (2.0 * np.pi / mphi)
        sinp = np.sqrt(1.0 - t ** 2)
        dx1 = sinp[:, None] * np.cos(phi)[None, :]
        dx2 = sinp[:, None] * np.sin(phi)[None, :]
        dy = np.broadcast_to(t[:, None], dx1.shape)
        direc = np.stack([dx1, dx2, dy], axis=-1).reshape(-1, 3)
        wdir = (wt_t[:, None] * (2.0 * np.pi / mphi) * np.ones(mphi)).reshape(-1)

        surf_pts = c + r * direc
        surf_w = (r ** 2) * wdir

        mr = max(4, m // 8)
        rho, wr = _gauss_on(0.0, r, mr)
        solid_pts = (c + rho[:, None, None] * direc[None, :, :]).reshape(-1, 3)
        solid_w = ((wr * rho ** 2)[:, None] * wdir[None, :]).reshape(-1)

        ang = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
        rho2, wr2 = _gauss_on(0.0, r, mr)
        tx1 = c[0] + rho2[:, None] * np.cos(ang)[None, :]
        tx2 = c[1] + rho2[:, None] * np.sin(ang)[None, :]
        thin_pts = np.stack(
            [tx1.reshape(-1), tx2.reshape(-1), np.zeros(mr * m)], axis=-1
        )
        thin_w = ((wr2 * rho2)[:, None] * (2.0 * np.pi / m) * np.ones(m)).reshape(-1)

    return SphereQuadrature(
        center=c,
        r=float(r),
        surface_points=surf_pts,
        surface_weights=surf_w,
        solid_points=solid_pts,
        solid_weights=solid_w,
        thin_points=thin_pts,
        thin_weights=thin_w,
    )


def _as_thin_center(n: int, center) -> np.ndarray:
    """Normalize a center spec (scalar x for n=1, or full point) to (n+1,)."""
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if c.size == n:
        c = np.concatenate([c, [0.0]])
    if c.size != n + 1:
        raise ValueError(f"center must have {n} or {n + 1} coordinates")
    if abs(c[-1]) > 1e-12:
        raise ValueError("center must lie on the thin face y = 0")
    c = c.copy()
    c[-1] = 0.0
    return c
