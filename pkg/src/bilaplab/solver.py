"""Minimization of the discrete energy and Euler-Lagrange diagnostics.

The energy is smooth and convex for p > 2, piecewise quadratic for p = 2;
in both cases a damped semismooth Newton method converges fast: the
generalized Hessian is the sparse SPD matrix 2 L^T diag(omega) L plus a
nonnegative face diagonal, and an Armijo backtracking line search keeps the
iteration globally descending. For 1 < p < 2 the reaction derivative is
unbounded at the sign change, so a projected gradient method with a
Barzilai-Borwein step is used instead.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import sphere_quadrature
from .problem import (
    ProblemSpec,
    ScalarField,
    dirichlet_values,
    discrete_laplacian,
    energy_array,
    gradient_array,
    operators,
    thin_reaction,
    thin_reaction_derivative,
)

ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 50


class SolverError(RuntimeError):
    """Base for solver failures; carries the last iterate for inspection."""

    def __init__(self, message: str, iterate: ScalarField | None = None):
        super().__init__(message)
        self.iterate = iterate


class LineSearchError(SolverError):
    pass


class LinearSolveError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


@dataclass
class SolveResult:
    """Converged minimizer u, its lattice Laplacian v, and solve metadata."""

    u: ScalarField
    v: ScalarField
    energy: float
    grad_sup: float
    iterations: int
    wall_time: float
    spec: ProblemSpec


def harmonic_extension(spec: ProblemSpec) -> ScalarField:
    """Solve the lattice Laplace equation with the problem's Dirichlet data.

    Used as the default initial iterate: it already matches the boundary
    values and satisfies the face reflection condition.
    """
    grid = spec.grid()
    ops = operators(grid)
    free = grid.free_ids
    A = ops.L[:, free].tocsc()
    rhs = -(ops.L[:, grid.pinned_ids] @ dirichlet_values(spec))
    wf = spla.spsolve(A, rhs)
    w = np.zeros(grid.node_count)
    w[grid.pinned_ids] = dirichlet_values(spec)
    w[free] = wf
    return ScalarField(grid, w, role="u")


def _initial_vector(spec: ProblemSpec, initial: ScalarField | None) -> np.ndarray:
    grid = spec.grid()
    if initial is None:
        return harmonic_extension(spec).values.copy()
    if initial.grid is not grid and initial.grid.node_count != grid.node_count:
        raise ValueError("initial iterate lives on an incompatible grid")
    w = initial.values.copy()
    w[grid.pinned_ids] = dirichlet_values(spec)  # project onto the datum
    return w


def _grad_tolerance(spec: ProblemSpec, J: float) -> float:
    if spec.tol_grad is not None:
        return spec.tol_grad
    return 1e-8 * (1.0 + abs(J))


def _newton(spec: ProblemSpec, w: np.ndarray, linear_solver: str):
    grid = spec.grid()
    ops = operators(grid)
    free = grid.free_ids
    Kff = getattr(grid, "_Kff", None)
    if Kff is None:
        Kff = ops.K[free][:, free].tocsr()
        grid._Kff = Kff
    thin_pos = np.searchsorted(free, grid.thin_ids)
    E = free.size

    for it in range(1, spec.max_iter + 1):
        J = energy_array(grid, w, spec)
        g = gradient_array(grid, w, spec)
        gf = g[free]
        gsup = float(np.abs(gf).max()) if E else 0.0
        if gsup <= _grad_tolerance(spec, J):
            return w, J, gsup, it - 1

        gg = np.abs(thin_reaction_derivative(w[grid.thin_ids], spec))
        dpen = np.zeros(E)
        dpen[thin_pos] = 2.0 * ops.face_w_by_node[grid.thin_ids] * gg
        H = (2.0 * Kff + sp.diags(dpen)).tocsr()

        if linear_solver == "direct":
            try:
                d = spla.splu(H.tocsc()).solve(-gf)
            except RuntimeError as exc:
                raise LinearSolveError(f"direct factorization failed: {exc}",
                                       ScalarField(grid, w)) from exc
        elif linear_solver == "pcg":
            diag = H.diagonal()
            M = spla.LinearOperator((E, E), matvec=lambda x: x / diag)
            d, info = spla.cg(H, -gf, rtol=1e-10, atol=0.0, maxiter=10 * E, M=M)
            if info != 0:
                raise LinearSolveError(f"conjugate gradient stalled (info={info})",
                                       ScalarField(grid, w))
        else:
            raise ValueError(f"unknown linear solver {linear_solver!r}")

        slope = float(gf @ d)
        if slope >= 0.0:
            raise LineSearchError("Newton direction is not a descent direction",
                                  ScalarField(grid, w))
        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            w_try = w.copy()
            w_try[free] += t * d
            if energy_array(grid, w_try, spec) <= J + ARMIJO_SLOPE * t * slope:
                break
            t *= 0.5
        else:
            raise LineSearchError("line search exhausted 50 halvings",
                                  ScalarField(grid, w))
        w = w_try

    J = energy_array(grid, w, spec)
    g = gradient_array(grid, w, spec)
    gsup = float(np.abs(g[free]).max())
    if gsup <= _grad_tolerance(spec, J):
        return w, J, gsup, spec.max_iter
    raise ConvergenceError(
        f"no convergence in {spec.max_iter} Newton steps (sup grad {gsup:.3e})",
        ScalarField(grid, w))


def _descent(spec: ProblemSpec, w: np.ndarray):
    """Projected gradient with BB steps and Armijo safeguard, for 1 < p < 2."""
    grid = spec.grid()
    free = grid.free_ids
    limit = 200 * spec.max_iter
    step = None
    w_prev = None
    g_prev = None
    for it in range(1, limit + 1):
        J = energy_array(grid, w, spec)
        g = gradient_array(grid, w, spec)
        gsup = float(np.abs(g[free]).max())
        if gsup <= _grad_tolerance(spec, J):
            return w, J, gsup, it - 1
        if step is None:
            step = 1.0 / max(float(np.abs(g).max()) / spec.h, 1.0)
        else:
            dw = w[free] - w_prev
            dg = g[free] - g_prev
            denom = float(dg @ dg)
            step = float(dw @ dg) / denom if denom > 0 else step
            step = min(max(step, 1e-12), 1e6)
        w_prev = w[free].copy()
        g_prev = g[free].copy()
        t = step
        slope = -float(g[free] @ g[free])
        for _ in range(MAX_BACKTRACKS):
            w_try = w.copy()
            w_try[free] -= t * g[free]
            if energy_array(grid, w_try, spec) <= J + ARMIJO_SLOPE * t * slope:
                break
            t *= 0.5
        else:
            raise LineSearchError("line search exhausted 50 halvings",
                                  ScalarField(grid, w))
        w = w_try
    J = energy_array(grid, w, spec)
    g = gradient_array(grid, w, spec)
    gsup = float(np.abs(g[free]).max())
    raise ConvergenceError(
        f"no convergence in {limit} descent steps (sup grad {gsup:.3e})",
        ScalarField(grid, w))


def minimize(spec: ProblemSpec, initial: ScalarField | None = None,
             linear_solver: str = "pcg") -> SolveResult:
    """Minimize the discrete energy subject to the Dirichlet datum.

    Returns a SolveResult whose `u` satisfies sup|grad J| <= tolerance on
    the free nodes and whose `v` is the lattice Laplacian of u with
    unequal-arm boundary rows. `linear_solver` is "pcg" (Jacobi-
    preconditioned conjugate gradients) or "direct" (sparse LU).
    """
    if spec.grid().M < 2:
        raise ValueError("solving requires h <= 1/2")
    t0 = time.perf_counter()
    w = _initial_vector(spec, initial)
    if spec.p >= 2.0:
        w, J, gsup, iters = _newton(spec, w, linear_solver)
    else:
        w, J, gsup, iters = _descent(spec, w)
    u = ScalarField(spec.grid(), w, role="u")
    # v carries the core-stencil Laplacian at free nodes and 0 in the pinned
    # band: the natural condition v = 0 on the sphere is the consistent rim
    # representation. Unequal-arm values at pinned nodes (via
    # discrete_laplacian(u, boundary=g)) difference the radially projected
    # Dirichlet band and carry O(1/h) noise, so they never enter v here.
    v = discrete_laplacian(u)
    return SolveResult(u=u, v=v, energy=J, grad_sup=gsup, iterations=iters,
                       wall_time=time.perf_counter() - t0, spec=spec)


# ---------------------------------------------------------------------------
# Euler-Lagrange cross-checks


@dataclass
class ELReport:
    """Sup norms of the three strong-form residuals of a solve.

    harmonic_sup  |doubled-arm lattice Laplacian of v| at interior nodes at
                  least 2h from the boundaries, restricted to a fixed
                  compact core (v should be harmonic there)
    neumann_sup   |one-sided d/dy of v - F(u)| on the thin face, away from
                  the two corner points (the reaction balance transmitted
                  across the face)
    natural_sup   |v| at free nodes within 2h of the sphere (v vanishes on
                  the sphere in the continuum; discretely O(h))

    All three decrease under h-refinement for h <= 1/8.

    Two measurement choices keep these residuals discretization-limited.
    First, the harmonicity check uses arms of length 2h: with single arms
    it would be the solver's own stationarity residual divided by 2h^2
    (identically zero for the exact discrete minimizer, so it would report
    only floor noise amplified like h^-2). Second, both the harmonicity and
    Neumann checks stay a fixed distance away from where v is singular (the
    free boundary on the face, and the two corner points, where mixed
    boundary conditions meet): consistent stencils evaluated at lattice
    distance from those points see truncation terms that grow as h shrinks,
    an O(1) boundary layer of fixed lattice width. Inside fixed margins the
    layer exits the window and every residual decays.
    """

    harmonic_sup: float
    neumann_sup: float
    natural_sup: float


def el_crosscheck(result: SolveResult, spec: ProblemSpec,
                  corner_margin: float = 0.25, core_ymin: float = 0.25,
                  core_rmax: float = 0.75) -> ELReport:
    """Strong-form Euler-Lagrange residuals of a converged solve."""
    grid = spec.grid()
    u, v = result.u.values, result.v.values
    M = grid.M

    lat = grid.lattice[grid.free_ids]
    cen = lat.astype(np.int64).copy()
    cen[:, :-1] -= M
    r2 = (cen * cen).sum(axis=1)
    pts = grid.nodes[grid.free_ids]
    rad = np.linalg.norm(pts, axis=1)
    deep = ((lat[:, -1] >= 2) & (r2 <= (M - 2) ** 2)
            & (pts[:, -1] >= core_ymin - 1e-12) & (rad <= core_rmax + 1e-12))
    sel = grid.free_ids[deep]
    if sel.size:
        acc = -2.0 * (grid.n + 1) * v[sel]
        lat_d = grid.lattice[sel]
        for ax in range(grid.n + 1):
            for d in (2, -2):
                nb = lat_d.copy()
                nb[:, ax] += d
                acc = acc + v[grid.box_ids[tuple(nb.T)]]
        harmonic_sup = float(np.abs(acc).max()) / (2.0 * grid.h) ** 2
    else:
        harmonic_sup = 0.0

    thin = grid.thin_ids
    xnorm = np.linalg.norm(grid.nodes[thin, :-1], axis=1)
    thin = thin[xnorm <= 1.0 - corner_margin + 1e-12]
    lat_t = grid.lattice[thin]
    up1 = lat_t.copy()
    up1[:, -1] = 1
    up2 = lat_t.copy()
    up2[:, -1] = 2
    i1 = grid.box_ids[tuple(up1.T)]
    i2 = grid.box_ids[tuple(up2.T)]
    dyv = (-3.0 * v[thin] + 4.0 * v[i1] - v[i2]) / (2.0 * grid.h)
    neumann_sup = float(np.abs(dyv - thin_reaction(u[thin], spec)).max()) if thin.size else 0.0

    rim = (lat[:, -1] >= 1) & (r2 > (M - 2) ** 2)
    natural_sup = float(np.abs((v[grid.free_ids])[rim]).max()) if rim.any() else 0.0

    return ELReport(harmonic_sup=harmonic_sup, neumann_sup=neumann_sup,
                    natural_sup=natural_sup)


def _poly_trials(n: int, trials: int, seed: int):
    """Random polynomial coefficient tables for the weak-form test fields."""
    rng = np.random.default_rng(seed)
    monos = []
    for total in range(4):
        if n == 1:
            monos += [(a, total - a) for a in range(total + 1)]
        else:
            monos += [(a, b, total - a - b)
                      for a in range(total + 1) for b in range(total + 1 - a)]
    return [list(zip(monos, rng.standard_normal(len(monos)))) for _ in range(trials)]


def _trial_field(coeffs, n):
    """phi(z) = (1 - |z|^2)^2 * P(x, y^2): flat on the sphere, even in y."""

    def phi(pts):
        pts = np.atleast_2d(pts)
        x = pts[:, :n]
        y2 = pts[:, -1] ** 2
        P = np.zeros(pts.shape[0])
        for expo, c in coeffs:
            term = np.full(pts.shape[0], c)
            for ax in range(n):
                term = term * x[:, ax] ** expo[ax]
            term = term * y2 ** expo[-1]
            P += term
        cut = 1.0 - (pts ** 2).sum(axis=1)
        return cut * cut * P

    return phi


def _fd_laplacian(f, pts, delta=1e-4):
    dim = pts.shape[1]
    out = -2.0 * dim * f(pts)
    for ax in range(dim):
        e = np.zeros(dim)
        e[ax] = delta
        out += f(pts + e) + f(pts - e)
    return out / delta ** 2


def weak_residual(result: SolveResult, spec: ProblemSpec, trials: int = 12,
                  seed: int = 0, m: int = 512) -> float:
    """Max normalized weak-form defect of a solve over random test fields.

    For test fields phi vanishing to second order on the sphere and even in
    y, a minimizer satisfies  int Lap(u) Lap(phi) = int_face F(u) phi. Both
    sides are evaluated with quadrature independent of the solver's own
    discrete algebra (v and u enter through interpolation), so the defect
    measures consistency, not the solver's optimality; it decays like O(h).
    """
    grid = spec.grid()
    quad = sphere_quadrature(grid, np.zeros(grid.n), 1.0, m=m)
    v_solid = result.v(quad.solid_points)
    u_thin = result.u(quad.thin_points)
    Fu = thin_reaction(u_thin, spec)
    worst = 0.0
    for coeffs in _poly_trials(grid.n, trials, seed):
        phi = _trial_field(coeffs, grid.n)
        lap = _fd_laplacian(phi, quad.solid_points)
        lhs = float(quad.solid_weights @ (v_solid * lap))
        rhs = float(quad.thin_weights @ (Fu * phi(quad.thin_points)))
        norm = float(np.sqrt(quad.solid_weights @ lap ** 2
                             + quad.thin_weights @ phi(quad.thin_points) ** 2))
        if norm == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / norm)
    return worst
