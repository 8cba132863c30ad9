"""Periodic-strip cross-check of the face reaction as a fractional operator.

A biharmonic extension of a cosine trace on the strip [0, 2pi) x [0, Y] with
clamped vertical derivative at the bottom and decay at the top turns the
half-power Laplacian of the trace into a boundary measurement: for each
Fourier mode, d/dy of the Laplacian of the extension at y = 0 is
proportional to |k|^3 times the mode coefficient. The proportionality
constant is mode-independent; we measure it per mode and calibrate it
empirically (closed form: the decaying biharmonic mode is
(1 + |k| y) a_k e^{-|k| y}, whose Laplacian is -2 k^2 a_k e^{-|k| y}, giving
d/dy Lap at 0 equal to 2 |k|^3 a_k, hence ratio 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class FourierTrace:
    """Real cosine-series trace: coeffs[k] multiplies cos(k x), k = 0..K."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d array")
        if not np.isfinite(self.coeffs).all():
            raise ValueError("coefficients must be finite")

    @property
    def max_mode(self) -> int:
        return self.coeffs.size - 1

    def active_modes(self, tol: float = 0.0) -> np.ndarray:
        k = np.arange(self.coeffs.size)
        return k[(np.abs(self.coeffs) > tol) & (k > 0)]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = np.arange(self.coeffs.size)
        return np.cos(np.multiply.outer(x, k)) @ self.coeffs


def spectral_frac32(trace: FourierTrace) -> FourierTrace:
    """Three-halves power of the (negative) Laplacian as a Fourier multiplier:
    each cosine coefficient is multiplied by |k|^3 (the constant mode dies)."""
    k = np.arange(trace.coeffs.size, dtype=np.float64)
    return FourierTrace(trace.coeffs * k ** 3)


@dataclass
class StripField:
    """Biharmonic extension on the periodic strip [0, 2pi) x [0, Y].

    values[i, j] = u(x[i], y[j]); mode_profiles[k] is the vertical profile
    f_k with u(x, y) = sum_k f_k(y) cos(k x).
    """

    trace: FourierTrace
    Y: float
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    mode_profiles: dict[int, np.ndarray]

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])


def _mode_profile(k: int, a_k: float, y: np.ndarray) -> np.ndarray:
    """Fourth-order two-point solve for the vertical profile of one mode.

    f'''' - 2 k^2 f'' + k^4 f = 0 on (0, Y), f(0) = a_k, f'(0) = 0 (clamped
    even reflection), f(Y) = f'(Y) = 0 (decay surrogate). Discretized with
    second-order central differences; the derivative conditions eliminate
    ghost values by symmetry at both ends. Banded solve over interior nodes.
    """
    J = y.size - 1
    d = float(y[1] - y[0])
    unknown = J - 1  # f_1 .. f_{J-1}
    if unknown < 3:
        raise ValueError("strip resolution too coarse for the vertical solve")
    ab = np.zeros((5, unknown))
    rhs = np.zeros(unknown)
    k2, k4, d2, d4 = float(k * k), float(k ** 4), d * d, d ** 4

    def add(row: int, col: int, val: float) -> None:
        if 0 <= col < unknown:
            ab[2 + row - col, col] += val
        else:
            # known values: f_0 = a_k on the left, f_J = 0 on the right
            if col == -1:
                rhs[row] -= val * a_k
            elif col == unknown:
                pass  # f_J = 0

    for i in range(unknown):
        j = i + 1  # absolute y index
        # ghost handling: f_{-1} = f_1 (f'(0)=0), f_{J+1} = f_{J-1} (f'(Y)=0)
        stencil = {j - 2: 1.0, j - 1: -4.0, j: 6.0, j + 1: -4.0, j + 2: 1.0}
        if j - 2 == -1:
            stencil[j] += stencil.pop(j - 2)  # f_{-1} -> f_1 = f_{j}
        if j + 2 == J + 1:
            stencil[j] += stencil.pop(j + 2)  # f_{J+1} -> f_{J-1} = f_j
        for col, cv in stencil.items():
            add(i, col - 1, cv / d4)
        lap = {j - 1: 1.0, j: -2.0, j + 1: 1.0}
        for col, cv in lap.items():
            add(i, col - 1, -2.0 * k2 * cv / d2)
        add(i, j - 1, k4)

    sol = scipy.linalg.solve_banded((2, 2), ab, rhs)
    f = np.empty(J + 1)
    f[0] = a_k
    f[1:J] = sol
    f[J] = 0.0
    return f


def strip_extension(trace: FourierTrace, Y: float = 12.0, resolution: int = 256,
                    ) -> StripField:
    """Assemble the clamped biharmonic extension of a cosine trace.

    `resolution` is the number of x samples on [0, 2pi); the vertical step
    uses the same spacing. Every active mode k must keep at least 8 samples
    per wavelength (resolution / k >= 8), else the mode is under-resolved.
    """
    if Y < 8.0:
        raise ValueError(f"strip height Y={Y} too small: need Y >= 8 for decay")
    active = trace.active_modes()
    for k in active:
        if resolution / k < 8:
            raise ValueError(
                f"mode k={k} under-resolved: {resolution / k:.1f} "
                "points per wavelength, need >= 8")
    dx = 2.0 * np.pi / resolution
    x = np.arange(resolution) * dx
    J = int(np.ceil(Y / dx))
    yg = np.linspace(0.0, Y, J + 1)

    profiles: dict[int, np.ndarray] = {}
    values = np.zeros((resolution, J + 1))
    if trace.coeffs[0] != 0.0:
        profiles[0] = _constant_profile(trace.coeffs[0], yg)
        values += profiles[0][None, :]
    for k in active:
        profiles[int(k)] = _mode_profile(int(k), float(trace.coeffs[k]), yg)
        values += np.cos(k * x)[:, None] * profiles[int(k)][None, :]
    return StripField(trace=trace, Y=float(Y), x=x, y=yg, values=values,
                      mode_profiles=profiles)


def _constant_profile(a0: float, y: np.ndarray) -> np.ndarray:
    """k = 0: the clamped decaying profile degenerates; keep the constant.

    A constant is biharmonic with zero vertical derivative; the decay
    condition cannot be met by a constant, so the k=0 block is carried
    through unchanged (it never enters the fractional multiplier).
    """
    return np.full(y.size, a0)


def strip_biharmonic_residual(strip: StripField) -> float:
    """Max per-mode defect of the fourth-order interior collocation stencil.

    Evaluates f'''' - 2 k^2 f'' + k^4 f with the same central stencils used
    by the solve, over interior collocation nodes; machine-level for the
    banded solution (this is the honest consistency statement: the assembled
    field solves the discrete biharmonic strip problem exactly).
    """
    worst = 0.0
    d = strip.dy
    for k, f in strip.mode_profiles.items():
        if k == 0:
            continue
        J = f.size - 1
        g = np.empty(J + 3)
        g[1:-1] = f
        g[0] = f[1]      # ghost below the face
        g[-1] = f[J - 1]  # ghost above the lid
        i = np.arange(1, J)  # interior absolute indices, shifted +1 in g
        f4 = (g[i - 1] - 4 * g[i] + 6 * g[i + 1] - 4 * g[i + 2] + g[i + 3]) / d ** 4
        f2 = (g[i] - 2 * g[i + 1] + g[i + 2]) / d ** 2
        res = f4 - 2.0 * k * k * f2 + float(k) ** 4 * f[1:J]
        scale = max(1.0, float(np.abs(f).max())) / d ** 4
        worst = max(worst, float(np.abs(res).max()) / scale)
    return worst


@dataclass
class DtnReport:
    """Per-mode Dirichlet-to-Neumann measurement against |k|^3 a_k."""

    ratios: dict[int, float]
    calibrated_inverse_constant: float  # mean ratio, the empirical 1/C_n

    @property
    def spread(self) -> float:
        vals = np.array(list(self.ratios.values()))
        return float(vals.max() - vals.min()) / float(np.abs(vals).max())


def dtn_compare(trace: FourierTrace, Y: float = 12.0, resolution: int = 256,
                ) -> DtnReport:
    """Measure d/dy Lap(extension) at the face against the |k|^3 multiplier.

    The vertical Laplacian derivative is taken from the assembled field:
    Lap u is formed with the same second-order stencils as the solve
    (periodic in x), its one-sided vertical derivative is evaluated on the
    face row, and the result is projected onto cos(k x) by the exact
    discrete cosine projection. ratio_k = projection_k / (|k|^3 a_k).
    """
    active = trace.active_modes()
    if active.size == 0:
        raise ValueError("trace has no active modes k >= 1")
    strip = strip_extension(trace, Y=Y, resolution=resolution)
    d = strip.dy
    vals = strip.values
    lap = np.empty_like(vals)
    # x part, periodic
    lap[:] = (np.roll(vals, 1, axis=0) + np.roll(vals, -1, axis=0) - 2 * vals) / d ** 2
    # y part: interior central; face row uses the even reflection ghost
    lap[:, 1:-1] += (vals[:, 2:] + vals[:, :-2] - 2 * vals[:, 1:-1]) / d ** 2
    lap[:, 0] += (2 * vals[:, 1] - 2 * vals[:, 0]) / d ** 2
    lap[:, -1] += (vals[:, -2] - vals[:, -1]) / d ** 2  # lid row, unused below

    dlap = (-3.0 * lap[:, 0] + 4.0 * lap[:, 1] - lap[:, 2]) / (2.0 * d)

    mx = strip.x.size
    ratios = {}
    for k in active:
        proj = 2.0 / mx * float(dlap @ np.cos(k * strip.x))
        ratios[int(k)] = proj / (float(k) ** 3 * float(trace.coeffs[k]))
    mean = float(np.mean(list(ratios.values())))
    return DtnReport(ratios=ratios, calibrated_inverse_constant=mean)
