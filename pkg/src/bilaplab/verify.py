"""Acceptance suite: twelve numbered checks over solver, diagnostics, and extension.

Each check returns a CheckResult with a human-readable target and the measured
value; `run_suite` prints one line per check and exits nonzero when any check
fails. Level "quick" runs reduced resolutions (a couple of minutes); "full"
includes the h = 1/64 refinement studies and the fine-grid oracle comparisons.

Corpus solves are memoized per process so the suite and the test harness share
them. The three corpus configurations exercise p = 2 against p = 3 and
symmetric against asymmetric phase weights.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .diagnostics import (
    AnalyticField,
    compute_profile,
    default_radii,
    estimate_mu,
    growth_fit,
    mean_value_violation,
    minimal_almgren_constant,
    minimal_monneau_constant,
    poincare_check,
    rellich_residual,
    trace_check,
)
from .extension import FourierTrace, dtn_compare
from .freeboundary import analyze_point, blowup_fit, extract_gamma, nondegeneracy_check
from .grid import build_grid
from .oracle import brute_minimize
from .problem import ProblemSpec, energy_array, gradient_array
from .solver import minimize, weak_residual


@dataclass
class CheckResult:
    name: str
    target: str
    measured: str
    passed: bool


CORPUS = {
    "sym-p2": dict(p=2.0, lambda_plus=1.0, lambda_minus=1.0, g="harmonic:deg=1"),
    "asym-p2": dict(p=2.0, lambda_plus=2.0, lambda_minus=0.5, g="harmonic:coeffs=1;0.2"),
    "sym-p3": dict(p=3.0, lambda_plus=1.0, lambda_minus=1.0, g="harmonic:deg=1"),
}


@lru_cache(maxsize=None)
def corpus_spec(tag: str, h_inv: int) -> ProblemSpec:
    return ProblemSpec(n=1, h=1.0 / h_inv, **CORPUS[tag])


@lru_cache(maxsize=None)
def corpus_solve(tag: str, h_inv: int):
    return minimize(corpus_spec(tag, h_inv))


@lru_cache(maxsize=None)
def corpus_oracle(tag: str, h_inv: int):
    # the asymmetric config at h=1/16 is the stiffest case for the fixed-step
    # reference iteration and needs a deeper budget to reach its tolerance
    budget = 6_000_000 if (tag == "asym-p2" and h_inv == 16) else 1_000_000
    return brute_minimize(corpus_spec(tag, h_inv), budget=budget)


@lru_cache(maxsize=None)
def corpus_points(tag: str, h_inv: int):
    """Free-boundary points of a corpus solve, fully analyzed, plus profiles."""
    spec = corpus_spec(tag, h_inv)
    res = corpus_solve(tag, h_inv)
    pts = extract_gamma(res.u, spec)
    rows = []
    for pt in pts:
        analyze_point(pt, res.u, res.v, spec)
        radii = default_radii(spec.grid(), [pt.x])
        prof = compute_profile(res.u, res.v, [pt.x], radii, spec)
        octave = radii[radii <= 2.0 * radii[0] + 1e-12]
        rows.append({
            "point": pt,
            "profile": prof,
            "almgren_c": minimal_almgren_constant(prof.radii, prof.N),
            "growth_slope": growth_fit(res.u, [pt.x], octave),
            "v_at_point": float(res.v([[pt.x, 0.0]])[0]),
        })
    return tuple(rows)


def _fine_sizing():
    """Sizing grid and spec for analytic-field quadrature (no solver grid)."""
    grid = build_grid(1, 1.0 / 256)
    spec = ProblemSpec(n=1, h=1.0 / 256, p=2.0, lambda_plus=1.0,
                       lambda_minus=1.0, g="harmonic:deg=1")
    return grid, spec


# ---------------------------------------------------------------------------
# 1. oracle equivalence


def check_oracle_equivalence(level: str = "quick") -> CheckResult:
    h_list = (8,) if level == "quick" else (8, 16)
    worst_e, worst_f = 0.0, 0.0
    for tag in CORPUS:
        for h_inv in h_list:
            main = corpus_solve(tag, h_inv)
            ref = corpus_oracle(tag, h_inv)
            worst_e = max(worst_e, abs(main.energy - ref.energy) / abs(ref.energy))
            worst_f = max(worst_f, float(np.abs(main.u.values - ref.u.values).max()))
    ok = worst_e <= 1e-8 and worst_f <= 1e-6
    return CheckResult(
        "oracle equivalence",
        "energy rel <= 1e-8, field sup <= 1e-6",
        f"energy rel {worst_e:.2e}, field sup {worst_f:.2e} (h: {h_list})",
        ok)


# ---------------------------------------------------------------------------
# 2. gradient consistency


def check_gradient_consistency(level: str = "quick") -> CheckResult:
    spec = corpus_spec("asym-p2", 8)
    grid = spec.grid()
    free = np.zeros(grid.node_count, dtype=bool)
    free[grid.free_ids] = True
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(5):
        w = np.zeros(grid.node_count)
        w[free] = rng.normal(scale=0.5, size=int(free.sum()))
        g = gradient_array(grid, w, spec)
        for i in rng.choice(np.flatnonzero(free), size=20, replace=False):
            d = 1e-6 * max(1.0, abs(w[i]))
            wp = w.copy(); wp[i] += d
            wm = w.copy(); wm[i] -= d
            fd = (energy_array(grid, wp, spec) - energy_array(grid, wm, spec)) / (2 * d)
            worst = max(worst, abs(g[i] - fd) / max(abs(fd), 1e-12))
    return CheckResult(
        "gradient consistency",
        "rel err <= 1e-6 (5 fields x 20 coords)",
        f"max rel err {worst:.2e}",
        worst <= 1e-6)


# ---------------------------------------------------------------------------
# 3. frequency of analytic harmonic pairs


def check_analytic_frequency(level: str = "quick") -> CheckResult:
    grid, spec = _fine_sizing()
    radii = np.geomspace(0.05, 0.9, 17)
    worst = 0.0
    for mu in (1, 2, 3):
        def f(pts, mu=mu):
            pts = np.atleast_2d(pts)
            z = pts[..., 0] + 1j * np.abs(pts[..., 1])
            return np.real(z ** mu)
        prof = compute_profile(f, f, [0.0], radii, spec, m=512, grid=grid)
        worst = max(worst, float(np.abs(prof.N0 - mu).max()))
    return CheckResult(
        "frequency of harmonic pairs",
        "N0 = mu +- 1e-3 at every radius, mu in {1,2,3}",
        f"max |N0 - mu| = {worst:.2e}",
        worst <= 1e-3)


# ---------------------------------------------------------------------------
# 4. Almgren near-monotonicity on solves


def check_almgren_monotonicity(level: str = "quick") -> CheckResult:
    h_list = (32,) if level == "quick" else (32, 64)
    worst_c, ok, notes = 0.0, True, []
    per_h: dict[str, dict[int, float]] = {}
    for tag in CORPUS:
        per_h[tag] = {}
        for h_inv in h_list:
            cs = [row["almgren_c"] for row in corpus_points(tag, h_inv)]
            if not cs or any(np.isnan(c) for c in cs):
                ok = False
                notes.append(f"{tag}@1/{h_inv}: no admissible C")
                continue
            c = max(cs)
            per_h[tag][h_inv] = c
            worst_c = max(worst_c, c)
            ok &= c <= 50.0
    if level == "full":
        for tag, by_h in per_h.items():
            if 32 in by_h and 64 in by_h:
                c32, c64 = by_h[32], by_h[64]
                # 0.01 is one step of the constant scan, the measurement floor
                stable = abs(c64 - c32) <= 0.2 * max(c32, c64) + 0.01
                ok &= stable
                notes.append(f"{tag}: C(1/32)={c32:.2f} C(1/64)={c64:.2f}"
                             + ("" if stable else " UNSTABLE"))
    return CheckResult(
        "Almgren near-monotonicity",
        "fitted C in [0,50], slack 1e-3; stable 1/32->1/64 within 20%",
        f"max C = {worst_c:.2f}; " + ("; ".join(notes) if notes else f"h: {h_list}"),
        ok)


# ---------------------------------------------------------------------------
# 5. growth estimate


def check_growth_estimate(level: str = "quick") -> CheckResult:
    h_list = (32,) if level == "quick" else (32, 64)
    worst_margin, ok, n_pts = np.inf, True, 0
    for tag in CORPUS:
        for h_inv in h_list:
            for row in corpus_points(tag, h_inv):
                pt, prof = row["point"], row["profile"]
                try:
                    mu_hat, _ = estimate_mu(prof)
                except ValueError:
                    continue
                n_pts += 1
                margin = row["growth_slope"] - (mu_hat - 0.1)
                worst_margin = min(worst_margin, margin)
                ok &= margin >= 0.0
    return CheckResult(
        "growth estimate",
        "log-log slope of sup|u| >= mu_hat - 0.1 at each FB point",
        f"min slope margin {worst_margin:+.3f} over {n_pts} points",
        ok and n_pts > 0)


# ---------------------------------------------------------------------------
# 6. mean-value inequality for the four half fields


def check_mean_value(level: str = "quick") -> CheckResult:
    h_inv = 16 if level == "quick" else 32
    h = 1.0 / h_inv
    slack = 1e-6 + 10.0 * h * h
    worst = {"u+": 0.0, "u-": 0.0, "v+": 0.0, "v-": 0.0}
    for tag in CORPUS:
        res = corpus_solve(tag, h_inv)
        parts = {
            "u+": res.u.with_values(np.maximum(res.u.values, 0.0)),
            "u-": res.u.with_values(np.maximum(-res.u.values, 0.0)),
            "v+": res.v.with_values(np.maximum(res.v.values, 0.0)),
            "v-": res.v.with_values(np.maximum(-res.v.values, 0.0)),
        }
        for name, fld in parts.items():
            for rho in (4 * h, 8 * h):
                worst[name] = max(worst[name], mean_value_violation(fld, rho))
    ok = all(v <= slack for v in worst.values())
    measured = " ".join(f"{k}:{v:.1e}" for k, v in worst.items())
    return CheckResult(
        "mean-value inequality",
        f"violation <= {slack:.1e} for u+,u-,v+,v- at rho in {{4h,8h}}, h=1/{h_inv}",
        measured,
        ok)


# ---------------------------------------------------------------------------
# 7. trace of v at extracted free-boundary points


def check_v_vanishes(level: str = "quick") -> CheckResult:
    h_list = (16, 32) if level == "quick" else (16, 32, 64)
    ok, notes = True, []
    for tag in CORPUS:
        cs = []
        for h_inv in h_list:
            rows = corpus_points(tag, h_inv)
            vmax = max((abs(r["v_at_point"]) for r in rows), default=0.0)
            cs.append(vmax * h_inv)
        # C stable across h: each refinement may not grow the constant by more
        # than 25% beyond an absolute floor for exactly-vanishing cases
        stable = all(cs[i + 1] <= 1.25 * cs[i] + 1e-8 for i in range(len(cs) - 1))
        ok &= stable
        notes.append(f"{tag}: C_h = " + "/".join(f"{c:.2f}" for c in cs)
                     + ("" if stable else " GROWS"))
    return CheckResult(
        "v vanishes on the free boundary",
        "max |v(x*)| <= C h with C stable across h",
        "; ".join(notes),
        ok)


# ---------------------------------------------------------------------------
# 8. weak residual refinement


def check_weak_residual_refinement(level: str = "quick") -> CheckResult:
    ok, notes = True, []
    for tag in CORPUS:
        res = []
        for h_inv in (8, 16, 32):
            r = weak_residual(corpus_solve(tag, h_inv), corpus_spec(tag, h_inv), seed=0)
            res.append(r)
        orders = [float(np.log2(res[i] / res[i + 1])) for i in range(len(res) - 1)]
        good = all(o >= 1.0 for o in orders)
        ok &= good
        notes.append(f"{tag}: orders " + "/".join(f"{o:.2f}" for o in orders))
    return CheckResult(
        "weak residual refinement",
        "per-halving order >= 1.0 across h in {1/8,1/16,1/32}",
        "; ".join(notes),
        ok)


# ---------------------------------------------------------------------------
# 9. Monneau near-monotonicity and nondegeneracy


def _synthetic_pair():
    def f(pts):
        pts = np.atleast_2d(pts)
        z = pts[..., 0] + 1j * np.abs(pts[..., 1])
        return np.real(z ** 2) + 1e-3 * np.real(z ** 3)
    return f


def check_monneau_nondegeneracy(level: str = "quick") -> CheckResult:
    h_list = (32,) if level == "quick" else (32, 64)
    seeded = []
    for tag in CORPUS:
        for h_inv in h_list:
            for row in corpus_points(tag, h_inv):
                pt = row["point"]
                if (pt.classification == "SINGULAR" and pt.mu_int is not None
                        and pt.mu_int >= 2):
                    seeded.append((tag, h_inv, row))
    notes = []
    ok = True
    if seeded:
        for tag, h_inv, row in seeded:
            pt, spec = row["point"], corpus_spec(tag, h_inv)
            res = corpus_solve(tag, h_inv)
            radii = default_radii(spec.grid(), [pt.x])
            prof = compute_profile(res.u, res.v, [pt.x], radii, spec,
                                   mu=float(pt.mu_int), p_mu=pt.p_mu, q_mu=pt.q_mu)
            c = minimal_monneau_constant(prof.radii, prof.M)
            nd = nondegeneracy_check(res.u, res.v, [pt.x], radii, pt.mu_int, spec=spec)
            good = np.isfinite(c) and c <= 50.0 and nd > 0.0
            ok &= good
            notes.append(f"{tag}@1/{h_inv} x*={pt.x:+.3f}: C={c:.2f} c_min={nd:.2e}")
    else:
        # no singular candidate arises in the corpus; exercise the synthetic pair
        grid, spec = _fine_sizing()
        f = _synthetic_pair()
        radii = np.geomspace(0.05, 0.5, 13)  # one decade of radii
        fit = blowup_fit(f, f, [0.0], radii, mu=2, grid=grid, spec=spec)
        prof = compute_profile(f, f, [0.0], radii, spec, mu=2.0,
                               p_mu=fit.p_mu, q_mu=fit.q_mu, grid=grid)
        c = minimal_monneau_constant(prof.radii, prof.M)
        cvals = np.array([nondegeneracy_check(f, f, [0.0], [r], 2, grid=grid, spec=spec)
                          for r in radii])
        slope = float(np.polyfit(np.log(radii), np.log(fit.residuals), 1)[0])
        ok = (np.isfinite(c) and c <= 50.0 and cvals.min() > 0.0
              and cvals.max() / cvals.min() <= 2.0 and abs(slope - 1.0) <= 0.1)
        notes.append(f"synthetic: C={c:.2f} c_min={cvals.min():.4f} "
                     f"spread={cvals.max()/cvals.min():.4f} residual slope={slope:.4f}")
    return CheckResult(
        "Monneau monotonicity + nondegeneracy",
        "C in [0,50] slack 1e-3; c_min > 0 stable over a decade; residual ~ r",
        "; ".join(notes),
        ok)


# ---------------------------------------------------------------------------
# 10. integral identity checks


def identity_corpus() -> dict[str, AnalyticField]:
    """Five C^2 fields with two off-center |x - a|^3 kinks and closed-form
    derivatives. The kink cross terms keep the quadrature error measurable
    (the identity superconverges on smooth fields), so the halving clause of
    the check is a real statement about the rules rather than noise."""
    one = (lambda y: np.ones_like(y), lambda y: np.zeros_like(y),
           lambda y: np.zeros_like(y))
    cosy = (np.cos, lambda y: -np.sin(y), lambda y: -np.cos(y))
    coshy = (np.cosh, np.sinh, np.cosh)
    ysq = (lambda y: 1 + y ** 2, lambda y: 2 * y, lambda y: 2 * np.ones_like(y))

    def cusp_pair(a, ga, b, gb):
        (g1, g1p, g1pp), (g2, g2p, g2pp) = ga, gb

        def val(p):
            return (np.abs(p[..., 0] - a) ** 3 * g1(p[..., 1])
                    + np.abs(p[..., 0] - b) ** 3 * g2(p[..., 1]))

        def grad(p):
            sa, sb = p[..., 0] - a, p[..., 0] - b
            out = np.empty_like(p)
            out[..., 0] = (3 * sa * np.abs(sa) * g1(p[..., 1])
                           + 3 * sb * np.abs(sb) * g2(p[..., 1]))
            out[..., 1] = (np.abs(sa) ** 3 * g1p(p[..., 1])
                           + np.abs(sb) ** 3 * g2p(p[..., 1]))
            return out

        def lap(p):
            sa, sb = np.abs(p[..., 0] - a), np.abs(p[..., 0] - b)
            return (6 * sa * g1(p[..., 1]) + sa ** 3 * g1pp(p[..., 1])
                    + 6 * sb * g2(p[..., 1]) + sb ** 3 * g2pp(p[..., 1]))

        return AnalyticField(val, grad, lap)

    return {
        "two-kink constant": cusp_pair(0.2, one, -0.4, one),
        "kink-cos + kink": cusp_pair(-0.37, cosy, 0.11, one),
        "kink-cosh + kink": cusp_pair(0.13, coshy, -0.31, one),
        "kink-parabolic + kink": cusp_pair(-0.29, ysq, 0.17, one),
        "kink-cos + kink-cosh": cusp_pair(0.39, cosy, -0.21, coshy),
    }


def check_integral_identities(level: str = "quick") -> CheckResult:
    grid, spec = _fine_sizing()
    ok = True
    worst_res, worst_ratio = 0.0, np.inf
    pt_ok = True
    for fld in identity_corpus().values():
        r512 = rellich_residual(fld, [0.0], 0.9, m=512, grid=grid, spec=spec)
        r1024 = rellich_residual(fld, [0.0], 0.9, m=1024, grid=grid, spec=spec)
        worst_res = max(worst_res, r512)
        worst_ratio = min(worst_ratio, r512 / max(r1024, 1e-300))
        ok &= r512 <= 1e-3 and r1024 <= 0.5 * r512 + 1e-13
        for r in (0.5, 0.9):
            pl, pr = poincare_check(fld, r, grid=grid, spec=spec)
            tl, tr = trace_check(fld, r, grid=grid, spec=spec)
            pt_ok &= (pl <= pr) and (tl <= tr)
    ok &= pt_ok
    return CheckResult(
        "integral identities",
        "Rellich <= 1e-3 at m=512, halves at m=1024; Poincare/trace hold",
        f"max res {worst_res:.2e}, min halving ratio {worst_ratio:.1f}, "
        f"Poincare/trace {'ok' if pt_ok else 'VIOLATED'}",
        ok)


# ---------------------------------------------------------------------------
# 11. extension identity


def check_extension_dtn(level: str = "quick") -> CheckResult:
    report = dtn_compare(FourierTrace(np.array([0.0, 1.0, 1.0, 1.0])), Y=12.0)
    ratios = [report.ratios[k] for k in (1, 2, 3)]
    within = max(abs(r - 2.0) / 2.0 for r in ratios)
    ok = within <= 0.05 and report.spread <= 0.02
    return CheckResult(
        "extension DtN identity",
        "ratio 2.00 +- 5% for k in {1,2,3} at Y=12, spread <= 2%",
        f"ratios {', '.join(f'{r:.4f}' for r in ratios)}, spread {report.spread:.4f}",
        ok)


# ---------------------------------------------------------------------------
# 12. blow-up fitting


def check_blowup_fitting(level: str = "quick") -> CheckResult:
    grid, spec = _fine_sizing()
    f = _synthetic_pair()
    radii = np.geomspace(0.05, 0.5, 13)
    fit = blowup_fit(f, f, [0.0], radii, mu=2, grid=grid, spec=spec)
    coeff = float(fit.p_mu(np.array([[1.0, 0.0]]))[0])
    slope = float(np.polyfit(np.log(radii), np.log(fit.residuals), 1)[0])
    synth_ok = abs(coeff - 1.0) <= 1e-3 and abs(slope - 1.0) <= 0.1

    h_list = (32,) if level == "quick" else (32, 64)
    agree, outside, solver_ok = 0, 0, True
    for tag in CORPUS:
        for h_inv in h_list:
            for row in corpus_points(tag, h_inv):
                pt = row["point"]
                best = pt.metadata.get("best_fit_degree")
                if pt.mu_int is not None and pt.mu_int >= 1:
                    solver_ok &= (best == pt.mu_int)
                    agree += 1
                else:
                    outside += 1  # frequency gate outside the positive-integer domain
    ok = synth_ok and solver_ok and agree > 0
    return CheckResult(
        "blow-up fitting",
        "synthetic coeff +- 1e-3, residual ~ r; gate agrees with best degree",
        f"coeff err {abs(coeff - 1.0):.1e}, slope {slope:.3f}; "
        f"{agree} gated points agree, {outside} outside integer domain",
        ok)


# ---------------------------------------------------------------------------
# suite driver


ALL_CHECKS = [
    check_oracle_equivalence,
    check_gradient_consistency,
    check_analytic_frequency,
    check_almgren_monotonicity,
    check_growth_estimate,
    check_mean_value,
    check_v_vanishes,
    check_weak_residual_refinement,
    check_monneau_nondegeneracy,
    check_integral_identities,
    check_extension_dtn,
    check_blowup_fitting,
]


def run_suite(level: str = "quick", stream=None) -> int:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}, expected 'quick' or 'full'")
    stream = stream or sys.stdout
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn(level))
        except Exception as exc:
            name = fn.__name__.removeprefix("check_").replace("_", " ")
            results.append(CheckResult(name, "-", f"error: {exc}", False))
    name_w = max(len(r.name) for r in results)
    target_w = max(len(r.target) for r in results)
    print(f"acceptance suite, level={level}", file=stream)
    for i, r in enumerate(results, start=1):
        status = "pass" if r.passed else "FAIL"
        print(f"{i:2d}. {r.name:<{name_w}s}  {r.target:<{target_w}s}  "
              f"{r.measured}  [{status}]", file=stream)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failing: {', '.join(failed)}" if failed else ""), file=stream)
    return 0 if not failed else 1
