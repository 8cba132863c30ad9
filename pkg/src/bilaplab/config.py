"""Run configuration parsing and experiment orchestration with flat-file artifacts.

A run configuration is plain text, one `key = value` per line, `#` comments.
Unknown keys are rejected by name; every constraint violation names its key.
`run` executes solve -> per-center diagnostics -> free-boundary analysis and
writes four artifacts into the run directory:

    summary.json            headline numbers (energies, iterations, per-point
                            frequency/classification/dimension, fitted
                            monotonicity constants)
    fields.csv              x, y, u, v at every grid node
    profile_<center>.csv    r, H, D, D0, B, N, N0, phi, W, M
    gamma.csv               x, side, class, mu_hat, mu_int, d, fit_residual

Every file carries a header row and a comment line with the effective config
hash; outputs are byte-deterministic for a fixed config and seed (no wall
times or machine identifiers in any artifact). The environment variable
BILAPLAB_OUTPUT_ROOT overrides where run directories are created.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .diagnostics import (
    compute_profile,
    default_radii,
    estimate_mu,
    minimal_almgren_constant,
    minimal_monneau_constant,
)
from .freeboundary import analyze_point, extract_gamma
from .problem import ProblemSpec
from .solver import el_crosscheck, minimize, weak_residual

ENV_OUTPUT_ROOT = "BILAPLAB_OUTPUT_ROOT"

_STAGES = ("solve", "profile", "gamma")


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending key."""


@dataclass
class RunConfig:
    """Validated run description: problem fields plus orchestration knobs."""

    spec: ProblemSpec
    centers: list[float] | None = None  # None = auto (free-boundary points, else 0)
    radii: list[float] | None = None    # None = auto ladder
    output: str | None = None           # None = runs/<hash> under the output root
    seed: int = 0
    m: int = 512
    stages: tuple[str, ...] = _STAGES

    def echo(self) -> str:
        """Canonical effective-config text (the hash input)."""
        s = self.spec
        lines = [
            f"n = {s.n}",
            f"p = {s.p!r}",
            f"lambda_plus = {s.lambda_plus!r}",
            f"lambda_minus = {s.lambda_minus!r}",
            f"h = {s.h!r}",
            f"g = {s.g}",
            f"tol_grad = {'auto' if s.tol_grad is None else repr(s.tol_grad)}",
            f"max_iter = {s.max_iter}",
            f"centers = {'auto' if self.centers is None else ';'.join(repr(c) for c in self.centers)}",
            f"radii = {'auto' if self.radii is None else ';'.join(repr(r) for r in self.radii)}",
            f"seed = {self.seed}",
            f"m = {self.m}",
            f"stages = {','.join(self.stages)}",
        ]
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:12]


_KEYS = {
    "n", "p", "lambda_plus", "lambda_minus", "g", "h", "tol_grad", "max_iter",
    "centers", "radii", "output", "seed", "m", "stages",
}


def _float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines into a validated RunConfig.

    Empty text yields the all-defaults config. Defaults:

        n = 1               p = 2.0            lambda_plus = 1.0
        lambda_minus = 1.0  h = 0.0625         g = zero
        tol_grad = auto     max_iter = 200     centers = auto
        radii = auto        output = (unset)   seed = 0
        m = 512             stages = solve,profile,gamma

    "auto" keeps the adaptive policy: tol_grad scales with the energy,
    centers follow the extracted free boundary (origin fallback), radii
    follow the geometric ladder of default_radii. Each violated constraint
    raises ConfigError naming the key: unknown keys, p <= 1, lambda <= 0,
    h whose reciprocal is not an integer, centers outside the thin face.
    """
    raw: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {ln}: expected 'key = value', got {body!r}")
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key '{key}' (line {ln})")
        if key in raw:
            raise ConfigError(f"key '{key}' given twice (line {ln})")
        raw[key] = val

    n = _int("n", raw["n"]) if "n" in raw else 1
    if n not in (1, 2):
        raise ConfigError(f"key 'n': thin-face dimension must be 1 or 2, got {n}")
    p = _float("p", raw["p"]) if "p" in raw else 2.0
    if not p > 1.0:
        raise ConfigError(f"key 'p': the phase exponent requires p > 1, got {p}")
    lam_p = _float("lambda_plus", raw["lambda_plus"]) if "lambda_plus" in raw else 1.0
    lam_m = _float("lambda_minus", raw["lambda_minus"]) if "lambda_minus" in raw else 1.0
    if not lam_p > 0.0:
        raise ConfigError(f"key 'lambda_plus': weight must be > 0, got {lam_p}")
    if not lam_m > 0.0:
        raise ConfigError(f"key 'lambda_minus': weight must be > 0, got {lam_m}")
    h = _float("h", raw["h"]) if "h" in raw else 1.0 / 16
    if h <= 0 or abs(round(1.0 / h) - 1.0 / h) > 1e-9:
        raise ConfigError(f"key 'h': grid step must divide 1 exactly, got {h}")
    g = raw.get("g", "zero")
    tol_grad = None
    if "tol_grad" in raw and raw["tol_grad"] != "auto":
        tol_grad = _float("tol_grad", raw["tol_grad"])
        if tol_grad <= 0:
            raise ConfigError(f"key 'tol_grad': tolerance must be > 0, got {tol_grad}")
    max_iter = _int("max_iter", raw["max_iter"]) if "max_iter" in raw else 200
    if max_iter < 1:
        raise ConfigError(f"key 'max_iter': need at least 1, got {max_iter}")

    try:
        spec = ProblemSpec(n=n, p=p, lambda_plus=lam_p, lambda_minus=lam_m,
                           g=g, h=h, tol_grad=tol_grad, max_iter=max_iter)
    except ValueError as exc:
        raise ConfigError(f"key 'g': {exc}") from None

    centers = None
    if "centers" in raw and raw["centers"] != "auto":
        centers = []
        for part in raw["centers"].split(";"):
            c = _float("centers", part)
            if abs(c) >= 1.0:
                raise ConfigError(
                    f"key 'centers': center {c} lies outside the open thin face (-1, 1)")
            centers.append(c)
        if not centers:
            raise ConfigError("key 'centers': empty list")

    radii = None
    if "radii" in raw and raw["radii"] != "auto":
        radii = sorted(_float("radii", part) for part in raw["radii"].split(";"))
        if any(r <= 0 for r in radii):
            raise ConfigError("key 'radii': radii must be positive")

    seed = _int("seed", raw["seed"]) if "seed" in raw else 0
    m = _int("m", raw["m"]) if "m" in raw else 512
    if m < 64:
        raise ConfigError(f"key 'm': quadrature sample count must be >= 64, got {m}")

    stages: tuple[str, ...] = _STAGES
    if "stages" in raw:
        stages = tuple(s.strip() for s in raw["stages"].split(",") if s.strip())
        bad = [s for s in stages if s not in _STAGES]
        if bad:
            raise ConfigError(f"key 'stages': unknown stage(s) {bad}; valid: {list(_STAGES)}")

    return RunConfig(spec=spec, centers=centers, radii=radii,
                     output=raw.get("output"), seed=seed, m=m, stages=stages)


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def _write_csv(path: Path, digest: str, header: list[str], rows) -> None:
    lines = [f"# config {digest}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def output_root() -> Path:
    return Path(os.environ.get(ENV_OUTPUT_ROOT, os.getcwd()))


def run(config: RunConfig) -> Path:
    """Execute the configured stages and write the artifact directory."""
    digest = config.digest
    out = Path(config.output) if config.output else output_root() / "runs" / digest
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(f"# config {digest}\n" + config.echo())

    spec = config.spec
    grid = spec.grid()
    summary: dict = {"config_hash": digest, "config": config.echo().splitlines()}

    result = minimize(spec)
    summary["solve"] = {
        "energy": result.energy,
        "iterations": result.iterations,
        "grad_sup": result.grad_sup,
        "node_count": grid.node_count,
        "h": spec.h,
    }
    rows = zip(grid.nodes[:, 0], grid.nodes[:, -1], result.u.values, result.v.values)
    _write_csv(out / "fields.csv", digest, ["x", "y", "u", "v"], rows)

    el = el_crosscheck(result, spec)
    summary["stationarity"] = {
        "harmonic_sup": el.harmonic_sup,
        "neumann_sup": el.neumann_sup,
        "natural_sup": el.natural_sup,
        "weak_residual": weak_residual(result, spec, seed=config.seed, m=config.m),
    }

    points = []
    if "gamma" in config.stages and spec.n == 1:
        points = extract_gamma(result.u, spec)
        for pt in points:
            analyze_point(pt, result.u, result.v, spec, m=config.m)

    centers = config.centers
    if centers is None:
        centers = [pt.x for pt in points] or [0.0]

    if "profile" in config.stages:
        summary["profiles"] = {}
        for c in centers:
            radii = np.asarray(config.radii) if config.radii else default_radii(grid, [c])
            prof = compute_profile(result.u, result.v, [c], radii, spec, m=config.m)
            almgren_c = minimal_almgren_constant(prof.radii, prof.N)
            entry = {
                "center": c,
                "radii": [float(r) for r in prof.radii],
                "almgren_constant": almgren_c,
            }
            try:
                mu_hat, mu_int = estimate_mu(prof)
                entry["mu_hat"], entry["mu_int"] = mu_hat, mu_int
            except ValueError as exc:
                entry["mu_error"] = str(exc)
            summary["profiles"][_center_tag(c)] = entry
            rows = zip(prof.radii, prof.H, prof.D, prof.D0, prof.B, prof.N,
                       prof.N0, prof.phi,
                       prof.W if prof.W is not None else [None] * prof.radii.size,
                       prof.M if prof.M is not None else [None] * prof.radii.size)
            _write_csv(out / f"profile_{_center_tag(c)}.csv", digest,
                       ["r", "H", "D", "D0", "B", "N", "N0", "phi", "W", "M"], rows)

    if "gamma" in config.stages:
        gamma_rows = []
        summary["points"] = []
        for pt in points:
            mon_c = None
            if pt.mu_int is not None and pt.mu_int >= 1 and pt.p_mu is not None:
                radii = default_radii(grid, [pt.x])
                prof = compute_profile(result.u, result.v, [pt.x], radii, spec,
                                       mu=float(pt.mu_int), p_mu=pt.p_mu, q_mu=pt.q_mu,
                                       m=config.m)
                mon_c = minimal_monneau_constant(prof.radii, prof.M)
            gamma_rows.append([pt.x, pt.side, pt.classification, pt.mu_hat,
                               pt.mu_int, pt.dimension, pt.fit_residual])
            summary["points"].append({
                "x": pt.x,
                "side": pt.side,
                "classification": pt.classification,
                "mu_hat": pt.mu_hat,
                "mu_int": pt.mu_int,
                "dimension": pt.dimension,
                "fit_residual": pt.fit_residual,
                "value_v": pt.value_v,
                "monneau_constant": mon_c,
            })
        _write_csv(out / "gamma.csv", digest,
                   ["x", "side", "class", "mu_hat", "mu_int", "d", "fit_residual"],
                   gamma_rows)

    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, allow_nan=True,
                   default=_json_default) + "\n")
    return out


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _center_tag(c: float) -> str:
    return f"{c:+.4f}"
