"""Pipeline orchestration: problem catalog, job configuration, end-to-end solve.

A job runs ingest -> classify -> potentials -> loop-ODE integration ->
pointwise Birkhoff splitting -> Sym evaluation -> diagnostics.  Everything
is deterministic for a fixed configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np

from . import cauchy
from .curves import CurveData, ingest_curve
from .expr import parse_expression
from .framegen import (
    FrameField, build_frame_field, gauge_cmc, gauge_psph, integrate_potential,
    maurer_cartan_coeffs, sym_cmc, sym_psph,
)
from .loops import samples_to_coeffs, eval_coeffs
from .minkalg import E2 as _E2, U3 as _U3, matrix_to_e3, matrix_to_l3
from .surface import (
    CheckResult, DiagnosticsReport, cauchy_residual, gauss_curvature,
    geodesic_residual, mean_curvature, sine_gordon_residual,
)

__all__ = ["Numerics", "JobConfig", "Artifacts", "catalog_problems",
           "make_pair", "solve_problem", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Numerics:
    n: int = 16
    m: int = 128
    steps_per_unit: int = 800
    section: int | None = None
    chunk: int = 2048

    def validated(self):
        if self.m < 4 * self.n + 2:
            raise ConfigError(f"M={self.m} must be >= 4N+2 = {4 * self.n + 2}")
        if self.n < 2 or self.steps_per_unit < 1:
            raise ConfigError("bad numerics")
        return self


@dataclass(frozen=True)
class JobConfig:
    problem: str
    curve: str | None = None
    h: float | None = None
    alpha: str = "1"
    beta: str = "0"
    grid: tuple = (-1.0, 1.0, -1.0, 1.0, 81, 81)
    lambda0: tuple = (1.0,)
    t0: float = 0.0
    numerics: Numerics = Numerics()
    out_dir: str | None = None

    def validated(self):
        x0, x1, y0, y1, nx, ny = self.grid
        if not (x0 < x1 and y0 < y1 and int(nx) >= 9 and int(ny) >= 9):
            raise ConfigError(f"bad grid {self.grid}")
        for lam in self.lambda0:
            if lam == 0:
                raise ConfigError("lambda0 must be nonzero")
        self.numerics.validated()
        return self


@dataclass
class Artifacts:
    config: JobConfig
    pair: object
    frames: FrameField
    meshes: dict                 # lambda0 -> SurfaceMesh
    gauge: object
    diagnostics: DiagnosticsReport
    data: CurveData | None

    @property
    def mesh(self):
        return self.meshes[self.config.lambda0[0]]


_CATALOG = {
    "cmc-cylinder": dict(
        kind="cmc", curve="circle:rho=1", h=-0.5, grid=(-1, 1, -1, 1, 81, 81),
        revolution=True,
        doc="timelike-axis revolution circle; rho*H = -1/2 is the cylinder"),
    "cmc-timelike-line": dict(
        kind="cmc", curve="timelike-line", h=0.7, grid=(-1, 1, -1, 1, 81, 81),
        doc="timelike straight line with constant transverse field"),
    "cmc-timelike-helix": dict(
        kind="cmc", curve="timelike-helix", h=-0.6, grid=(-1, 1, -1, 1, 81, 81),
        doc="timelike helix with radial transverse field"),
    "cmc-null": dict(
        kind="cmc-null", curve=None, h=0.5, alpha="1", beta="0",
        grid=(-0.5, 0.5, -0.5, 0.5, 81, 81),
        doc="null-axis revolution data; alpha=1, beta=0, H=1/2 is rational"),
    "psph-parabola": dict(
        kind="psph", curve="parabola", grid=(-1, 1, -1, 1, 81, 81),
        doc="parabola as geodesic principal curve"),
    "psph-catenary": dict(
        kind="psph", curve="catenary", grid=(-1, 1, -1, 1, 81, 81),
        doc="catenary as geodesic principal curve"),
    "psph-cubic": dict(
        kind="psph", curve="cubic", grid=(-0.8, 0.8, -0.8, 0.8, 81, 81),
        doc="nodal cubic as geodesic principal curve"),
    "psph-lemniscate": dict(
        kind="psph", curve="lemniscate", grid=(-1.1, 1.1, -1.1, 1.1, 81, 81),
        doc="Bernoulli lemniscate loop as geodesic principal curve"),
    "psph-ellipse": dict(
        kind="psph", curve="ellipse:a=1,b=2", grid=(-1.2, 1.2, -1.2, 1.2, 81, 81),
        doc="ellipse x^2 + (y/2)^2 = 1 as geodesic principal curve"),
    "psph-circle": dict(
        kind="psph", curve="circle2d:kappa=1", grid=(-1, 1, -1, 1, 81, 81),
        doc="planar circle as geodesic principal curve"),
    "psph-helix": dict(
        kind="psph", curve="helix:kappa=1,tau=0.8", grid=(-1, 1, -1, 1, 81, 81),
        doc="unit-speed helix as geodesic (nowhere-principal branch)"),
    "psph-asymptotic": dict(
        kind="psph-char", curve="line-asymptotic:b=0.5", alpha="0.5",
        grid=(-1, 1, -1, 1, 81, 81),
        doc="straight asymptotic line with rotating normal, free alpha"),
}


def catalog_problems():
    return {name: spec["doc"] for name, spec in sorted(_CATALOG.items())}


def config_for(problem, **overrides) -> JobConfig:
    if problem not in _CATALOG:
        raise ConfigError(f"unknown catalog problem {problem!r}; "
                          f"known: {', '.join(sorted(_CATALOG))}")
    spec = _CATALOG[problem]
    cfg = JobConfig(
        problem=problem,
        curve=spec.get("curve"),
        h=spec.get("h"),
        alpha=spec.get("alpha", "1"),
        beta=spec.get("beta", "0"),
        grid=tuple(spec.get("grid")),
    )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validated()


def _problem_kind(cfg: JobConfig) -> str:
    if cfg.problem in _CATALOG:
        return _CATALOG[cfg.problem]["kind"]
    return cfg.problem  # direct kind names are allowed


def make_pair(cfg: JobConfig):
    """Ingest + classify + emit the boundary potential pair for a config."""
    kind = _problem_kind(cfg)
    if kind == "cmc" and _CATALOG.get(cfg.problem, {}).get("revolution"):
        name, params = cfg.curve.split(":", 1) if ":" in cfg.curve else (cfg.curve, "")
        rho = 1.0
        for item in params.split(","):
            if item.startswith("rho="):
                rho = float(item[4:])
        pair = cauchy.potential_revolution_timelike(rho, cfg.h)
        return pair, pair.meta["data"]
    if kind == "cmc":
        if cfg.h is None:
            raise ConfigError("H required for CMC problems")
        data = ingest_curve(cfg.curve)
        pair = cauchy.potential_cmc_noncharacteristic(data, cfg.h, t0=cfg.t0)
        return pair, data
    if kind == "cmc-null":
        if cfg.h is None:
            raise ConfigError("H required for CMC problems")
        alpha = parse_expression(cfg.alpha, "y")
        beta = parse_expression(cfg.beta, "y")
        curve = cfg.curve or f"null-revolution:H={cfg.h},alpha0={_real_at0(alpha)}"
        data = ingest_curve(curve)
        pair = cauchy.potential_cmc_null(data, alpha, beta, t0=cfg.t0)
        _check_null_h(pair, data, cfg.h)
        return pair, data
    if kind == "psph":
        data = ingest_curve(cfg.curve)
        pair = cauchy.potential_psph_noncharacteristic(data, t0=cfg.t0)
        return pair, data
    if kind == "psph-char":
        alpha = parse_expression(cfg.alpha, "y")
        data = ingest_curve(cfg.curve)
        pair = cauchy.potential_psph_characteristic(data, alpha, t0=cfg.t0)
        if not pair.meta.get("speed_compatible", True):
            raise cauchy.HypothesisViolation(
                "characteristic data incompatible with its parameterization: "
                "the normal twist rate must equal the curve speed "
                f"(max mismatch {pair.meta['speed_mismatch']:.2e})")
        return pair, data
    raise ConfigError(f"unknown problem kind {kind!r}")


def _real_at0(alpha):
    a0 = complex(np.asarray(alpha(np.zeros(1))).ravel()[0])
    if abs(a0.imag) > 1e-12:
        raise ConfigError("null-revolution data requires real alpha(0)")
    return a0.real


def _check_null_h(pair, data, h):
    h_imp = pair.meta["h_implied"](data.t)
    if np.max(np.abs(h_imp - h)) > 1e-6 * max(abs(h), 1.0):
        raise cauchy.HypothesisViolation(
            "null data incompatible with the requested mean curvature: "
            f"data implies H in [{h_imp.min():.6g}, {h_imp.max():.6g}], "
            f"requested {h:g}")


def _second_characteristic_reference(pair, cfg, ys):
    """Positions along the second characteristic x = x0 from F_minus alone.

    F(x0, y) = F_minus(y), so the reference never touches the Birkhoff
    splitting: an independent oracle for the two-curve reproduction checks.
    """
    nm = cfg.numerics
    x0, y0 = pair.meta.get("grid_basepoint", (0.0, 0.0))
    fm = integrate_potential(pair.psi_coeffs, y0, ys, nm.m,
                             steps_per_unit=nm.steps_per_unit)
    c = samples_to_coeffs(fm, nm.n)
    f1 = eval_coeffs(c, np.asarray(1.0))
    js = np.arange(-nm.n, nm.n + 1, dtype=float)
    d1 = np.einsum("j,kjab->kab", js, c)
    iso = pair.meta["isometry"]
    if pair.kind == "cmc":
        h = cfg.h
        s = 2.0 * d1 @ np.linalg.inv(f1) - f1 @ _E2.astype(complex) @ np.linalg.inv(f1)
        vec = matrix_to_l3(s)
        pos = (vec - np.array([0.0, 0.0, -1.0])) / (2.0 * h)
    else:
        pos = matrix_to_e3(d1 @ np.linalg.inv(f1))
    return iso.apply(pos)


def solve_problem(cfg: JobConfig) -> Artifacts:
    cfg = cfg.validated()
    nm = cfg.numerics
    pair, data = make_pair(cfg)
    x0, x1, y0, y1, nx, ny = cfg.grid
    x = np.linspace(x0, x1, int(nx))
    y = np.linspace(y0, y1, int(ny))

    frames = build_frame_field(pair, x, y, n=nm.n, m=nm.m, section=nm.section,
                               steps_per_unit=nm.steps_per_unit, chunk=nm.chunk)
    a1, am1 = maurer_cartan_coeffs(pair, frames)
    report = DiagnosticsReport()
    locus = pair.meta.get("curve_locus", "antidiagonal")

    if pair.kind == "cmc":
        gauged, gauge = gauge_cmc(frames, a1, am1, cfg.h)
    else:
        gauged, gauge = gauge_psph(frames, a1, am1)

    meshes = {}
    iso = pair.meta["isometry"]
    for lam in cfg.lambda0:
        mesh = (sym_cmc(frames, lam, cfg.h, isometry=iso) if pair.kind == "cmc"
                else sym_psph(frames, lam, isometry=iso))
        meta = dict(mesh.meta)
        meta["curve_locus"] = locus
        meta["normal_flipped"] = pair.meta.get("normal_flipped", False)
        meta["problem"] = cfg.problem
        meshes[lam] = replace(mesh, meta=meta)
    mesh = meshes[cfg.lambda0[0]]

    # --- diagnostics ------------------------------------------------------
    extras = {}
    if locus == "xaxis":
        bx = pair.meta.get("grid_basepoint", (0.0, 0.0))[0]
        ref = _second_characteristic_reference(pair, cfg, y)
        extras["second_characteristic"] = (bx, y, ref)
        if pair.kind == "psph":
            alpha = pair.meta["alpha"]
            extras["asymptotic_speed"] = lambda t: 2.0 * abs(complex(
                np.asarray(alpha(np.zeros(1))).ravel()[0]))
    for res in cauchy_residual(mesh, data, locus=locus, extras=extras).values():
        report.add(res)

    if pair.kind == "cmc":
        _, hres = mean_curvature(mesh, cfg.h)
        report.add(hres)
    else:
        _, kres = gauss_curvature(mesh)
        report.add(kres)
        if data is not None and data.meta.get("principal_normal"):
            report.add(geodesic_residual(mesh, data, locus=locus))
        for res in sine_gordon_residual(gauged, gauge).values():
            report.add(res)

    cov = mesh.coverage()
    report.add(CheckResult(
        name="big_cell_coverage", max_residual=1.0 - cov, mean_residual=1.0 - cov,
        tol=1.0, passed=True,
        extra={"coverage": cov, "failed_nodes": int((~frames.mask).sum()),
               "birkhoff_residual_max": float(np.nanmax(
                   np.where(frames.mask, frames.residual, 0.0)))}))

    return Artifacts(config=cfg, pair=pair, frames=frames, meshes=meshes,
                     gauge=gauge, diagnostics=report, data=data)
