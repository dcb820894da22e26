"""Surface meshes and quantitative verification.

All estimators work on the mesh positions/normals with second-order central
stencils (boundary nodes excluded, masked nodes poison their stencils), so
they are independent of the loop-group pipeline that produced the mesh.
Transverse boundary derivatives use 4th-order central stencils: the
Cauchy-reproduction tolerance sits below what O(h^2) differencing resolves
at the default grids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .minkalg import ip as form_ip

__all__ = [
    "SurfaceMesh", "CheckResult", "DiagnosticsReport",
    "mean_curvature", "gauss_curvature", "cauchy_residual",
    "geodesic_residual", "sine_gordon_residual",
]


@dataclass(frozen=True)
class SurfaceMesh:
    x: np.ndarray
    y: np.ndarray
    positions: np.ndarray   # (nx, ny, 3)
    normals: np.ndarray     # (nx, ny, 3)
    mask: np.ndarray        # (nx, ny) bool, True = valid
    form: str               # "l3" | "e3"
    kind: str               # "cmc" | "psph"
    meta: dict = dataclass_field(default_factory=dict)

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    def coverage(self) -> float:
        return float(self.mask.mean())


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    mean_residual: float
    tol: float
    passed: bool
    extra: dict = dataclass_field(default_factory=dict)

    def as_dict(self):
        d = {"name": self.name, "max_residual": self.max_residual,
             "mean_residual": self.mean_residual, "tol": self.tol,
             "passed": bool(self.passed)}
        d.update({k: v for k, v in sorted(self.extra.items())})
        return d


@dataclass
class DiagnosticsReport:
    checks: dict = dataclass_field(default_factory=dict)

    def add(self, result: CheckResult):
        self.checks[result.name] = result

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_json(self) -> str:
        payload = {name: self.checks[name].as_dict()
                   for name in sorted(self.checks)}
        return json.dumps(payload, sort_keys=True, indent=2,
                          default=_json_default)

    def summary_lines(self):
        for name in sorted(self.checks):
            c = self.checks[name]
            status = "pass" if c.passed else "FAIL"
            yield (f"[{status}] {name}: max={c.max_residual:.3e} "
                   f"mean={c.mean_residual:.3e} tol={c.tol:g}")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _finish(name, res, tol, extra=None):
    res = np.asarray(res, dtype=float)
    valid = np.isfinite(res)
    if valid.any():
        mx = float(np.max(res[valid]))
        mn = float(np.mean(res[valid]))
    else:
        mx = mn = float("nan")
    passed = bool(valid.any()) and mx <= tol
    return CheckResult(name=name, max_residual=mx, mean_residual=mn, tol=tol,
                       passed=passed, extra=extra or {})


# -- stencil helpers --------------------------------------------------------

def _dx(field, h):
    out = np.full_like(field, np.nan)
    out[1:-1] = (field[2:] - field[:-2]) / (2 * h)
    return out


def _dy(field, h):
    out = np.full_like(field, np.nan)
    out[:, 1:-1] = (field[:, 2:] - field[:, :-2]) / (2 * h)
    return out


def _dxx(field, h):
    out = np.full_like(field, np.nan)
    out[1:-1] = (field[2:] - 2 * field[1:-1] + field[:-2]) / h ** 2
    return out


def _dyy(field, h):
    out = np.full_like(field, np.nan)
    out[:, 1:-1] = (field[:, 2:] - 2 * field[:, 1:-1] + field[:, :-2]) / h ** 2
    return out


def _dxy(field, hx, hy):
    out = np.full_like(field, np.nan)
    out[1:-1, 1:-1] = (field[2:, 2:] - field[2:, :-2]
                       - field[:-2, 2:] + field[:-2, :-2]) / (4 * hx * hy)
    return out


def _interior_mask(mask):
    ok = mask.copy()
    ok[0, :] = ok[-1, :] = ok[:, 0] = ok[:, -1] = False
    # stencil neighbors must be valid too
    ok[1:-1, 1:-1] &= (mask[2:, 1:-1] & mask[:-2, 1:-1]
                       & mask[1:-1, 2:] & mask[1:-1, :-2]
                       & mask[2:, 2:] & mask[2:, :-2]
                       & mask[:-2, 2:] & mask[:-2, :-2])
    return ok


def _erode(mask):
    """Shrink a boolean set by one ring of neighbors."""
    out = mask.copy()
    out[0, :] = out[-1, :] = out[:, 0] = out[:, -1] = False
    out[1:-1, 1:-1] = (mask[1:-1, 1:-1]
                       & mask[2:, 1:-1] & mask[:-2, 1:-1]
                       & mask[1:-1, 2:] & mask[1:-1, :-2]
                       & mask[2:, 2:] & mask[2:, :-2]
                       & mask[:-2, 2:] & mask[:-2, :-2])
    return out


def _stencil_range(field):
    """Max variation of a field over each 3x3 stencil (nan at the border)."""
    out = np.full_like(field, np.nan)
    stack = [field[1 + di:field.shape[0] - 1 + di, 1 + dj:field.shape[1] - 1 + dj]
             for di in (-1, 0, 1) for dj in (-1, 0, 1)]
    stack = np.stack(stack)
    out[1:-1, 1:-1] = np.nanmax(stack, axis=0) - np.nanmin(stack, axis=0)
    return out


# -- curvature estimators ---------------------------------------------------

def mean_curvature(mesh: SurfaceMesh, h_target, tol=1e-4):
    """H = <f_xy, N> / <f_x, f_y> on interior unmasked nodes.

    <f_x, f_y> = (1/2) eps e^omega absorbs the sign convention, so no
    separate epsilon bookkeeping is needed.  Degenerate nodes (vanishing
    denominator) are excluded and counted.
    """
    f = mesh.positions
    fx = _dx(f, mesh.hx)
    fy = _dy(f, mesh.hy)
    fxy = _dxy(f, mesh.hx, mesh.hy)
    denom = form_ip(fx, fy, mesh.form)
    numer = form_ip(fxy, mesh.normals, mesh.form)
    scale = np.nanmax(np.abs(denom), initial=0.0)
    ok = _interior_mask(mesh.mask) & np.isfinite(denom)
    degenerate = ok & (np.abs(denom) < 1e-8 * max(scale, 1e-300))
    ok &= ~degenerate
    with np.errstate(all="ignore"):
        h_est = np.where(ok, numer / denom, np.nan)
    res = np.where(ok, np.abs(h_est - h_target), np.nan)
    return h_est, _finish("mean_curvature", res, tol, {
        "target": float(h_target),
        "degenerate_nodes": int(degenerate.sum()),
        "nodes": int(ok.sum())})


def gauss_curvature(mesh: SurfaceMesh, target=-1.0, tol=1e-2, sin_tol=1e-6):
    """K from finite-difference fundamental forms; near-singular nodes
    (area element ~ 0, the cusp lines) are excluded and counted."""
    f = mesh.positions
    n = mesh.normals
    fx = _dx(f, mesh.hx)
    fy = _dy(f, mesh.hy)
    fxx = _dxx(f, mesh.hx)
    fyy = _dyy(f, mesh.hy)
    fxy = _dxy(f, mesh.hx, mesh.hy)
    ee = form_ip(fx, fx, mesh.form)
    ff = form_ip(fx, fy, mesh.form)
    gg = form_ip(fy, fy, mesh.form)
    l = form_ip(fxx, n, mesh.form)
    m_ = form_ip(fxy, n, mesh.form)
    n2 = form_ip(fyy, n, mesh.form)
    det1 = ee * gg - ff ** 2
    ok = _interior_mask(mesh.mask) & np.isfinite(det1)
    # sin(phi)^2 = det(I)/( |f_x|^2 |f_y|^2 ) in asymptotic coordinates; the
    # cusp lines (sin(phi) -> 0) carry derivative singularities, so exclude a
    # band around them and erode one ring so no stencil straddles an edge
    with np.errstate(all="ignore"):
        sin2 = det1 / np.where(ee * gg > 0, ee * gg, np.nan)
    near = ~(sin2 > max(sin_tol, 1e-2))
    ok &= _erode(~near)
    with np.errstate(all="ignore"):
        k_est = np.where(ok, (l * n2 - m_ ** 2) / det1, np.nan)
    res = np.where(ok, np.abs(k_est - target), np.nan)
    return k_est, _finish("gauss_curvature", res, tol, {
        "target": float(target),
        "singular_nodes": int((near & np.isfinite(sin2)).sum()),
        "nodes": int(ok.sum())})


# -- boundary / curve diagnostics -------------------------------------------

def _curve_nodes(mesh: SurfaceMesh, locus: str):
    """Indices (i, j) of grid nodes on the initial-curve locus and the curve
    parameter at each."""
    x, y = mesh.x, mesh.y
    hx = mesh.hx
    if locus == "antidiagonal":       # y = -x, parameter t = x
        jj = []
        for i, xi in enumerate(x):
            j = np.argmin(np.abs(y + xi))
            if abs(y[j] + xi) < 1e-9 * max(1.0, abs(xi)) + 1e-12:
                jj.append((i, j, xi))
        return jj
    if locus == "diagonal":           # y = x, parameter t = x
        jj = []
        for i, xi in enumerate(x):
            j = np.argmin(np.abs(y - xi))
            if abs(y[j] - xi) < 1e-9 * max(1.0, abs(xi)) + 1e-12:
                jj.append((i, j, xi))
        return jj
    if locus == "xaxis":              # y = 0, parameter t = x
        j = int(np.argmin(np.abs(y)))
        if abs(y[j]) > 1e-12:
            return []
        return [(i, j, xi) for i, xi in enumerate(x)]
    raise ValueError(f"unknown curve locus {locus!r}")


def _fd4_along(mesh, nodes, di, dj, step):
    """4th-order central derivative of positions along a grid direction."""
    f = mesh.positions
    nx, ny = f.shape[:2]
    out = {}
    for (i, j, t) in nodes:
        if not (0 <= i + 2 * di < nx and 0 <= i - 2 * di < nx
                and 0 <= j + 2 * dj < ny and 0 <= j - 2 * dj < ny):
            continue
        pts = [f[i + k * di, j + k * dj] for k in (-2, -1, 1, 2)]
        if not all(np.isfinite(p).all() for p in pts):
            continue
        out[t] = (8 * (pts[2] - pts[1]) - (pts[3] - pts[0])) / (12 * step)
    return out


def cauchy_residual(mesh: SurfaceMesh, data, locus=None, extras=None,
                    tol=1e-5):
    """Reproduction of the prescribed curve data by the mesh.

    Position residual at the curve nodes; transverse-derivative residual
    against V (CMC) via 4th-order central differences across the curve;
    normal residual against N0 (pseudospherical non-characteristic).
    extras may carry ("second_characteristic", y_params, reference_positions)
    for the two-curve problems.
    """
    locus = locus or mesh.meta.get("curve_locus", "antidiagonal")
    nodes = _curve_nodes(mesh, locus)
    report = {}
    pos_res = []
    f0 = data.evaluators.f0
    scale = max(1.0, float(np.nanmax(np.abs(mesh.positions[mesh.mask]),
                                     initial=1.0)))
    for (i, j, t) in nodes:
        if not mesh.mask[i, j]:
            continue
        pos_res.append(np.linalg.norm(mesh.positions[i, j] - f0(t)))
    report["position"] = _finish("cauchy_position", pos_res, tol,
                                 {"locus": locus, "nodes": len(pos_res),
                                  "scale": scale})

    deriv_res = []
    if mesh.kind == "cmc":
        vfun = data.evaluators.field
        if locus == "antidiagonal":
            # transverse direction is v: (i,j) -> (i+1, j+1), dv = hx
            der = _fd4_along(mesh, nodes, 1, 1, mesh.hx)
        elif locus == "diagonal":
            # transverse direction is u: (i,j) -> (i+1, j-1), du = hx
            der = _fd4_along(mesh, nodes, 1, -1, mesh.hx)
        else:
            der = _fd4_along(mesh, nodes, 0, 1, mesh.hy)
        for t, d in der.items():
            deriv_res.append(np.linalg.norm(d - vfun(t)))
        report["derivative"] = _finish("cauchy_transverse_derivative",
                                       deriv_res, tol, {"nodes": len(deriv_res)})
    else:
        nfun = data.evaluators.field
        flip = -1.0 if mesh.meta.get("normal_flipped") else 1.0
        n_res = []
        for (i, j, t) in nodes:
            if not mesh.mask[i, j]:
                continue
            n_res.append(np.linalg.norm(flip * mesh.normals[i, j] - nfun(t)))
        report["normal"] = _finish("cauchy_normal", n_res, tol,
                                   {"nodes": len(n_res)})

    if extras and "second_characteristic" in extras:
        bx, params, ref = extras["second_characteristic"]
        i0 = int(np.argmin(np.abs(mesh.x - bx)))
        res2 = []
        for t, want in zip(params, ref):
            j = int(np.argmin(np.abs(mesh.y - t)))
            if abs(mesh.y[j] - t) < 1e-9 and mesh.mask[i0, j]:
                res2.append(np.linalg.norm(mesh.positions[i0, j] - want))
        report["second_characteristic"] = _finish(
            "cauchy_second_characteristic", res2, tol, {"nodes": len(res2)})
    if extras and "asymptotic_speed" in extras:
        # |f_y| along the initial curve must equal the prescribed 2|alpha|
        want = extras["asymptotic_speed"]
        der = _fd4_along(mesh, nodes, 0, 1, mesh.hy)
        res3 = [abs(np.linalg.norm(d) - want(t)) for t, d in der.items()]
        report["asymptotic_speed"] = _finish("cauchy_asymptotic_speed", res3,
                                             tol * 10, {"nodes": len(res3)})
    return report


def geodesic_residual(mesh: SurfaceMesh, data, locus=None, tol=1e-3):
    """Tangential fraction of f0'' along the curve (geodesic test).

    The curve is a geodesic iff its acceleration is parallel to the surface
    normal; the residual is |tangential part| / |f0''| per curve node.
    """
    locus = locus or mesh.meta.get("curve_locus", "antidiagonal")
    nodes = _curve_nodes(mesh, locus)
    d2f = data.evaluators.d2f
    df = data.evaluators.df
    res = []
    for (i, j, t) in nodes:
        if not mesh.mask[i, j]:
            continue
        acc = d2f(t)
        nrm = np.linalg.norm(acc)
        if nrm < 1e-12:
            continue
        tang = df(t)
        tang = tang / np.linalg.norm(tang)
        # in-surface side direction; a geodesic has no side-slip
        # acceleration (the along-curve part only reparameterizes)
        side = np.cross(mesh.normals[i, j], tang)
        res.append(abs(np.dot(acc, side)) / nrm)
    return _finish("geodesic_tangential_fraction", res, tol,
                   {"nodes": len(res)})


def sine_gordon_residual(frames, gauge, tol=None, codazzi_tol=1e-6):
    """Residual of phi_xy = |f_x||f_y| sin(phi), phi = 2 theta, plus the
    Codazzi-Mainardi reductions d|f_x|/dy = d|f_y|/dx = 0.

    Works on the per-node angle and speeds recorded by the pseudospherical
    gauge; phi_xy uses the 2nd-order cross stencil, so the residual is the
    discretization error of an exact solution and must refine at O(h^2).
    """
    hx = float(frames.x[1] - frames.x[0])
    hy = float(frames.y[1] - frames.y[0])
    phi = gauge.phi
    ok = _interior_mask(frames.mask & gauge.weakly_regular & ~gauge.singular)
    # the recorded angle wraps across cusp lines; a large variation over a
    # stencil marks a branch jump, not a smooth solution patch
    ok &= _stencil_range(phi) < 1.0
    with np.errstate(all="ignore"):
        phi_xy = _dxy(phi, hx, hy)
        resid = phi_xy - gauge.fx_abs * gauge.fy_abs * np.sin(phi)
    res = np.where(ok, np.abs(resid), np.nan)
    dfx = np.where(ok, np.abs(_dy(gauge.fx_abs, hy)), np.nan)
    dfy = np.where(ok, np.abs(_dx(gauge.fy_abs, hx)), np.nan)
    if tol is None:
        # the phi_xy stencil error scales with the squared right-hand-side
        # magnitude (phi curvatures are set by |f_x||f_y| through the PDE)
        peak = float(np.nanmax(np.where(ok, gauge.fx_abs * gauge.fy_abs, np.nan),
                               initial=1.0))
        tol = 10.0 * max(hx, hy) ** 2 * max(1.0, peak) ** 2
    out = {
        "sine_gordon": _finish("sine_gordon", res, tol,
                               {"nodes": int(ok.sum()),
                                "h": max(hx, hy)}),
        "codazzi_x": _finish("codazzi_dfx_dy", dfx, codazzi_tol),
        "codazzi_y": _finish("codazzi_dfy_dx", dfy, codazzi_tol),
    }
    return out
