"""Curve ingestion: analytic catalog and CSV sampling.

Catalog curves are defined symbolically and all required derivatives
(including second derivatives of the prescribed field, which the
pseudospherical potential formulas consume) are generated exactly and
compiled to numpy callables.  CSV curves get 4th-order finite-difference
derivatives on their uniform parameter grid, one-sided at the ends, with
cubic-spline evaluators for off-sample parameters.

The prescribed field is V (same-causal-norm orthogonal field, CMC case) or
N0 (unit normal, pseudospherical case).  For plane/space curves the
principal normal can be auto-filled, with the sign chosen to make
<f0', N0'> > 0 when that product has a uniform sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
import sympy as sp

from .minkalg import ip as form_ip

__all__ = ["CurveData", "CurveEvaluators", "CurveError", "ingest_curve",
           "catalog_names"]

HYP_TOL = 1e-8


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class CurveEvaluators:
    f0: object
    df: object
    d2f: object
    field: object
    dfield: object
    d2field: object


@dataclass(frozen=True)
class CurveData:
    form: str                  # "l3" | "e3"
    kind: str                  # "cmc" | "psph"
    name: str
    t: np.ndarray
    f0: np.ndarray
    df: np.ndarray
    d2f: np.ndarray
    field: np.ndarray
    dfield: np.ndarray
    d2field: np.ndarray
    evaluators: CurveEvaluators
    meta: dict = dataclass_field(default_factory=dict)

    def validate(self):
        """Regularity and the orthogonality invariant for the data kind."""
        speed2 = form_ip(self.df, self.df, self.form)
        if self.form == "e3":
            if np.min(speed2) <= 0:
                raise CurveError("curve not regular: |f0'| vanishes")
            ortho = form_ip(self.df, self.field, self.form)
            scale = np.sqrt(np.max(speed2))
            if np.max(np.abs(ortho)) > HYP_TOL * max(scale, 1.0):
                raise CurveError("N0 not orthogonal to f0'")
            unit = np.abs(form_ip(self.field, self.field, "e3") - 1.0)
            if np.max(unit) > 1e-6:
                raise CurveError("N0 not a unit field")
        else:
            euclid = np.einsum("ij,ij->i", self.df, self.df)
            if np.min(euclid) <= 0:
                raise CurveError("curve not regular: f0' vanishes")
            if np.min(np.abs(speed2)) > HYP_TOL:
                # non-null curve: V orthogonal with opposite norm
                ortho = form_ip(self.df, self.field, self.form)
                if np.max(np.abs(ortho)) > HYP_TOL * max(np.max(np.abs(speed2)) ** 0.5, 1.0):
                    raise CurveError("V not orthogonal to f0'")
        return self


def _vec_fn(var, exprs):
    funcs = [sp.lambdify(var, sp.expand(e), modules="numpy") for e in exprs]

    def fn(tv):
        tv = np.asarray(tv, dtype=float)
        cols = [np.broadcast_to(np.asarray(f(tv), dtype=float), tv.shape)
                for f in funcs]
        return np.stack(cols, axis=-1)

    return fn


def _symbolic_curve_data(name, kind, form, f_exprs, field_exprs, t_range,
                         n_samples, meta=None):
    t = sp.Symbol("t", real=True)
    df_e = [sp.diff(e, t) for e in f_exprs]
    d2f_e = [sp.diff(e, t, 2) for e in f_exprs]
    dv_e = [sp.diff(e, t) for e in field_exprs]
    d2v_e = [sp.diff(e, t, 2) for e in field_exprs]
    ev = CurveEvaluators(
        f0=_vec_fn(t, f_exprs), df=_vec_fn(t, df_e), d2f=_vec_fn(t, d2f_e),
        field=_vec_fn(t, field_exprs), dfield=_vec_fn(t, dv_e),
        d2field=_vec_fn(t, d2v_e))
    ts = np.linspace(*t_range, n_samples)
    return CurveData(
        form=form, kind=kind, name=name, t=ts,
        f0=ev.f0(ts), df=ev.df(ts), d2f=ev.d2f(ts),
        field=ev.field(ts), dfield=ev.dfield(ts), d2field=ev.d2field(ts),
        evaluators=ev, meta=meta or {}).validate()


def _principal_chain(f1, f2, f3, f4, sign):
    """Principal normal and its first two derivatives from curve derivatives.

    N = sign * w/|w| with w = f'' - (f''.T)T, T = f'/|f'|; the chain rule is
    carried out with numpy vector algebra so the values are exact without
    symbolic differentiation of normalized fields.
    """

    def dot(a, b):
        return np.einsum("...i,...i->...", a, b)

    def pieces(tv):
        u, a, j, s4 = f1(tv), f2(tv), f3(tv), f4(tv)
        nu = np.sqrt(dot(u, u))[..., None]
        tang = u / nu
        ua = dot(u, a)[..., None]
        dtang = a / nu - u * ua / nu ** 3
        d2tang = (j / nu - a * ua / nu ** 3
                  - (a * ua + u * (dot(a, a) + dot(u, j))[..., None]) / nu ** 3
                  + 3.0 * u * ua ** 2 / nu ** 5)
        w = a - dot(a, tang)[..., None] * tang
        dw = (j - (dot(j, tang) + dot(a, dtang))[..., None] * tang
              - dot(a, tang)[..., None] * dtang)
        d2w = (s4
               - (dot(s4, tang) + 2.0 * dot(j, dtang) + dot(a, d2tang))[..., None] * tang
               - 2.0 * (dot(j, tang) + dot(a, dtang))[..., None] * dtang
               - dot(a, tang)[..., None] * d2tang)
        g = np.sqrt(dot(w, w))[..., None]
        dg = dot(w, dw)[..., None] / g
        d2g = (dot(dw, dw) + dot(w, d2w))[..., None] / g - dot(w, dw)[..., None] ** 2 / g ** 3
        n = w / g
        dn = dw / g - w * dg / g ** 2
        d2n = (d2w / g - 2.0 * dw * dg / g ** 2
               - w * d2g / g ** 2 + 2.0 * w * dg ** 2 / g ** 3)
        return sign * n, sign * dn, sign * d2n

    return (lambda tv: pieces(tv)[0],
            lambda tv: pieces(tv)[1],
            lambda tv: pieces(tv)[2])


def _psph_principal_data(name, f_exprs, t_range, params, n_samples):
    """Curve data with the auto-filled principal normal (sign fixed so that
    <f0', N0'> > 0 when that product has a uniform sign)."""
    t = sp.Symbol("t", real=True)
    derivs = [f_exprs]
    for _ in range(4):
        derivs.append([sp.diff(e, t) for e in derivs[-1]])
    fns = [_vec_fn(t, d) for d in derivs]
    ts = np.linspace(*t_range, n_samples)
    field0, dfield0, _ = _principal_chain(*fns[1:], sign=1.0)
    prod = np.einsum("ij,ij->i", fns[1](ts), dfield0(ts))
    flipped = bool(np.all(prod < 0))
    sign = -1.0 if flipped else 1.0
    field, dfield, d2field = _principal_chain(*fns[1:], sign=sign)
    ev = CurveEvaluators(f0=fns[0], df=fns[1], d2f=fns[2],
                         field=field, dfield=dfield, d2field=d2field)
    meta = {"principal_normal": True, "principal_flipped": flipped,
            "params": params}
    return CurveData(
        form="e3", kind="psph", name=name, t=ts,
        f0=ev.f0(ts), df=ev.df(ts), d2f=ev.d2f(ts),
        field=ev.field(ts), dfield=ev.dfield(ts), d2field=ev.d2field(ts),
        evaluators=ev, meta=meta).validate()


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def _catalog(name, params):
    t = sp.Symbol("t", real=True)
    p = params

    if name == "circle":
        rho = p.get("rho", 1.0)
        f = [sp.Integer(0), rho * sp.sin(t), rho * sp.cos(t)]
        v = [sp.Float(rho), sp.Integer(0), sp.Integer(0)]
        return "cmc", "l3", f, v, (-np.pi, np.pi), {"params": {"rho": rho}}

    if name == "timelike-line":
        f = [t, sp.Integer(0), sp.Integer(0)]
        v = [sp.Integer(0), sp.Integer(1), sp.Integer(0)]
        return "cmc", "l3", f, v, (-1.5, 1.5), {}

    if name == "timelike-helix":
        a = p.get("a", 1.2)
        r = p.get("r", 0.4)
        w = p.get("w", 1.0)
        c = sp.sqrt(a ** 2 - r ** 2 * w ** 2)
        f = [a * t, r * sp.cos(w * t), r * sp.sin(w * t)]
        v = [sp.Integer(0), c * sp.cos(w * t), c * sp.sin(w * t)]
        return "cmc", "l3", f, v, (-1.5, 1.5), {"params": {"a": a, "r": r, "w": w}}

    if name == "null-revolution":
        # derived data of the null-axis revolution surface: the curve the
        # constructed surface actually contains, with its y-velocity field
        h = p.get("H", 0.5)
        a0 = p.get("alpha0", 1.0)
        if h == 0:
            raise CurveError("H must be nonzero for null-revolution data")
        f = [t / h, t / h, sp.Integer(-1)]
        v = [(a0 / h) * (1 + t ** 2), (a0 / h) * (t ** 2 - 1), (a0 / h) * (-2 * t)]
        return "cmc", "l3", f, v, (-1.0, 1.0), {"params": {"H": h, "alpha0": a0},
                                                "null": True}

    if name == "null-ansatz":
        # explicit null data in the shared-angle form: s = 1, r = 1 + 0.2 sin t
        r_f = 1 + sp.Rational(1, 5) * sp.sin(t)
        f = [t / 2, sp.sin(t) / 2, -sp.cos(t) / 2]
        v = [-r_f ** 2 / 2, r_f ** 2 * sp.cos(t) / 2, r_f ** 2 * sp.sin(t) / 2]
        return "cmc", "l3", f, v, (-1.0, 1.0), {"null": True}

    raise CurveError(f"unknown catalog curve {name!r}")


_PSPH_PLANE = {
    "parabola": lambda t, p: [t, t ** 2, sp.Integer(0)],
    "catenary": lambda t, p: [t, sp.cosh(t), sp.Integer(0)],
    "cubic": lambda t, p: [t ** 2 - 1, t ** 3 - t, sp.Integer(0)],
    "lemniscate": lambda t, p: [
        sp.cos(t) / (1 + sp.sin(t) ** 2),
        sp.sin(2 * t) / (2 * (1 + sp.sin(t) ** 2)),
        sp.Integer(0)],
    "ellipse": lambda t, p: [p.get("a", 1.0) * sp.sin(t),
                             p.get("b", 2.0) * sp.cos(t),
                             sp.Integer(0)],
    "circle2d": lambda t, p: [sp.sin(p.get("kappa", 1.0) * t) / p.get("kappa", 1.0),
                              -sp.cos(p.get("kappa", 1.0) * t) / p.get("kappa", 1.0),
                              sp.Integer(0)],
}

_PSPH_RANGES = {
    "parabola": (-1.0, 1.0),
    "catenary": (-1.0, 1.0),
    "cubic": (-0.8, 0.8),
    "lemniscate": (-1.1, 1.1),
    "ellipse": (-1.2, 1.2),
    "circle2d": (-1.0, 1.0),
}


def catalog_names():
    cmc = ["circle", "timelike-line", "timelike-helix", "null-revolution",
           "null-ansatz"]
    psph = sorted(_PSPH_PLANE) + ["helix", "line-asymptotic"]
    return {"cmc": cmc, "psph": psph}


def _build_catalog(name, params, t_range=None, n_samples=201):
    t = sp.Symbol("t", real=True)
    p = params

    if name in _PSPH_PLANE:
        f_exprs = _PSPH_PLANE[name](t, p)
        rng = t_range or _PSPH_RANGES[name]
        return _psph_principal_data(name, f_exprs, rng, p, n_samples)

    if name == "helix":
        kappa = p.get("kappa", 1.0)
        tau = p.get("tau", 0.8)
        c = float(np.hypot(kappa, tau))
        a = kappa / c ** 2
        b = tau / c ** 2
        f_exprs = [a * sp.cos(c * t), a * sp.sin(c * t), b * c * t]
        rng = t_range or (-1.2, 1.2)
        return _psph_principal_data("helix", f_exprs, rng, p, n_samples)

    if name == "line-asymptotic":
        b0 = p.get("b", 0.5)
        f_exprs = [2 * b0 * t, sp.Integer(0), sp.Integer(0)]
        n_exprs = [sp.Integer(0), -sp.sin(2 * b0 * t), sp.cos(2 * b0 * t)]
        rng = t_range or (-1.0, 1.0)
        return _symbolic_curve_data("line-asymptotic", "psph", "e3", f_exprs,
                                    n_exprs, rng, n_samples,
                                    {"characteristic": True, "params": {"b": b0}})

    kind, form, f_exprs, v_exprs, default_rng, meta = _catalog(name, p)
    rng = t_range or default_rng
    return _symbolic_curve_data(name, kind, form, f_exprs, v_exprs, rng,
                                n_samples, meta)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _fd4_matrix(n, h):
    """Dense 4th-order first-derivative operator, one-sided at the ends."""
    d = np.zeros((n, n))
    c_int = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    for i in range(2, n - 2):
        d[i, i - 2:i + 3] = c_int
    d[0, :5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    d[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    d[n - 2, n - 5:] = -np.array([-3.0, -10.0, 18.0, -6.0, 1.0])[::-1] / 12.0
    d[n - 1, n - 5:] = -np.array([-25.0, 48.0, -36.0, 16.0, -3.0])[::-1] / 12.0
    return d / h


def _spline_fn(ts, values):
    from scipy.interpolate import CubicSpline
    spl = CubicSpline(ts, values, axis=0)
    lo, hi = ts[0], ts[-1]

    def fn(tv):
        tv = np.asarray(tv, dtype=float)
        if np.any(tv < lo - 1e-9) or np.any(tv > hi + 1e-9):
            raise CurveError(
                f"parameter outside the sampled range [{lo:g}, {hi:g}]")
        return spl(np.clip(tv, lo, hi))

    return fn


def ingest_csv(path, kind):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        cols = header.split(",")
        if cols[:4] != ["t", "fx", "fy", "fz"]:
            raise CurveError("CSV header must start with t,fx,fy,fz")
        has_field = cols[4:7] == ["vx", "vy", "vz"]
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                vals = [float(v) for v in parts]
            except ValueError as exc:
                raise CurveError(f"malformed CSV at line {lineno}") from exc
            if len(vals) != len(cols):
                raise CurveError(f"wrong column count at line {lineno}")
            rows.append(vals)
    arr = np.asarray(rows)
    if arr.shape[0] < 9:
        raise CurveError("need at least 9 samples")
    ts = arr[:, 0]
    dt = np.diff(ts)
    if dt.min() <= 0 or np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1.0):
        raise CurveError("parameter grid must be uniform and increasing")
    h = dt[0]
    f = arr[:, 1:4]
    d = _fd4_matrix(len(ts), h)
    df = d @ f
    d2f = d @ df
    if has_field:
        v = arr[:, 4:7]
    elif kind == "psph":
        # auto principal normal from the differentiated samples
        tang = df / np.linalg.norm(df, axis=1, keepdims=True)
        w = d2f - np.einsum("ij,ij->i", d2f, tang)[:, None] * tang
        nw = np.linalg.norm(w, axis=1, keepdims=True)
        if nw.min() < 1e-12:
            raise CurveError("curvature vanishes: cannot auto-fill the normal")
        v = w / nw
        prod = np.einsum("ij,ij->i", df, d @ v)
        if np.all(prod < 0):
            v = -v
    else:
        raise CurveError("CSV is missing the prescribed field columns vx,vy,vz")
    dv = d @ v
    d2v = d @ dv
    form = "e3" if kind == "psph" else "l3"
    ev = CurveEvaluators(
        f0=_spline_fn(ts, f), df=_spline_fn(ts, df), d2f=_spline_fn(ts, d2f),
        field=_spline_fn(ts, v), dfield=_spline_fn(ts, dv),
        d2field=_spline_fn(ts, d2v))
    return CurveData(form=form, kind=kind, name=f"csv:{path}", t=ts,
                     f0=f, df=df, d2f=d2f, field=v, dfield=dv, d2field=d2v,
                     evaluators=ev, meta={"csv": str(path)}).validate()


def _parse_params(spec):
    if ":" not in spec:
        return spec, {}
    name, rest = spec.split(":", 1)
    params = {}
    for item in rest.split(","):
        if not item:
            continue
        if "=" not in item:
            raise CurveError(f"bad curve parameter {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = float(v)
    return name, params


def ingest_curve(spec, kind=None, t_range=None, n_samples=201):
    """Catalog name (with key=value parameters) or csv:<path>.

    Examples: "parabola", "ellipse:a=1,b=2", "circle:rho=1", "csv:data.csv".
    """
    if spec.startswith("csv:"):
        if kind is None:
            raise CurveError("kind required for CSV curves")
        return ingest_csv(spec[4:], kind)
    name, params = _parse_params(spec)
    return _build_catalog(name, params, t_range=t_range, n_samples=n_samples)
