"""Classification of curve data and construction of boundary potential pairs.

Five problem variants are supported: timelike / spacelike / null initial
curves for timelike CMC surfaces in L3, and non-characteristic /
characteristic (asymptotic) initial curves for pseudospherical surfaces in
E3, plus the rotationally invariant timelike-axis family as a closed-form
special case.

All constructions normalize the moving frame at the base parameter through
a stored ambient isometry (frame at t0 plus the translation by f0(t0)); the
Maurer-Cartan data fed into the potentials is invariant under that left
translation, so the inputs are never transformed, and the isometry is
re-applied to output meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .curves import CurveData
from .framegen import PotentialPair
from .minkalg import (
    Isometry, cross_e3, cross_l3, frame_maurer_cartan, ip_e3, ip_l3,
)

__all__ = [
    "CaseReport", "HypothesisViolation", "MixedType", "classify",
    "potential_cmc_noncharacteristic", "potential_cmc_null",
    "potential_psph_noncharacteristic", "potential_psph_characteristic",
    "potential_revolution_timelike", "null_frame_decomposition",
]

HYP_TOL = 1e-8


class HypothesisViolation(Exception):
    def __init__(self, message, t_range=None):
        if t_range is not None:
            message = f"{message} (violated for t in [{t_range[0]:g}, {t_range[1]:g}])"
        super().__init__(message)
        self.t_range = t_range


class MixedType(HypothesisViolation):
    pass


@dataclass(frozen=True)
class CaseReport:
    case: str                 # cmc-timelike | cmc-spacelike | cmc-null |
                              # psph-principal | psph-general | psph-asymptotic
    valid: bool
    witnesses: dict = dataclass_field(default_factory=dict)
    messages: tuple = ()


def _offending_range(t, bad):
    idx = np.nonzero(bad)[0]
    return (float(t[idx[0]]), float(t[idx[-1]]))


def classify(data: CurveData) -> CaseReport:
    """Detect the problem variant and verify its hypotheses on the samples."""
    data.validate()
    t = data.t
    if data.form == "l3":
        g = ip_l3(data.df, data.df)
        speed2 = np.einsum("ij,ij->i", data.df, data.df)
        scale = max(float(np.max(speed2)), 1e-300)
        wit = {"min_g": float(np.min(g)), "max_g": float(np.max(g))}
        if np.max(g) < -HYP_TOL * scale:
            case = "cmc-timelike"
        elif np.min(g) > HYP_TOL * scale:
            case = "cmc-spacelike"
        elif np.max(np.abs(g)) <= HYP_TOL * scale:
            case = "cmc-null"
        else:
            raise MixedType("initial curve changes causal type",
                            _offending_range(t, np.abs(g) <= HYP_TOL * scale))
        if case == "cmc-null":
            vv = ip_l3(data.field, data.field)
            fv = ip_l3(data.df, data.field)
            vscale = max(float(np.max(np.einsum("ij,ij->i", data.field,
                                                data.field))), 1e-300)
            wit["max_VV"] = float(np.max(np.abs(vv)))
            wit["min_fV"] = float(np.min(fv))
            wit["max_fV"] = float(np.max(fv))
            if np.max(np.abs(vv)) > HYP_TOL * vscale:
                raise HypothesisViolation(
                    "V must be null along a null initial curve",
                    _offending_range(t, np.abs(vv) > HYP_TOL * vscale))
            if np.min(np.abs(fv)) <= HYP_TOL * np.sqrt(scale * vscale) \
                    or np.min(np.sign(fv)) != np.max(np.sign(fv)):
                raise HypothesisViolation(
                    "<f0', V> must be nonzero of constant sign",
                    _offending_range(t, np.abs(fv) <= HYP_TOL * np.sqrt(scale * vscale)))
            wit["eps2"] = float(np.sign(fv[0]))
        else:
            balance = ip_l3(data.field, data.field) + g
            wit["max_balance"] = float(np.max(np.abs(balance)))
            if np.max(np.abs(balance)) > 1e-6 * scale:
                raise HypothesisViolation(
                    "<V,V> must equal -<f0',f0'>",
                    _offending_range(t, np.abs(balance) > 1e-6 * scale))
        return CaseReport(case=case, valid=True, witnesses=wit)

    # pseudospherical: characteristic type from <f0', N0'>
    h = ip_e3(data.df, data.dfield)
    speed2 = ip_e3(data.df, data.df)
    nspeed2 = ip_e3(data.dfield, data.dfield)
    scale = max(float(np.max(np.sqrt(speed2 * np.maximum(nspeed2, 0.0)))), 1e-300)
    wit = {"min_fN": float(np.min(h)), "max_fN": float(np.max(h))}
    if np.max(np.abs(h)) <= HYP_TOL * scale:
        return CaseReport(case="psph-asymptotic", valid=True, witnesses=wit)
    if np.min(np.abs(h)) <= HYP_TOL * scale:
        raise HypothesisViolation(
            "<f0', N0'> vanishes at isolated parameters; such data is "
            "rejected, not solved",
            _offending_range(t, np.abs(h) <= HYP_TOL * scale))
    disc = speed2 * nspeed2 - h ** 2  # = alpha^2 beta^2
    wit["min_disc"] = float(np.min(disc))
    wit["max_disc"] = float(np.max(disc))
    par_scale = max(float(np.max(speed2 * nspeed2)), 1e-300)
    if np.max(disc) <= 1e-10 * par_scale:
        case = "psph-principal"
    elif np.min(disc) > 1e-10 * par_scale:
        case = "psph-general"
    else:
        raise HypothesisViolation(
            "f0' and N0' must be everywhere or nowhere parallel",
            _offending_range(t, disc <= 1e-10 * par_scale))
    return CaseReport(case=case, valid=True, witnesses=wit)


# ---------------------------------------------------------------------------
# timelike CMC, non-characteristic initial curve
# ---------------------------------------------------------------------------

def _coeff_triple(c_m1, c_0, c_p1):
    """Stack lambda coefficients [c_-1, c_0, c_+1] -> (..., 3, 2, 2)."""
    return np.stack([c_m1, c_0, c_p1], axis=-3)


def potential_cmc_noncharacteristic(data: CurveData, h, t0=0.0) -> PotentialPair:
    """Boundary potential pair for timelike/spacelike initial curves.

    Reads a, b, c from the frame Maurer-Cartan form, builds the Hopf
    differentials from <f0'', N> and the mean curvature, and assembles the
    lambda-dependent connection along the curve.  The timelike branch uses
    the difference of the null-direction connections (curve along the
    antidiagonal x + y = 0), the spacelike branch the sum (curve along the
    diagonal x = y).
    """
    if h == 0:
        raise HypothesisViolation("H must be nonzero")
    report = classify(data)
    if report.case not in ("cmc-timelike", "cmc-spacelike"):
        raise HypothesisViolation(f"expected non-null CMC data, got {report.case}")
    timelike = report.case == "cmc-timelike"
    ev = data.evaluators

    def eomega(t):
        if timelike:
            v = ev.field(t)
            return ip_l3(v, v)
        d = ev.df(t)
        return ip_l3(d, d)

    def domega(t):
        if timelike:
            v, dv = ev.field(t), ev.dfield(t)
            return 2.0 * ip_l3(dv, v) / ip_l3(v, v)
        d, dd = ev.df(t), ev.d2f(t)
        return 2.0 * ip_l3(dd, d) / ip_l3(d, d)

    def frame_cols(t):
        w = np.exp(-0.5 * np.log(eomega(t)))[..., None]
        if timelike:
            e0 = ev.df(t) * w
            e1 = ev.field(t) * w
        else:
            e0 = ev.field(t) * w
            e1 = ev.df(t) * w
        return e0, e1, cross_l3(e0, e1)

    def frame_dcols(t):
        w = np.exp(-0.5 * np.log(eomega(t)))[..., None]
        dw = -0.5 * domega(t)[..., None]
        e0, e1, _ = frame_cols(t)
        if timelike:
            de0 = ev.d2f(t) * w + e0 * dw
            de1 = ev.dfield(t) * w + e1 * dw
        else:
            de0 = ev.dfield(t) * w + e0 * dw
            de1 = ev.d2f(t) * w + e1 * dw
        de2 = cross_l3(de0, e1) + cross_l3(e0, de1)
        return de0, de1, de2

    def mc(t):
        return frame_maurer_cartan(frame_cols(t), frame_dcols(t), "l3")

    def hopf(t):
        x = mc(t)
        a = np.real(x[..., 0, 0])
        b = np.real(x[..., 0, 1])
        c = np.real(x[..., 1, 0])
        om = eomega(t)
        w = np.sqrt(om)
        n = frame_cols(t)[2]
        f2n = ip_l3(ev.d2f(t), n)
        if timelike:
            q = 0.5 * f2n + 0.5 * h * om - 0.5 * w * (b - c)
            r = 0.5 * f2n + 0.5 * h * om + 0.5 * w * (b - c)
        else:
            q = 0.5 * f2n - 0.5 * h * om - 0.5 * w * (b + c)
            r = 0.5 * f2n - 0.5 * h * om + 0.5 * w * (b + c)
        return a, q, r, w

    def a_hat(t):
        t = np.asarray(t, dtype=float)
        a, q, r, w = hopf(t)
        z = np.zeros_like(a)
        c0 = np.stack([np.stack([a, z], -1), np.stack([z, -a], -1)], -2)
        if timelike:
            c1 = np.stack([np.stack([z, -q / w], -1),
                           np.stack([0.5 * h * w, z], -1)], -2)
            cm1 = np.stack([np.stack([z, 0.5 * h * w], -1),
                            np.stack([-r / w, z], -1)], -2)
        else:
            c1 = np.stack([np.stack([z, -q / w], -1),
                           np.stack([0.5 * h * w, z], -1)], -2)
            cm1 = np.stack([np.stack([z, -0.5 * h * w], -1),
                            np.stack([r / w, z], -1)], -2)
        return _coeff_triple(cm1, c0, c1).astype(complex)

    if timelike:
        def chi(x):
            return a_hat(x)

        def psi(y):
            return -a_hat(-np.asarray(y, dtype=float))
        locus = "antidiagonal"
        basepoint = (float(t0), -float(t0))
    else:
        def chi(x):
            return a_hat(x)

        def psi(y):
            return a_hat(np.asarray(y, dtype=float))
        locus = "diagonal"
        basepoint = (float(t0), float(t0))

    cols0 = frame_cols(np.asarray([t0]))
    lmat = np.stack([c[0] for c in cols0], axis=-1)
    iso = Isometry(lmat, ev.f0(np.asarray([t0]))[0], "l3")
    # regularity: [chi_1]_21 = H e^{omega/2} / 2 never vanishes for H != 0
    meta = {
        "case": report.case, "H": float(h), "t0": float(t0),
        "curve_locus": locus, "grid_basepoint": basepoint,
        "isometry": iso, "data": data, "classification": report,
        "frame_mc": mc, "frame_cols": frame_cols, "eomega": eomega,
    }
    return PotentialPair(chi=chi, psi=psi, kind="cmc", realform="split",
                         regular=True, weakly_regular=True, meta=meta)


def potential_revolution_timelike(rho, h) -> PotentialPair:
    """Constant boundary pair of the timelike-axis revolution family.

    A_hat = 1/2 [[0, (1+rho H) lam - H rho / lam], [H rho lam - (1+rho H)/lam, 0]];
    chi = A_hat dx, psi = A_hat dy (spacelike circle, curve along x = y).
    """
    if rho <= 0 or h == 0:
        raise HypothesisViolation("need rho > 0 and H != 0")
    c1 = 0.5 * np.array([[0.0, 1.0 + rho * h], [h * rho, 0.0]])
    cm1 = 0.5 * np.array([[0.0, -h * rho], [-(1.0 + rho * h), 0.0]])
    c0 = np.zeros((2, 2))
    triple = _coeff_triple(cm1, c0, c1).astype(complex)

    def const_fn(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(triple, t.shape + (3, 2, 2))

    from .curves import ingest_curve
    data = ingest_curve(f"circle:rho={rho}")
    meta = {
        "case": "cmc-spacelike", "H": float(h), "t0": 0.0,
        "curve_locus": "diagonal", "grid_basepoint": (0.0, 0.0),
        "isometry": Isometry(np.eye(3), np.array([0.0, 0.0, rho]), "l3"),
        "data": data, "revolution": "timelike-axis",
        "params": {"rho": float(rho)},
    }
    return PotentialPair(chi=const_fn, psi=const_fn, kind="cmc",
                         realform="split", regular=True, weakly_regular=True,
                         meta=meta)


# ---------------------------------------------------------------------------
# timelike CMC, null initial curve
# ---------------------------------------------------------------------------

def potential_cmc_null(data: CurveData, alpha, beta, t0=0.0) -> PotentialPair:
    """Potential pair for null geometric Cauchy data plus free (alpha, beta).

    chi multiplies the off-diagonal (null-direction) part of the frame
    Maurer-Cartan form by lambda; psi = [[0, alpha],[beta, 0]] / lambda.
    The mean curvature the data is compatible with is the invariant
    H_implied(t) = 2 (F0^-1 F0')_21 e^{-omega/2}; the solver validates it
    against the requested H (characteristic data cannot be free).
    """
    report = classify(data)
    if report.case != "cmc-null":
        raise HypothesisViolation(f"expected null CMC data, got {report.case}")
    a0 = complex(np.asarray(alpha(np.asarray([float(t0)])), dtype=complex).ravel()[0])
    if abs(a0) < 1e-12:
        raise HypothesisViolation("alpha(0) must be nonzero")
    eps2 = float(report.witnesses["eps2"])
    ev = data.evaluators

    def eomega(t):
        return 2.0 * eps2 * ip_l3(ev.df(t), ev.field(t))

    def frame_cols(t):
        w = np.exp(-0.5 * np.log(eomega(t)))[..., None]
        d = ev.df(t)
        v = eps2 * ev.field(t)
        e0 = (d - v) * w
        e1 = (d + v) * w
        e2 = 2.0 * eps2 * cross_l3(ev.df(t), ev.field(t)) * w ** 2
        return e0, e1, e2

    def frame_dcols(t):
        w = np.exp(-0.5 * np.log(eomega(t)))[..., None]
        d, dd = ev.df(t), ev.d2f(t)
        v, dv = eps2 * ev.field(t), eps2 * ev.dfield(t)
        dom = ((ip_l3(dd, ev.field(t)) + ip_l3(d, ev.dfield(t)))
               / ip_l3(d, ev.field(t)))[..., None]
        de0 = (dd - dv) * w - 0.5 * dom * (d - v) * w
        de1 = (dd + dv) * w - 0.5 * dom * (d + v) * w
        cr = cross_l3(ev.df(t), ev.field(t))
        dcr = cross_l3(dd, ev.field(t)) + cross_l3(ev.df(t), ev.dfield(t))
        de2 = 2.0 * eps2 * (dcr * w ** 2 - dom * cr * w ** 2)
        return de0, de1, de2

    def mc(t):
        return frame_maurer_cartan(frame_cols(t), frame_dcols(t), "l3")

    def chi(x):
        x = np.asarray(x, dtype=float)
        m = mc(x)
        diag = np.zeros_like(m)
        diag[..., 0, 0] = m[..., 0, 0]
        diag[..., 1, 1] = m[..., 1, 1]
        off = m - diag
        zero = np.zeros_like(m)
        return _coeff_triple(zero, diag, off)

    def psi(y):
        y = np.asarray(y, dtype=float)
        av = np.asarray(alpha(y), dtype=complex)
        bv = np.asarray(beta(y), dtype=complex)
        av = np.broadcast_to(av, y.shape)
        bv = np.broadcast_to(bv, y.shape)
        z = np.zeros_like(av)
        cm1 = np.stack([np.stack([z, av], -1), np.stack([bv, z], -1)], -2)
        zero = np.zeros_like(cm1)
        return _coeff_triple(cm1, zero, zero)

    def h_implied(t):
        t = np.asarray(t, dtype=float)
        m = mc(t)
        return 2.0 * np.real(m[..., 1, 0]) / np.sqrt(eomega(t))

    cols0 = frame_cols(np.asarray([t0]))
    lmat = np.stack([c[0] for c in cols0], axis=-1)
    iso = Isometry(lmat, ev.f0(np.asarray([t0]))[0], "l3")
    regular = bool(np.min(np.abs(h_implied(data.t))) > 1e-12)
    meta = {
        "case": "cmc-null", "t0": float(t0), "eps2": eps2,
        "curve_locus": "xaxis", "grid_basepoint": (float(t0), 0.0),
        "isometry": iso, "data": data, "classification": report,
        "h_implied": h_implied, "alpha": alpha, "beta": beta,
        "frame_mc": mc, "eomega": eomega,
    }
    return PotentialPair(chi=chi, psi=psi, kind="cmc", realform="split",
                         regular=regular, weakly_regular=regular, meta=meta)


def null_frame_decomposition(data: CurveData):
    """(s, t, theta) of null data in the shared-spatial-angle form, where
    f0' = s/2 (e0 + cos(theta) e1 + sin(theta) e2) and V = t/2 (-e0 + ...).

    Only valid for data whose two null legs share their spatial direction;
    used as an independent oracle for the frame-lift route.
    """
    df = data.df
    v = data.field
    s = 2.0 * df[:, 0]
    tt = -2.0 * v[:, 0]
    theta_f = np.arctan2(df[:, 2], df[:, 1])
    theta_v = np.arctan2(v[:, 2], v[:, 1])
    if np.max(np.abs(np.unwrap(theta_f) - np.unwrap(theta_v))) > 1e-8:
        raise HypothesisViolation("data is not of the shared-angle form")
    return s, tt, np.unwrap(theta_f)


# ---------------------------------------------------------------------------
# pseudospherical, non-characteristic initial curve
# ---------------------------------------------------------------------------

def _psph_scalars(ev, flip, t):
    """alpha, beta, theta, theta_v (and the frame vectors) along the curve."""
    df = ev.df(t)
    d2f = ev.d2f(t)
    n0 = flip * ev.field(t)
    dn = flip * ev.dfield(t)
    d2n = flip * ev.d2field(t)
    fu2 = ip_e3(df, df)
    nu2 = ip_e3(dn, dn)
    fn = ip_e3(df, dn)
    disc2 = fu2 * nu2 - fn ** 2
    parallel = np.max(disc2) <= 1e-10 * max(float(np.max(fu2 * nu2)), 1e-300)
    if parallel:
        beta = np.sqrt(fu2 + nu2)
        alpha = np.zeros_like(beta)
        sin_t = np.sqrt(fu2) / beta
        cos_t = np.sqrt(nu2) / beta
        theta = np.arctan2(sin_t, cos_t)
        theta_v = ip_e3(d2f, cross_e3(df, n0)) / fu2
        e2 = -df / np.sqrt(fu2)[..., None]
        e1 = cross_e3(e2, n0)
    else:
        num = nu2 - fu2
        den = 2.0 * fn
        z = num / den
        dnum = 2.0 * (ip_e3(d2n, dn) - ip_e3(d2f, df))
        dden = 2.0 * (ip_e3(d2f, dn) + ip_e3(df, d2n))
        dz = (dnum * den - num * dden) / den ** 2
        rad = np.sqrt(4.0 * fn ** 2 + num ** 2)
        alpha = np.sqrt(np.maximum(fu2 + nu2 - rad, 0.0) / 2.0)
        beta = np.sqrt((fu2 + nu2 + rad) / 2.0)
        phi = np.arctan2(1.0, z)
        theta = 0.5 * phi
        y_t = (np.sin(theta) * np.cos(theta) * (ip_e3(d2f, df) - ip_e3(dn, d2n))
               + np.cos(theta) ** 2 * ip_e3(df, d2n)
               - np.sin(theta) ** 2 * ip_e3(dn, d2f))
        theta_v = alpha * dz / (2.0 * beta * (z ** 2 + 1.0)) - y_t / (alpha * beta)
        e1 = (np.cos(theta)[..., None] * df - np.sin(theta)[..., None] * dn) / alpha[..., None]
        e2 = -(np.sin(theta)[..., None] * df + np.cos(theta)[..., None] * dn) / beta[..., None]
    return alpha, beta, theta, theta_v, e1, e2, n0


def potential_psph_noncharacteristic(data: CurveData, t0=0.0) -> PotentialPair:
    """Weakly regular potential pair from non-asymptotic curve-and-normal data.

    Splits into the principal branch (f0' parallel N0') with closed-form
    angle, and the general branch; the normal sign is flipped when needed so
    <f0', N0'> > 0, and the flip is recorded.
    """
    report = classify(data)
    if report.case not in ("psph-principal", "psph-general"):
        raise HypothesisViolation(f"expected non-characteristic data, got {report.case}")
    flip = -1.0 if report.witnesses["max_fN"] < 0 else 1.0
    ev = data.evaluators

    def a_hat(t):
        t = np.asarray(t, dtype=float)
        alpha, beta, theta, theta_v, _, _, _ = _psph_scalars(ev, flip, t)
        em = np.exp(-1j * theta)
        ep = np.exp(1j * theta)
        z = np.zeros_like(alpha, dtype=complex)
        half_i = 0.5j
        c0 = np.stack([np.stack([-half_i * theta_v, z], -1),
                       np.stack([z, half_i * theta_v], -1)], -2)
        w1 = half_i * 0.5 * (beta + alpha)
        wm = half_i * 0.5 * (beta - alpha)
        c1 = np.stack([np.stack([z, w1 * em], -1),
                       np.stack([w1 * ep, z], -1)], -2)
        cm1 = np.stack([np.stack([z, wm * ep], -1),
                        np.stack([wm * em, z], -1)], -2)
        return _coeff_triple(cm1, c0, c1)

    def chi(x):
        return a_hat(x)

    def psi(y):
        return -a_hat(-np.asarray(y, dtype=float))

    _, _, _, _, e1, e2, n0 = _psph_scalars(ev, flip, np.asarray([t0]))
    lmat = np.stack([e1[0], e2[0], n0[0]], axis=-1)
    iso = Isometry(lmat, ev.f0(np.asarray([t0]))[0], "e3")
    meta = {
        "case": report.case, "t0": float(t0),
        "curve_locus": "antidiagonal", "grid_basepoint": (float(t0), -float(t0)),
        "isometry": iso, "data": data, "classification": report,
        "normal_flipped": flip < 0, "scalars": lambda t: _psph_scalars(ev, flip, t),
    }
    return PotentialPair(chi=chi, psi=psi, kind="psph", realform="unitary",
                         regular=True, weakly_regular=True, meta=meta)


# ---------------------------------------------------------------------------
# pseudospherical, characteristic (asymptotic) initial curve
# ---------------------------------------------------------------------------

def potential_psph_characteristic(data: CurveData, alpha, t0=0.0) -> PotentialPair:
    """Potential pair for asymptotic-curve data plus a free complex alpha(y).

    The curve frame satisfies F0^-1 F0' = [[ia, ib],[ib, -ia]] with real a, b
    exactly when the data is characteristic; chi inserts lambda on the
    off-diagonal part and psi = [[0, alpha],[-conj(alpha), 0]] / lambda.
    The parameterization must satisfy 2 b = |f0'| for the surface to contain
    the curve with its given parameter.
    """
    report = classify(data)
    if report.case != "psph-asymptotic":
        raise HypothesisViolation(f"expected characteristic data, got {report.case}")
    ev = data.evaluators

    def frame_cols(t):
        df = ev.df(t)
        speed = np.sqrt(ip_e3(df, df))[..., None]
        e1 = df / speed
        n0 = ev.field(t)
        e2 = cross_e3(n0, e1)
        return e1, e2, n0

    def frame_dcols(t):
        df, d2f = ev.df(t), ev.d2f(t)
        speed2 = ip_e3(df, df)
        e1 = df / np.sqrt(speed2)[..., None]
        de1 = (d2f - (ip_e3(d2f, e1))[..., None] * e1) / np.sqrt(speed2)[..., None]
        n0, dn = ev.field(t), ev.dfield(t)
        de2 = cross_e3(dn, e1) + cross_e3(n0, de1)
        return de1, de2, dn

    def mc(t):
        return frame_maurer_cartan(frame_cols(t), frame_dcols(t), "e3")

    # structure check: the e2 component must vanish (characteristic data)
    x_all = mc(data.t)
    struct = np.abs(x_all[..., 1, 0] - x_all[..., 0, 1])
    scale = max(float(np.max(np.abs(x_all))), 1e-300)
    if np.max(struct) > 1e-6 * scale:
        raise HypothesisViolation(
            "frame derivative is not of the characteristic form; "
            "data is not asymptotic",
            _offending_range(data.t, struct > 1e-6 * scale))

    def ab(t):
        x = mc(t)
        a = np.real(-1j * x[..., 0, 0])
        b = np.real((x[..., 0, 1] + x[..., 1, 0]) / 2j)
        return a, b

    # parameterization compatibility: 2 b(t) = |f0'(t)| (asymptotic curves of
    # K = -1 surfaces twist at unit rate per arclength); recorded here, and
    # enforced when the pair is actually solved
    a_s, b_s = ab(data.t)
    speed = np.sqrt(ip_e3(data.df, data.df))
    mismatch = np.abs(2.0 * b_s - speed)
    speed_compatible = bool(
        np.max(mismatch) <= 1e-6 * max(float(np.max(speed)), 1e-300))

    a0v = np.asarray(alpha(data.t), dtype=complex)
    if np.min(np.abs(a0v)) < 1e-12:
        raise HypothesisViolation("alpha must be nonvanishing")

    def chi(x):
        x = np.asarray(x, dtype=float)
        a, b = ab(x)
        z = np.zeros_like(a, dtype=complex)
        c0 = np.stack([np.stack([1j * a, z], -1), np.stack([z, -1j * a], -1)], -2)
        c1 = np.stack([np.stack([z, 1j * b], -1), np.stack([1j * b, z], -1)], -2)
        return _coeff_triple(np.zeros_like(c0), c0, c1)

    def psi(y):
        y = np.asarray(y, dtype=float)
        av = np.broadcast_to(np.asarray(alpha(y), dtype=complex), y.shape)
        z = np.zeros_like(av)
        cm1 = np.stack([np.stack([z, av], -1),
                        np.stack([-np.conj(av), z], -1)], -2)
        zero = np.zeros_like(cm1)
        return _coeff_triple(cm1, zero, zero)

    cols0 = frame_cols(np.asarray([t0]))
    lmat = np.stack([c[0] for c in cols0], axis=-1)
    iso = Isometry(lmat, ev.f0(np.asarray([t0]))[0], "e3")
    meta = {
        "case": "psph-asymptotic", "t0": float(t0),
        "curve_locus": "xaxis", "grid_basepoint": (float(t0), 0.0),
        "isometry": iso, "data": data, "classification": report,
        "alpha": alpha, "frame_mc": mc,
        "speed_compatible": speed_compatible,
        "speed_mismatch": float(np.max(mismatch)),
    }
    return PotentialPair(chi=chi, psi=psi, kind="psph", realform="unitary",
                         regular=True, weakly_regular=True, meta=meta)
