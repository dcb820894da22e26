"""From potential pairs to admissible frame fields and surfaces.

A potential pair is two loop-algebra-valued 1-forms chi(x) dx, psi(y) dy
with lambda-support in {-1, 0, 1} (chi may only reach +1, psi only -1).
The construction integrates F_plus along x and F_minus along y from the
base point, splits Phi = F_plus^-1 F_minus pointwise on the grid by the
left Birkhoff factorization Phi = H_minus H_plus, and takes the admissible
frame F = F_minus H_plus^-1 = F_minus W.  Surfaces come out of the frame
by lambda-differentiation (Sym formulas); both Sym formulas are invariant
under right multiplication by lambda-independent diagonal gauges, which is
checked by tests and exploited: gauges are only needed for the metric
diagnostics (theta, |f_x|, |f_y|, conformal factor, epsilon signs).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .birkhoff import birkhoff_left_batched
from .loops import (
    TwistedLoop, circle_nodes, coeffs_to_samples, samples_to_coeffs,
)
from .minkalg import E2 as _E2_MAT, U3 as _U3_MAT, matrix_to_e3, matrix_to_l3
from .surface import SurfaceMesh

__all__ = [
    "PotentialPair", "FrameField", "CmcGauge", "PsphGauge",
    "RegularityFailure", "WeakRegularityFailure",
    "integrate_potential", "build_frame_field", "maurer_cartan_coeffs",
    "gauge_cmc", "gauge_psph", "sym_cmc", "sym_psph", "steps_for",
]

REG_TOL = 1e-8
SING_TOL = 1e-6


class RegularityFailure(Exception):
    pass


class WeakRegularityFailure(Exception):
    pass


@dataclass(frozen=True)
class PotentialPair:
    """Boundary potential pair (chi, psi).

    chi/psi: vectorized callables t -> (..., 3, 2, 2), the loop coefficients
    [c_-1, c_0, c_+1] at parameter t.  kind is "cmc" (split form) or "psph"
    (unitary form).  meta carries the stored ambient isometry, the curve
    locus in the (x,y) grid and construction witnesses.
    """

    chi: object
    psi: object
    kind: str
    realform: str
    regular: bool
    weakly_regular: bool
    meta: dict = dataclass_field(default_factory=dict)

    def chi_coeffs(self, t):
        return np.asarray(self.chi(np.asarray(t, dtype=float)))

    def psi_coeffs(self, t):
        return np.asarray(self.psi(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class FrameField:
    """Admissible-frame loops on a grid, stored by Laurent coefficients."""

    x: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray       # (nx, ny, 2*nf+1, 2, 2)
    mask: np.ndarray         # True where the Birkhoff splitting succeeded
    hplus0: np.ndarray       # H_plus at lambda = 0 per node
    residual: np.ndarray
    condition: np.ndarray
    kind: str
    realform: str
    m: int
    gauge: np.ndarray | None = None   # diagonal entries of the applied gauge
    meta: dict = dataclass_field(default_factory=dict)

    @property
    def nf(self) -> int:
        return (self.coeffs.shape[2] - 1) // 2

    def frame_at(self, i, j) -> TwistedLoop:
        return TwistedLoop(coeffs_to_samples(self.coeffs[i, j], self.m),
                           realform=self.realform)

    def with_coeffs(self, coeffs, gauge=None):
        return FrameField(x=self.x, y=self.y, coeffs=coeffs, mask=self.mask,
                          hplus0=self.hplus0, residual=self.residual,
                          condition=self.condition, kind=self.kind,
                          realform=self.realform, m=self.m,
                          gauge=gauge if gauge is not None else self.gauge,
                          meta=self.meta)


def steps_for(length, n_targets, steps_per_unit=800, min_steps=400):
    return int(max(min_steps, 4 * n_targets, np.ceil(steps_per_unit * length)))


def _coeff_to_samples_at(coeffs, lam):
    """[c_-1, c_0, c_1] (...,3,2,2) -> A(lambda) at the circle nodes."""
    return (coeffs[..., 0, None, :, :] / lam[:, None, None]
            + coeffs[..., 1, None, :, :]
            + coeffs[..., 2, None, :, :] * lam[:, None, None])


def integrate_potential(coeff_fn, t0, targets, m, steps=None,
                        steps_per_unit=800, det_drift_limit=1e-6):
    """Solve F^-1 dF = A(t) dt, F(t0) = I, per circle node.

    Classical fixed-step RK4 on each lambda sample with per-step determinant
    renormalization.  targets is an increasing array of parameter values at
    which the loop is recorded; t0 must lie within [targets[0], targets[-1]]
    (it is inserted as an integration node).  Returns (len(targets), M, 2, 2).
    """
    targets = np.asarray(targets, dtype=float)
    if len(targets) < 1:
        raise ValueError("no integration targets")
    lam = circle_nodes(m)
    length = max(targets[-1] - targets[0], 1e-15)
    if steps is None:
        steps = steps_for(length, len(targets), steps_per_unit)

    # integration nodes: targets plus t0, with uniform substeps per cell
    nodes = np.unique(np.concatenate([targets, [t0]]))
    if t0 < targets[0] - 1e-12 or t0 > targets[-1] + 1e-12:
        nodes = np.unique(np.concatenate([nodes, [t0]]))
    per_cell = max(1, int(np.ceil(steps / max(len(nodes) - 1, 1))))

    out = {}

    def sweep(direction):
        idx0 = int(np.searchsorted(nodes, t0))
        if direction > 0:
            path = nodes[idx0:]
        else:
            path = nodes[:idx0 + 1][::-1]
        if len(path) == 0 or abs(path[0] - t0) > 1e-12:
            path = np.concatenate([[t0], path])
        f = np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).copy()
        out[path[0]] = f.copy()
        for a, b in zip(path[:-1], path[1:]):
            h = (b - a) / per_cell
            ts = a + h * np.arange(per_cell)
            stage_t = np.concatenate([ts, ts + 0.5 * h, ts + h])
            sc = np.asarray(coeff_fn(stage_t))
            a_start = _coeff_to_samples_at(sc[:per_cell], lam)
            a_mid = _coeff_to_samples_at(sc[per_cell:2 * per_cell], lam)
            a_end = _coeff_to_samples_at(sc[2 * per_cell:], lam)
            for s in range(per_cell):
                k1 = f @ a_start[s]
                k2 = (f + 0.5 * h * k1) @ a_mid[s]
                k3 = (f + 0.5 * h * k2) @ a_mid[s]
                k4 = (f + h * k3) @ a_end[s]
                f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                det = np.linalg.det(f)
                if np.abs(det - 1.0).max() > det_drift_limit:
                    raise FloatingPointError(
                        f"determinant drift {np.abs(det - 1.0).max():.2e} "
                        f"exceeds {det_drift_limit:g}; reduce the step")
                f = f / np.sqrt(det)[:, None, None]
            out[b] = f.copy()

    sweep(+1)
    sweep(-1)
    return np.stack([out[t] for t in targets])


def build_frame_field(pair: PotentialPair, x, y, n=16, m=128, section=None,
                      steps_per_unit=800, chunk=2048) -> FrameField:
    """Integrate the pair and split pointwise: F = F_minus * H_plus^-1.

    On the initial curve the splitting is trivial (Phi = I there for
    boundary-potential pairs), so the frame restricts to the curve frame.
    Nodes where the split form leaves the big cell are masked, never filled.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, y0 = pair.meta.get("grid_basepoint", (0.0, 0.0))
    realform = pair.realform

    fplus = integrate_potential(pair.chi_coeffs, x0, x, m,
                                steps_per_unit=steps_per_unit)
    fminus = integrate_potential(pair.psi_coeffs, y0, y, m,
                                 steps_per_unit=steps_per_unit)
    fplus_inv = np.linalg.inv(fplus)

    nx, ny = len(x), len(y)
    k = n if section is None else int(section)
    nf = n
    coeffs = np.empty((nx * ny, 2 * nf + 1, 2, 2), dtype=complex)
    mask = np.zeros(nx * ny, dtype=bool)
    hplus0 = np.empty((nx * ny, 2, 2), dtype=complex)
    residual = np.empty(nx * ny)
    condition = np.empty(nx * ny)

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    for start in range(0, nx * ny, chunk):
        sl = slice(start, min(start + chunk, nx * ny))
        phi_s = fplus_inv[ii[sl]] @ fminus[jj[sl]]
        phi_c = samples_to_coeffs(phi_s, n)
        res = birkhoff_left_batched(phi_c, m, section=k, realform=realform,
                                    twisted=True)
        w_s = coeffs_to_samples(res["w"], m)
        frame_s = fminus[jj[sl]] @ w_s
        coeffs[sl] = samples_to_coeffs(frame_s, nf)
        mask[sl] = res["ok"]
        # H_plus(0) = W(0)^-1, but use the projected plus factor directly
        hplus0[sl] = res["hplus0"]
        residual[sl] = res["residual"]
        condition[sl] = res["condition"]

    coeffs = coeffs.reshape(nx, ny, 2 * nf + 1, 2, 2)
    bad = ~mask
    if bad.any():
        coeffs[bad.reshape(nx, ny)] = np.nan
    return FrameField(
        x=x, y=y, coeffs=coeffs, mask=mask.reshape(nx, ny),
        hplus0=hplus0.reshape(nx, ny, 2, 2),
        residual=residual.reshape(nx, ny),
        condition=condition.reshape(nx, ny),
        kind=pair.kind, realform=realform, m=m,
        meta={"pair_meta": pair.meta, "n": n, "section": k,
              "basepoint": (x0, y0)},
    )


def maurer_cartan_coeffs(pair: PotentialPair, frames: FrameField):
    """Per-node (A_1, A_-1) of the admissible frame.

    A_1(x,y) = chi_1(x); A_-1(x,y) = H_plus(0) psi_-1(y) H_plus(0)^-1 with
    the stored plus factor of the splitting.
    """
    chi_c = pair.chi_coeffs(frames.x)          # (nx, 3, 2, 2)
    psi_c = pair.psi_coeffs(frames.y)          # (ny, 3, 2, 2)
    a1 = np.broadcast_to(chi_c[:, None, 2], frames.hplus0.shape).copy()
    h0 = frames.hplus0
    ok = frames.mask
    h0_safe = np.where(ok[..., None, None], h0, np.eye(2, dtype=complex))
    am1 = h0_safe @ psi_c[None, :, 0] @ np.linalg.inv(h0_safe)
    am1 = np.where(ok[..., None, None], am1, np.nan)
    a1 = np.where(ok[..., None, None], a1, np.nan)
    return a1, am1


@dataclass(frozen=True)
class CmcGauge:
    rho: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray
    conformal: np.ndarray     # epsilon * e^omega = -4 c1 b2 / H^2
    regular: np.ndarray       # regularity mask (c1, b2 bounded away from 0)


def gauge_cmc(frames: FrameField, a1, am1, h):
    """Diagonal gauge T = diag(rho, 1/rho), rho = |b2/c1|^(1/4).

    Returns (gauged frame field, CmcGauge).  Nodes where c1 or b2 vanish
    within tolerance are flagged non-immersed in the regularity mask; if no
    node at all is regular the data was degenerate and RegularityFailure is
    raised.
    """
    c1 = np.real(a1[..., 1, 0])
    b2 = np.real(am1[..., 0, 1])
    scale = max(np.nanmax(np.abs(c1), initial=0.0),
                np.nanmax(np.abs(b2), initial=0.0), 1e-300)
    regular = (np.abs(c1) > REG_TOL * scale) & (np.abs(b2) > REG_TOL * scale)
    regular &= frames.mask
    if not regular.any():
        raise RegularityFailure("no regular nodes: c1 or b2 vanish everywhere")
    with np.errstate(all="ignore"):
        rho = np.abs(b2 / np.where(regular, c1, 1.0)) ** 0.25
    rho = np.where(regular, rho, 1.0)
    gauge = np.stack([rho, 1.0 / rho], axis=-1)
    tmat = np.zeros(rho.shape + (2, 2), dtype=complex)
    tmat[..., 0, 0] = rho
    tmat[..., 1, 1] = 1.0 / rho
    coeffs = frames.coeffs @ tmat[:, :, None, :, :]
    conf = -4.0 * c1 * b2 / h ** 2
    report = CmcGauge(rho=rho, eps1=np.sign(c1), eps2=-np.sign(b2),
                      conformal=conf, regular=regular)
    return frames.with_coeffs(coeffs, gauge=gauge), report


@dataclass(frozen=True)
class PsphGauge:
    theta: np.ndarray         # half the asymptotic angle, phi = 2 theta
    phi: np.ndarray
    fx_abs: np.ndarray        # |f_x| = 2 |[A_1]_12|
    fy_abs: np.ndarray
    mu: np.ndarray
    weakly_regular: np.ndarray
    singular: np.ndarray      # sin(phi) ~ 0: frame fine, surface singular


def gauge_psph(frames: FrameField, a1, am1):
    """Diagonal gauge T = diag(e^{i mu}, e^{-i mu}) normalizing the frame.

    Brings the Maurer-Cartan form to the Darboux shape with 2*theta in
    [0, pi) on the regular set; |f_x|, |f_y|, theta are recorded per node.
    """
    p = a1[..., 0, 1]
    q = am1[..., 0, 1]
    scale = max(np.nanmax(np.abs(p), initial=0.0),
                np.nanmax(np.abs(q), initial=0.0), 1e-300)
    weak = (np.abs(p) > REG_TOL * scale) & (np.abs(q) > REG_TOL * scale)
    weak &= frames.mask
    if not weak.any():
        raise WeakRegularityFailure(
            "no weakly regular nodes: [A1]_12 or [A-1]_12 vanish everywhere")
    with np.errstate(all="ignore"):
        phi = np.angle(-q / np.where(weak, p, 1.0))
    phi = np.where(weak, phi, np.nan)
    theta = 0.5 * phi
    fx = 2.0 * np.abs(p)
    fy = 2.0 * np.abs(q)
    singular = ~weak | (np.abs(np.sin(phi)) < SING_TOL)
    mu = 0.5 * (np.angle(p) - 0.5 * np.pi + theta)
    tmat = np.zeros(phi.shape + (2, 2), dtype=complex)
    ew = np.exp(1j * np.where(weak, mu, 0.0))
    tmat[..., 0, 0] = ew
    tmat[..., 1, 1] = 1.0 / ew
    coeffs = frames.coeffs @ tmat[:, :, None, :, :]
    gauge = np.stack([ew, 1.0 / ew], axis=-1)
    report = PsphGauge(theta=theta, phi=phi, fx_abs=fx, fy_abs=fy, mu=mu,
                       weakly_regular=weak, singular=singular)
    return frames.with_coeffs(coeffs, gauge=gauge), report


def _eval_frame_and_logderiv(frames: FrameField, lam0):
    c = frames.coeffs
    nf = frames.nf
    js = np.arange(-nf, nf + 1, dtype=float)
    powers = np.asarray(lam0, dtype=complex) ** js
    f = np.einsum("j,xyjab->xyab", powers, c)
    d = np.einsum("j,xyjab->xyab", js * powers, c)
    return f, d


def _safe_inverse(f, ok):
    f_safe = np.where(ok[..., None, None] & np.isfinite(f).all(axis=(-2, -1))[..., None, None],
                      f, np.eye(2, dtype=complex))
    with np.errstate(all="ignore"):
        det = np.linalg.det(f_safe)
    good = np.abs(det - 1.0) < 1e-4
    f_safe = np.where(good[..., None, None], f_safe, np.eye(2, dtype=complex))
    return np.linalg.inv(f_safe), ok & good


def sym_cmc(frames: FrameField, lam0, h, isometry=None) -> SurfaceMesh:
    """Timelike CMC immersion from the frame field.

    f = (S_lam0(F(z)) - S_lam0(F(p))) / (2H) with S(G) = 2 lam dG/dlam G^-1
    - Ad_G e2; at the base point F = I so S(F(p)) = -e2 exactly.  The normal
    is Ad_{F(lam0)} e2.  Independent of diagonal lambda-constant gauges.
    """
    if lam0 == 0 or abs(float(np.imag(lam0))) > 0:
        raise ValueError("lambda_0 must be real and nonzero")
    if h == 0:
        raise ValueError("H must be nonzero")
    f, d = _eval_frame_and_logderiv(frames, lam0)
    finv, ok = _safe_inverse(f, frames.mask)
    s_mat = 2.0 * d @ finv - f @ _E2_MAT.astype(complex) @ finv
    s_vec = matrix_to_l3(s_mat)
    base = np.array([0.0, 0.0, -1.0])  # S at the base point is -e2
    positions = (s_vec - base) / (2.0 * h)
    normals = matrix_to_l3(f @ _E2_MAT.astype(complex) @ finv)
    return _assemble_mesh(frames, positions, normals, ok, "l3", lam0,
                          {"H": h}, isometry)


def sym_psph(frames: FrameField, lam0, isometry=None) -> SurfaceMesh:
    """Pseudospherical immersion f = (lam dF/dlam) F^-1 at lam0; N = Ad_F e3."""
    if lam0 == 0 or abs(float(np.imag(lam0))) > 0:
        raise ValueError("lambda_0 must be real and nonzero")
    f, d = _eval_frame_and_logderiv(frames, lam0)
    finv, ok = _safe_inverse(f, frames.mask)
    positions = matrix_to_e3(d @ finv)
    normals = matrix_to_e3(f @ _U3_MAT @ finv)
    return _assemble_mesh(frames, positions, normals, ok, "e3", lam0,
                          {"K": -1.0}, isometry)


def _assemble_mesh(frames, positions, normals, ok, form, lam0, meta, isometry):
    from .minkalg import ip as _form_ip
    norm = np.sqrt(np.abs(_form_ip(normals, normals, form)))
    defect = float(np.nanmax(np.abs(norm[ok] - 1.0), initial=0.0))
    normals = normals / np.where(norm > 0, norm, 1.0)[..., None]
    if isometry is not None:
        positions = isometry.apply(positions)
        normals = isometry.apply_linear(normals)
    bad = ~ok
    if bad.any():
        positions = np.where(bad[..., None], np.nan, positions)
        normals = np.where(bad[..., None], np.nan, normals)
    meta = dict(meta)
    meta.update({"lambda0": float(lam0), "kind": frames.kind,
                 "normal_defect": defect, "n": frames.meta.get("n"),
                 "birkhoff_residual_max": float(np.max(frames.residual[ok], initial=0.0))})
    return SurfaceMesh(x=frames.x, y=frames.y, positions=positions,
                       normals=normals, mask=ok, form=form, kind=frames.kind,
                       meta=meta)
