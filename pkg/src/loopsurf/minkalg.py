"""Lie-algebra kernels for the two ambient geometries.

Lorentz-Minkowski 3-space L3 (signature -,+,+) is identified with sl(2,R)
through the basis

    e0 = [[0,-1],[1,0]],  e1 = [[0,1],[1,0]],  e2 = [[-1,0],[0,1]],

orthonormal for <X,Y> = (1/2) tr(XY) with <e0,e0> = -1.  Euclidean 3-space
E3 is identified with su(2) through

    u1 = (1/2)[[0,i],[i,0]],  u2 = (1/2)[[0,-1],[1,0]],  u3 = (1/2)[[i,0],[0,-i]],

orthonormal for <X,Y> = -2 tr(XY).  Vectors are plain (...,3) float arrays;
all functions broadcast over leading axes.

The cross products are fixed by <u x v, w> = det[u v w] (columns), so
e0 x e1 = e2 in L3 and the usual right-handed cross in E3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "E0", "E1", "E2", "U1", "U2", "U3", "L3_BASIS", "E3_BASIS",
    "ip_l3", "ip_e3", "ip", "cross_l3", "cross_e3", "cross",
    "l3_to_matrix", "matrix_to_l3", "e3_to_matrix", "matrix_to_e3",
    "vector_to_matrix", "matrix_to_vector",
    "GroupElement2", "ad", "ad_matrix",
    "mu_l3", "mu_e3", "ad_rep_l3", "ad_rep_e3",
    "frame_orthonormality_defect", "lift_frame_path",
    "Isometry",
]

E0 = np.array([[0.0, -1.0], [1.0, 0.0]])
E1 = np.array([[0.0, 1.0], [1.0, 0.0]])
E2 = np.array([[-1.0, 0.0], [0.0, 1.0]])
L3_BASIS = np.stack([E0, E1, E2]).astype(complex)

U1 = 0.5 * np.array([[0.0, 1j], [1j, 0.0]])
U2 = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)
U3 = 0.5 * np.array([[1j, 0.0], [0.0, -1j]])
E3_BASIS = np.stack([U1, U2, U3])

_ETA = np.array([-1.0, 1.0, 1.0])

# Orthonormal-frame ingestion thresholds: correct by Gram-Schmidt below the
# loose bound, reject beyond it.
FRAME_TOL = 1e-8
FRAME_CORRECTABLE = 1e-6


def ip_l3(u, v):
    """Minkowski inner product -u0*v0 + u1*v1 + u2*v2."""
    u = np.asarray(u)
    v = np.asarray(v)
    return -u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def ip_e3(u, v):
    u = np.asarray(u)
    v = np.asarray(v)
    return (u * v).sum(axis=-1)


def ip(u, v, form):
    return ip_l3(u, v) if form == "l3" else ip_e3(u, v)


def cross_l3(u, v):
    """Minkowski cross product, normalized by <u x v, w> = det[u v w]."""
    u = np.asarray(u)
    v = np.asarray(v)
    out = np.empty(np.broadcast_shapes(u.shape, v.shape), dtype=np.result_type(u, v))
    out[..., 0] = u[..., 2] * v[..., 1] - u[..., 1] * v[..., 2]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


def cross_e3(u, v):
    return np.cross(u, v)


def cross(u, v, form):
    return cross_l3(u, v) if form == "l3" else cross_e3(u, v)


def l3_to_matrix(v):
    """v -> v0*e0 + v1*e1 + v2*e2 as a (...,2,2) array."""
    return np.einsum("...i,ijk->...jk", np.asarray(v), L3_BASIS)


def matrix_to_l3(m):
    m = np.asarray(m)
    v0 = 0.5 * (m[..., 1, 0] - m[..., 0, 1])
    v1 = 0.5 * (m[..., 1, 0] + m[..., 0, 1])
    v2 = m[..., 1, 1]
    return np.real(np.stack([v0, v1, v2], axis=-1))


def e3_to_matrix(v):
    return np.einsum("...i,ijk->...jk", np.asarray(v).astype(complex), E3_BASIS)


def matrix_to_e3(m):
    m = np.asarray(m)
    v1 = -1j * (m[..., 0, 1] + m[..., 1, 0])
    v2 = m[..., 1, 0] - m[..., 0, 1]
    v3 = -1j * (m[..., 0, 0] - m[..., 1, 1])
    return np.real(np.stack([v1, v2, v3], axis=-1))


def vector_to_matrix(v, form):
    return l3_to_matrix(v) if form == "l3" else e3_to_matrix(v)


def matrix_to_vector(m, form):
    return matrix_to_l3(m) if form == "l3" else matrix_to_e3(m)


class FormMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GroupElement2:
    """A 2x2 unimodular matrix tagged by real form (split = SL(2,R), unitary = SU(2))."""

    matrix: np.ndarray
    form: str  # "split" | "unitary"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if self.form not in ("split", "unitary"):
            raise ValueError(f"unknown real form {self.form!r}")

    @property
    def det_defect(self) -> float:
        return float(np.abs(np.linalg.det(self.matrix) - 1.0))

    @property
    def form_defect(self) -> float:
        m = self.matrix
        if self.form == "split":
            return float(np.max(np.abs(m.imag)))
        return float(np.max(np.abs(m @ m.conj().T - np.eye(2))))

    @property
    def ambient(self) -> str:
        return "l3" if self.form == "split" else "e3"


def ad(g, v, form=None):
    """Vector action of Ad_g: v -> vec(g M_v g^-1).  Broadcasts over leading axes."""
    if isinstance(g, GroupElement2):
        if form is not None and form != g.ambient:
            raise FormMismatch(f"group element is {g.ambient}, vector is {form}")
        form = g.ambient
        g = g.matrix
    elif form is None:
        raise ValueError("form required for raw matrices")
    g = np.asarray(g, dtype=complex)
    m = vector_to_matrix(v, form)
    return matrix_to_vector(g @ m @ np.linalg.inv(g), form)


def ad_matrix(g, form):
    """The 3x3 matrix of Ad_g in the e-basis (an SO(2,1) resp. SO(3) element)."""
    basis = np.eye(3)
    cols = [ad(g, basis[i], form) for i in range(3)]
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# so(2,1) <-> sl(2,R) and so(3) <-> su(2) isomorphisms.
#
# ad_rep_* sends algebra coefficients x to the matrix of ad_X on the e-basis;
# mu_* is its inverse, recovering the 2x2 matrix from a frame Maurer-Cartan
# form.  Conventions are pinned by unit tests (ad_rep(mu(A)) == A).
# ---------------------------------------------------------------------------

def ad_rep_l3(x):
    x = np.asarray(x)
    z = np.zeros_like(x[..., 0])
    row0 = np.stack([z, 2 * x[..., 2], -2 * x[..., 1]], axis=-1)
    row1 = np.stack([2 * x[..., 2], z, -2 * x[..., 0]], axis=-1)
    row2 = np.stack([-2 * x[..., 1], 2 * x[..., 0], z], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def ad_rep_e3(x):
    x = np.asarray(x)
    z = np.zeros_like(x[..., 0])
    row0 = np.stack([z, -x[..., 2], x[..., 1]], axis=-1)
    row1 = np.stack([x[..., 2], z, -x[..., 0]], axis=-1)
    row2 = np.stack([-x[..., 1], x[..., 0], z], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def mu_l3(a):
    """so(2,1) matrix -> sl(2,R) matrix with Ad-compatible normalization."""
    a = np.asarray(a)
    x0 = (a[..., 2, 1] - a[..., 1, 2]) / 4.0
    x1 = -(a[..., 2, 0] + a[..., 0, 2]) / 4.0
    x2 = (a[..., 1, 0] + a[..., 0, 1]) / 4.0
    return l3_to_matrix(np.stack([x0, x1, x2], axis=-1))


def mu_e3(a):
    """so(3) matrix -> su(2) matrix with Ad-compatible normalization."""
    a = np.asarray(a)
    v1 = (a[..., 2, 1] - a[..., 1, 2]) / 2.0
    v2 = (a[..., 0, 2] - a[..., 2, 0]) / 2.0
    v3 = (a[..., 1, 0] - a[..., 0, 1]) / 2.0
    return e3_to_matrix(np.stack([v1, v2, v3], axis=-1))


def frame_orthonormality_defect(r, form):
    """max |R^T G R - G| with G the Gram matrix of the model basis."""
    r = np.asarray(r, dtype=float)
    g = np.diag(_ETA) if form == "l3" else np.eye(3)
    return float(np.max(np.abs(np.swapaxes(r, -1, -2) @ g @ r - g)))


def _gram_schmidt(r, form):
    """Re-orthonormalize frame columns against the ambient form."""
    eta = _ETA if form == "l3" else np.ones(3)
    cols = [r[..., :, i].copy() for i in range(3)]
    ipf = ip_l3 if form == "l3" else ip_e3
    for i in range(3):
        for j in range(i):
            cols[i] = cols[i] - (ipf(cols[i], cols[j]) / eta[j])[..., None] * cols[j]
        nrm = ipf(cols[i], cols[i])
        cols[i] = cols[i] / np.sqrt(np.abs(nrm))[..., None]
    return np.stack(cols, axis=-1)


def frame_maurer_cartan(cols, dcols, form):
    """Algebra value mu(R^-1 R') from frame columns E_i and their derivatives.

    (R^-1 R')_{ij} = eta_ii <E_i, E_j'> for the Minkowski form, plain dot for
    the Euclidean one.  cols/dcols: sequences of three (...,3) arrays.
    """
    ipf = ip_l3 if form == "l3" else ip_e3
    eta = _ETA if form == "l3" else np.ones(3)
    a = np.stack(
        [np.stack([eta[i] * ipf(cols[i], dcols[j]) for j in range(3)], axis=-1)
         for i in range(3)],
        axis=-2,
    )
    return mu_l3(a) if form == "l3" else mu_e3(a)


def lift_frame_path(frames, ts, form, init=None, fd_step=None):
    """Continuous spin lift of an SO(2,1) / SO(3) frame path.

    frames: callable t -> (3,3) (columns = frame vectors) or an (n,3,3) array
    sampled at ts.  Integrates F' = F * mu(R^-1 R') with classical RK4 so that
    Ad_{F(t)} maps the model basis to R(t0)^-1 R(t); F(t0) = init (identity by
    default).  Returns an (n,2,2) array along ts.
    """
    ts = np.asarray(ts, dtype=float)
    if callable(frames):
        rfun = frames
    else:
        arr = np.asarray(frames, dtype=float)
        from scipy.interpolate import CubicSpline

        spl = CubicSpline(ts, arr, axis=0)
        rfun = spl

    span = float(ts[-1] - ts[0]) if len(ts) > 1 else 1.0
    h_fd = fd_step if fd_step is not None else max(1e-5 * max(abs(span), 1.0), 1e-7)

    def mc(t):
        r0 = np.asarray(rfun(t), dtype=float)
        defect = frame_orthonormality_defect(r0, form)
        if defect > FRAME_CORRECTABLE:
            raise ValueError(f"frame not orthonormal at t={t:g} (defect {defect:.2e})")
        if defect > FRAME_TOL:
            r0 = _gram_schmidt(r0, form)
        # 4th-order central difference of the path
        dr = (8.0 * (np.asarray(rfun(t + h_fd)) - np.asarray(rfun(t - h_fd)))
              - (np.asarray(rfun(t + 2 * h_fd)) - np.asarray(rfun(t - 2 * h_fd)))) / (12.0 * h_fd)
        cols = [r0[:, i] for i in range(3)]
        dcols = [dr[:, i] for i in range(3)]
        return frame_maurer_cartan(cols, dcols, form)

    f = np.eye(2, dtype=complex) if init is None else np.asarray(init, dtype=complex)
    out = np.empty((len(ts), 2, 2), dtype=complex)
    out[0] = f
    substeps = 8
    for k in range(len(ts) - 1):
        h = (ts[k + 1] - ts[k]) / substeps
        t = ts[k]
        for _ in range(substeps):
            k1 = f @ mc(t)
            k2 = (f + 0.5 * h * k1) @ mc(t + 0.5 * h)
            k3 = (f + 0.5 * h * k2) @ mc(t + 0.5 * h)
            k4 = (f + h * k3) @ mc(t + h)
            f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            f = f / np.sqrt(np.linalg.det(f))
            t += h
        out[k + 1] = f
    return out


@dataclass(frozen=True)
class Isometry:
    """Affine ambient isometry x -> L x + shift, with L orthogonal for the form."""

    linear: np.ndarray
    shift: np.ndarray
    form: str

    def apply(self, v):
        return np.asarray(v) @ np.asarray(self.linear).T + np.asarray(self.shift)

    def apply_linear(self, v):
        return np.asarray(v) @ np.asarray(self.linear).T

    @staticmethod
    def identity(form):
        return Isometry(np.eye(3), np.zeros(3), form)
