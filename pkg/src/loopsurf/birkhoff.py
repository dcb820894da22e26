"""Normalized Birkhoff factorization of twisted loops.

Left factorization: Phi = H_minus * H_plus with H_minus = I + (strictly
negative Laurent modes) and H_plus supported on modes >= 0.  Writing
W = H_plus^-1 (supported on modes 0..K), the defining condition
P_{>0}(Phi W) = 0 truncates to the square block-Toeplitz system

    sum_j phi_{m-j} w_j = delta_{m0} I,   m, j = 0..K,

which is solved by LU.  H_minus = P_{<=0}(Phi W) renormalized so its
constant term is exactly I and det == 1 per sample; H_plus = H_minus^-1 Phi
projected to modes >= 0.  For analytic loops in the big cell the section
error decays geometrically in K; the residual reports it honestly
(factors are rebuilt from their truncated coefficients before comparing
with Phi).

The split real form genuinely leaves the big cell; failure is detected per
item from a singular/ill-conditioned section or a large residual and is a
first-class outcome (ok mask in the batched kernel, BigCellFailure in the
single-loop API).  For the unitary real form the big cell is the whole
group, so failures there indicate a numerics problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loops import (
    TwistedLoop, coeffs_to_samples, parity_project, samples_to_coeffs,
)

__all__ = [
    "BigCellFailure", "BirkhoffFactors", "birkhoff_left", "birkhoff_right",
    "birkhoff_left_batched",
]

COND_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-6

_EYE2 = np.eye(2, dtype=complex)


class BigCellFailure(Exception):
    """The loop is (numerically) outside the Birkhoff big cell."""

    def __init__(self, message, residual=None, condition=None):
        super().__init__(message)
        self.residual = residual
        self.condition = condition


@dataclass(frozen=True)
class BirkhoffFactors:
    minus: TwistedLoop
    plus: TwistedLoop
    residual: float
    condition: float


def _pad_coeffs(coeffs, n_target):
    """Centered (...,2N+1,2,2) -> (...,2*n_target+1,2,2) by zero padding."""
    n = (coeffs.shape[-3] - 1) // 2
    if n == n_target:
        return coeffs
    if n > n_target:
        raise ValueError("cannot shrink without truncation")
    pad = n_target - n
    width = [(0, 0)] * coeffs.ndim
    width[-3] = (pad, pad)
    return np.pad(coeffs, width)


def _toeplitz_section(coeffs, k):
    """Block matrix T[m,j] = phi_{m-j}, m,j = 0..k, from centered coeffs."""
    n = (coeffs.shape[-3] - 1) // 2
    batch = coeffs.shape[:-3]
    t = np.zeros(batch + (2 * (k + 1), 2 * (k + 1)), dtype=coeffs.dtype)
    for m in range(k + 1):
        for j in range(k + 1):
            d = m - j
            if abs(d) <= n:
                t[..., 2 * m:2 * m + 2, 2 * j:2 * j + 2] = coeffs[..., d + n, :, :]
    return t


def _solve_section(t, rhs):
    """Batched solve with per-item fallback; returns (solution, ok)."""
    try:
        with np.errstate(all="ignore"):
            sol = np.linalg.solve(t, rhs)
    except np.linalg.LinAlgError:
        sol = np.empty(t.shape[:-1] + (rhs.shape[-1],), dtype=t.dtype)
        flat_t = t.reshape((-1,) + t.shape[-2:])
        flat_s = sol.reshape((-1,) + sol.shape[-2:])
        for i in range(flat_t.shape[0]):
            try:
                flat_s[i] = np.linalg.solve(flat_t[i], rhs)
            except np.linalg.LinAlgError:
                flat_s[i] = np.nan
        sol = flat_s.reshape(sol.shape)
    ok = np.isfinite(sol).all(axis=(-2, -1))
    return sol, ok


def _sanitize(mats, good):
    """Replace samples of failed items by the identity so batched inv is safe."""
    return np.where(good[..., None, None, None], mats, _EYE2)


def birkhoff_left_batched(coeffs, m, section=None, realform=None, twisted=True,
                          exact_condition=False):
    """Factor batched loops given centered coefficients (...,2N+1,2,2).

    Returns a dict with minus/plus centered coefficient blocks on the
    symmetric range [-(N+K), N+K], the H_plus value at lambda=0, residual,
    condition estimate and ok mask.  m is the sample count for pointwise
    products and must satisfy m >= 2*(N+K)+2 so products stay alias-free.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = (coeffs.shape[-3] - 1) // 2
    k = n if section is None else int(section)
    if m < 2 * (n + k) + 2:
        raise ValueError(f"M={m} too small for N={n}, section K={k}")
    batch = coeffs.shape[:-3]
    nbig = n + k

    # Unimodularize pointwise so det H_minus = det H_plus = 1 is consistent
    # with the factorization (det of a twisted loop is even, so the scalar
    # factor preserves twisting and both real forms).
    phi_s = coeffs_to_samples(_pad_coeffs(coeffs, nbig), m)
    with np.errstate(all="ignore"):
        det_phi = np.linalg.det(phi_s)
    ok0 = np.isfinite(det_phi).all(axis=-1) & \
        (np.abs(det_phi - 1.0).max(axis=-1) < 0.5)
    det_phi = np.where(np.abs(det_phi - 1.0) < 0.5, det_phi, 1.0)
    phi_s = phi_s / np.sqrt(det_phi)[..., None, None]
    coeffs_u = samples_to_coeffs(phi_s, nbig)

    work = coeffs_u.real if realform == "split" else coeffs_u
    t = _toeplitz_section(work, k)

    rhs = np.zeros((2 * (k + 1), 3), dtype=work.dtype)
    rhs[0, 0] = 1.0
    rhs[1, 1] = 1.0
    rhs[:, 2] = 1.0  # condition probe
    sol, ok = _solve_section(t, rhs)
    ok &= ok0
    w_cols = np.where(ok[..., None, None], sol[..., :, :2], 0.0)

    if exact_condition:
        with np.errstate(all="ignore"):
            condition = np.linalg.cond(t)
    else:
        norm_t = np.abs(t).sum(axis=-2).max(axis=-1)
        norm_inv = np.abs(sol[..., :, 2:]).sum(axis=-2).max(axis=-1)
        condition = norm_t * norm_inv
    condition = np.where(ok & np.isfinite(condition), condition, np.inf)

    # W = H_plus^-1 as a plus loop embedded on the symmetric range
    w_cent = np.zeros(batch + (2 * nbig + 1, 2, 2), dtype=complex)
    for j in range(k + 1):
        w_cent[..., nbig + j, :, :] = w_cols[..., 2 * j:2 * j + 2, :]

    hm_s = phi_s @ coeffs_to_samples(w_cent, m)

    hm_c = samples_to_coeffs(hm_s, nbig)
    hm_c[..., nbig + 1:, :, :] = 0.0  # section spillover, measured via residual

    # exact normalization: constant term -> I
    c0 = hm_c[..., nbig, :, :]
    good = np.isfinite(c0).all(axis=(-2, -1))
    with np.errstate(all="ignore"):
        good &= np.abs(np.linalg.det(np.where(good[..., None, None], c0, _EYE2))) > 1e-8
    ok &= good
    c0_inv = np.linalg.inv(np.where(ok[..., None, None], c0, _EYE2))
    hm_c = hm_c @ c0_inv[..., None, :, :]

    if twisted:
        hm_c = parity_project(hm_c)
    if realform == "split":
        hm_c = hm_c.real.astype(complex)

    # det renormalization (principal branch; det ~ 1 in the big cell)
    hm_s = coeffs_to_samples(hm_c, m)
    with np.errstate(all="ignore"):
        det = np.linalg.det(hm_s)
    drift = np.abs(det - 1.0).reshape(batch + (-1,)).max(axis=-1)
    ok &= np.isfinite(drift) & (drift < 0.5)
    safe_det = np.where(np.abs(det) > 1e-12, det, 1.0)
    hm_s = hm_s / np.sqrt(safe_det)[..., None, None]
    hm_c = samples_to_coeffs(hm_s, nbig)
    hm_c[..., nbig + 1:, :, :] = 0.0
    delta = np.abs(hm_c[..., nbig, :, :] - _EYE2).reshape(batch + (-1,)).max(axis=-1)
    hm_c[..., nbig, :, :] = np.where((ok & (delta < 1e-6))[..., None, None],
                                     _EYE2, hm_c[..., nbig, :, :])

    hm_s = _sanitize(coeffs_to_samples(hm_c, m), ok)
    with np.errstate(all="ignore"):
        det_hm = np.abs(np.linalg.det(hm_s)).reshape(batch + (-1,)).min(axis=-1)
    ok &= np.isfinite(det_hm) & (det_hm > 1e-6)
    hm_s = _sanitize(hm_s, ok)
    hp_s = np.linalg.inv(hm_s) @ phi_s
    hp_c = samples_to_coeffs(hp_s, nbig)
    hp_c[..., :nbig, :, :] = 0.0
    if twisted:
        hp_c = parity_project(hp_c)
    if realform == "split":
        hp_c = hp_c.real.astype(complex)

    # honest residual from the truncated factors
    recon = coeffs_to_samples(hm_c, m) @ coeffs_to_samples(hp_c, m)
    scale = np.maximum(np.abs(phi_s).reshape(batch + (-1,)).max(axis=-1), 1.0)
    with np.errstate(all="ignore"):
        residual = np.abs(recon - phi_s).reshape(batch + (-1,)).max(axis=-1) / scale
    residual = np.where(ok & np.isfinite(residual), residual, np.inf)

    ok &= residual < RESIDUAL_LIMIT
    ok &= condition < COND_LIMIT

    bad = ~ok
    if bad.any():
        hm_c = np.where(bad[..., None, None, None], np.nan, hm_c)
        hp_c = np.where(bad[..., None, None, None], np.nan, hp_c)

    return {
        "minus": hm_c,
        "plus": hp_c,
        "w": w_cent,
        "hplus0": hp_c[..., nbig, :, :],
        "residual": residual,
        "condition": condition,
        "ok": ok,
        "nbig": nbig,
    }


def _to_factors(res, m, realform, twisted):
    minus = TwistedLoop(coeffs_to_samples(res["minus"][0], m),
                        realform=realform, twisted=twisted)
    plus = TwistedLoop(coeffs_to_samples(res["plus"][0], m),
                       realform=realform, twisted=twisted)
    return BirkhoffFactors(minus=minus, plus=plus,
                           residual=float(res["residual"][0]),
                           condition=float(res["condition"][0]))


def _loop_coeffs_for_factorization(loop: TwistedLoop, nmax=None):
    """Truncate with tail control: one automatic retry at doubled N."""
    avail = (loop.m - 2) // 4  # keeps M >= 2(N+K)+2 with K = N
    n = min(nmax if nmax is not None else max(2, avail), avail)
    c = loop.coeffs(n)
    if nmax is None and loop.tail_energy(n) > 1e-8 and 2 * n <= avail:
        n = 2 * n
        c = loop.coeffs(n)
    return c[None], n


def birkhoff_left(loop: TwistedLoop, section=None, nmax=None) -> BirkhoffFactors:
    """Phi = H_minus H_plus with H_minus(inf) = I.  Raises BigCellFailure."""
    c, n = _loop_coeffs_for_factorization(loop, nmax)
    if section is None:
        # use the longest section the sample count supports (cheap for the
        # single-loop API; the gridwise kernel sticks to K = N)
        section = min((loop.m - 2) // 2 - n, max(2 * n + 16, n), 80)
    res = birkhoff_left_batched(c, loop.m, section=section,
                                realform=loop.realform, twisted=loop.twisted,
                                exact_condition=True)
    if not bool(res["ok"][0]):
        raise BigCellFailure(
            "loop outside the Birkhoff big cell "
            f"(residual {float(res['residual'][0]):.3e}, "
            f"condition {float(res['condition'][0]):.3e})",
            residual=float(res["residual"][0]),
            condition=float(res["condition"][0]))
    fac = _to_factors(res, loop.m, loop.realform, loop.twisted)
    # report the residual against the untruncated input, not its section
    recon = fac.minus.samples @ fac.plus.samples
    scale = max(float(np.abs(loop.samples).max()), 1.0)
    resid = float(np.abs(recon - loop.samples).max() / scale)
    return BirkhoffFactors(minus=fac.minus, plus=fac.plus,
                           residual=resid, condition=fac.condition)


def birkhoff_right(loop: TwistedLoop, section=None, nmax=None) -> BirkhoffFactors:
    """Phi = H_plus H_minus with H_plus(0) = I.

    Reduced to the left factorization of lam -> Phi(1/lam): index reversal
    swaps the disk and exterior-disk roles and preserves twisting and both
    real forms.
    """
    rev = loop.reverse_lambda()
    fac = birkhoff_left(rev, section=section, nmax=nmax)
    return BirkhoffFactors(minus=fac.plus.reverse_lambda(),
                           plus=fac.minus.reverse_lambda(),
                           residual=fac.residual, condition=fac.condition)
