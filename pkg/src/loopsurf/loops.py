"""Twisted 2x2 matrix loops on the unit lambda-circle.

A loop is stored by its values at the M-th roots of unity lambda_k =
exp(2*pi*i*k/M); Laurent coefficients are obtained by FFT and cached.
Twisting means diagonal entries are even and off-diagonal entries odd in
lambda (coefficient c_j is diagonal for even j, off-diagonal for odd j).
Real forms:

  split    all Laurent coefficients real (SL(2,R) on the real axis),
  unitary  gamma(lam) * gamma(conj lam)^dagger = I, i.e. sample k pairs
           with sample M-k; coefficients of algebra-valued loops are
           anti-Hermitian.  At lam = +-1 the samples are genuinely
           SU(2)/SL(2,R).

Loops are immutable values; all arithmetic returns new instances.  The
module-level helpers operate on raw (..., M, 2, 2) sample blocks and
(..., 2N+1, 2, 2) centered coefficient blocks so grid-sized batches avoid
per-node Python objects.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "TwistedLoop", "circle_nodes", "samples_to_coeffs", "coeffs_to_samples",
    "eval_coeffs", "parity_project", "parity_defect", "realform_project",
    "realform_defect", "loop_eval", "loop_mul", "loop_inv",
    "lambda_log_derivative", "dump_loop_csv", "expm_tracefree",
]


def expm_tracefree(a):
    """exp of trace-free 2x2 matrices: cosh(s) I + sinh(s)/s A, s^2 = -det A."""
    a = np.asarray(a, dtype=complex)
    s2 = -np.linalg.det(a)
    s = np.sqrt(s2.astype(complex))
    small = np.abs(s) < 1e-8
    s_safe = np.where(small, 1.0, s)
    fac = np.where(small, 1.0 + s2 / 6.0, np.sinh(s_safe) / s_safe)
    eye = np.eye(2, dtype=complex)
    return np.cosh(s)[..., None, None] * eye + fac[..., None, None] * a

TAIL_TOL = 1e-8


def circle_nodes(m: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(m) / m)


def samples_to_coeffs(samples, nmax=None):
    """FFT samples (...,M,2,2) -> centered coefficients (...,2*nmax+1,2,2).

    c_j = (1/M) sum_k s_k lambda_k^{-j}; index j runs -nmax..nmax, which
    requires 2*nmax+1 <= M.
    """
    samples = np.asarray(samples)
    m = samples.shape[-3]
    raw = np.fft.fft(samples, axis=-3) / m
    if nmax is None:
        nmax = (m - 1) // 2
    if 2 * nmax + 1 > m:
        raise ValueError(f"nmax={nmax} too large for M={m}")
    idx = np.arange(-nmax, nmax + 1) % m
    return raw[..., idx, :, :]


def coeffs_to_samples(coeffs, m):
    """Evaluate centered coefficients (...,2N+1,2,2) at the M circle nodes."""
    coeffs = np.asarray(coeffs)
    n = (coeffs.shape[-3] - 1) // 2
    js = np.arange(-n, n + 1)
    powers = circle_nodes(m)[:, None] ** js[None, :]  # (M, 2N+1)
    return np.einsum("kj,...jab->...kab", powers, coeffs)


def eval_coeffs(coeffs, lam):
    """Laurent sum of centered coefficients at arbitrary nonzero lambda.

    Terms whose coefficient block is exactly zero are dropped, so loops with
    one-sided support evaluate cleanly near 0 / infinity.
    """
    coeffs = np.asarray(coeffs)
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("lambda = 0 is outside the loop domain")
    n = (coeffs.shape[-3] - 1) // 2
    js = np.arange(-n, n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        powers = lam[..., None] ** js  # (..., 2N+1)
        terms = np.where(coeffs == 0.0, 0.0, coeffs * powers[..., None, None])
    return terms.sum(axis=-3)


def parity_defect(coeffs):
    """Max broken-parity coefficient entry, relative to the largest coefficient."""
    coeffs = np.asarray(coeffs)
    n = (coeffs.shape[-3] - 1) // 2
    js = np.arange(-n, n + 1)
    even = (js % 2) == 0
    bad_diag = np.abs(coeffs[..., ~even, :, :][..., [0, 1], [0, 1]])
    bad_off = np.abs(coeffs[..., even, :, :][..., [0, 1], [1, 0]])
    scale = np.abs(coeffs).max()
    if scale == 0:
        return 0.0
    return float(max(bad_diag.max(initial=0.0), bad_off.max(initial=0.0)) / scale)


def parity_project(coeffs):
    """Zero the parity-violating entries (exact projection onto twisted loops)."""
    coeffs = np.array(coeffs, copy=True)
    n = (coeffs.shape[-3] - 1) // 2
    js = np.arange(-n, n + 1)
    even = (js % 2) == 0
    sub = coeffs[..., ~even, :, :]
    sub[..., [0, 1], [0, 1]] = 0.0
    coeffs[..., ~even, :, :] = sub
    sub = coeffs[..., even, :, :]
    sub[..., [0, 1], [1, 0]] = 0.0
    coeffs[..., even, :, :] = sub
    return coeffs


def realform_defect(samples, realform):
    """Deviation of group-valued samples from the tagged real form (relative)."""
    samples = np.asarray(samples)
    scale = max(float(np.abs(samples).max()), 1.0)
    if realform == "split":
        # real coefficients <=> conjugate-paired samples: conj(s_k) = s_{M-k}
        paired = np.conj(np.flip(np.roll(samples, -1, axis=-3), axis=-3))
        return float(np.abs(samples - paired).max() / scale)
    if realform == "unitary":
        paired = np.flip(np.roll(samples, -1, axis=-3), axis=-3)
        prod = samples @ np.conj(np.swapaxes(paired, -1, -2))
        return float(np.abs(prod - np.eye(2)).max() / scale)
    return 0.0


def realform_project_coeffs(coeffs, realform):
    if realform == "split":
        return coeffs.real.astype(complex)
    return coeffs


def realform_project(samples, realform):
    """Projection usable for split loops (real coefficients); unitary left as is."""
    if realform == "split":
        paired = np.conj(np.flip(np.roll(samples, -1, axis=-3), axis=-3))
        return 0.5 * (samples + paired)
    return samples


class TwistedLoop:
    """Immutable matrix loop with lazy Laurent coefficients."""

    __slots__ = ("samples", "realform", "twisted", "_coeffs")

    def __init__(self, samples, realform=None, twisted=True):
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 3 or samples.shape[-2:] != (2, 2):
            raise ValueError("samples must have shape (M, 2, 2)")
        samples.setflags(write=False)
        self.samples = samples
        self.realform = realform
        self.twisted = twisted
        self._coeffs = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, m, realform=None):
        s = np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).copy()
        return cls(s, realform=realform)

    @classmethod
    def from_coeffs(cls, coeffs, m, realform=None, twisted=True):
        """coeffs: dict {j: (2,2)} or centered (2N+1,2,2) array."""
        if isinstance(coeffs, dict):
            n = max(abs(int(j)) for j in coeffs) if coeffs else 0
            arr = np.zeros((2 * n + 1, 2, 2), dtype=complex)
            for j, c in coeffs.items():
                arr[int(j) + n] = np.asarray(c, dtype=complex)
        else:
            arr = np.asarray(coeffs, dtype=complex)
        return cls(coeffs_to_samples(arr, m), realform=realform, twisted=twisted)

    # -- representation -----------------------------------------------------

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    def coeffs(self, nmax=None):
        if nmax is None:
            if self._coeffs is None:
                self._coeffs = samples_to_coeffs(self.samples)
            return self._coeffs
        return samples_to_coeffs(self.samples, nmax)

    def tail_energy(self, n):
        """|c_{+-n}| relative to the largest coefficient."""
        c = self.coeffs()
        full_n = (c.shape[0] - 1) // 2
        if n > full_n:
            return 0.0
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        lo = np.abs(c[full_n - n]).max()
        hi = np.abs(c[full_n + n]).max()
        return float(max(lo, hi) / scale)

    def __call__(self, lam):
        return self.eval(lam)

    def eval(self, lam):
        return eval_coeffs(self.coeffs(), lam)

    # -- diagnostics --------------------------------------------------------

    def det_defect(self):
        return float(np.abs(np.linalg.det(self.samples) - 1.0).max())

    def parity_defect(self):
        return parity_defect(self.coeffs()) if self.twisted else 0.0

    def realform_defect(self):
        return realform_defect(self.samples, self.realform)

    # -- arithmetic ----------------------------------------------------------

    def _merge_tags(self, other):
        rf = self.realform if self.realform == other.realform else None
        return rf, self.twisted and other.twisted

    def __matmul__(self, other):
        if isinstance(other, TwistedLoop):
            if other.m != self.m:
                raise ValueError("incompatible sample counts")
            rf, tw = self._merge_tags(other)
            return TwistedLoop(self.samples @ other.samples, realform=rf, twisted=tw)
        return TwistedLoop(self.samples @ np.asarray(other, dtype=complex),
                           realform=None, twisted=False)

    def inv(self):
        det = np.linalg.det(self.samples)
        if np.abs(det).min() < 1e-12:
            raise np.linalg.LinAlgError("singular sample in loop inverse")
        return TwistedLoop(np.linalg.inv(self.samples), realform=self.realform,
                           twisted=self.twisted)

    def reverse_lambda(self):
        """The loop lam -> L(1/lam) (coefficient index reversal)."""
        idx = (-np.arange(self.m)) % self.m
        return TwistedLoop(self.samples[idx], realform=self.realform,
                           twisted=self.twisted)

    def right_multiply_constant(self, g):
        return TwistedLoop(self.samples @ np.asarray(g, dtype=complex),
                           realform=None, twisted=False)


def loop_eval(loop: TwistedLoop, lam):
    return loop.eval(lam)


def loop_mul(a: TwistedLoop, b: TwistedLoop) -> TwistedLoop:
    return a @ b


def loop_inv(a: TwistedLoop) -> TwistedLoop:
    return a.inv()


def lambda_log_derivative(loop: TwistedLoop) -> TwistedLoop:
    """(lam d/dlam L) L^-1 as a loop.

    The derivative is spectral: coefficient j of lam*dL/dlam is j*c_j.  The
    product with L^-1 is pointwise at the sample nodes.
    """
    c = loop.coeffs()
    n = (c.shape[0] - 1) // 2
    js = np.arange(-n, n + 1, dtype=float)
    dcoeffs = c * js[:, None, None]
    dsamples = coeffs_to_samples(dcoeffs, loop.m)
    return TwistedLoop(dsamples @ np.linalg.inv(loop.samples),
                       realform=None, twisted=False)


def dump_loop_csv(loop: TwistedLoop, path, nmax=None):
    """Debug dump: rows j, then 8 real components of c_j (re/im per entry)."""
    c = loop.coeffs(nmax)
    n = (c.shape[0] - 1) // 2
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("j,c00_re,c00_im,c01_re,c01_im,c10_re,c10_im,c11_re,c11_im\n")
        for j in range(-n, n + 1):
            cj = c[j + n]
            vals = []
            for a in range(2):
                for b in range(2):
                    vals.append(f"{cj[a, b].real:.17g}")
                    vals.append(f"{cj[a, b].imag:.17g}")
            fh.write(f"{j}," + ",".join(vals) + "\n")
