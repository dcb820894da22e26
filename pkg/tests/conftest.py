import numpy as np

from loopsurf.loops import TwistedLoop, coeffs_to_samples, expm_tracefree, parity_project


def random_twisted_algebra_coeffs(rng, n, realform, scale=0.35, decay=0.55):
    """Centered coefficients of a random twisted algebra-valued loop."""
    js = np.arange(-n, n + 1)
    c = rng.normal(size=(2 * n + 1, 2, 2)) + 1j * rng.normal(size=(2 * n + 1, 2, 2))
    c *= scale * decay ** np.abs(js)[:, None, None]
    c = parity_project(c)
    # trace-free
    tr = 0.5 * (c[:, 0, 0] + c[:, 1, 1])
    c[:, 0, 0] -= tr
    c[:, 1, 1] -= tr
    if realform == "split":
        c = c.real.astype(complex)
    else:
        c = 0.5 * (c - np.conj(np.swapaxes(c, -1, -2)))
    return c


def random_bigcell_loop(rng, n, m, realform, scale=0.35):
    """exp of a small random twisted algebra loop: twisted, det 1, big cell."""
    c = random_twisted_algebra_coeffs(rng, n, realform, scale=scale)
    x = coeffs_to_samples(c, m)
    return TwistedLoop(expm_tracefree(x), realform=realform, twisted=True)
