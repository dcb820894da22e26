import numpy as np
import pytest

from loopsurf import minkalg as mk
from loopsurf.birkhoff import (
    BigCellFailure, birkhoff_left, birkhoff_left_batched, birkhoff_right,
)
from loopsurf.loops import (
    TwistedLoop, circle_nodes, coeffs_to_samples, expm_tracefree,
    samples_to_coeffs,
)

from conftest import random_bigcell_loop


def rng(seed=0):
    return np.random.default_rng(seed)


def loop_dist(a: TwistedLoop, b: TwistedLoop) -> float:
    return float(np.max(np.abs(a.samples - b.samples)))


class TestClosedForms:
    def test_identity(self):
        fac = birkhoff_left(TwistedLoop.identity(64, realform="split"))
        assert loop_dist(fac.minus, TwistedLoop.identity(64)) < 1e-12
        assert loop_dist(fac.plus, TwistedLoop.identity(64)) < 1e-12

    def test_commuting_exponential_split(self):
        # Phi = exp(c/4 (lam + 1/lam) e0) factors into the lam^-1 and lam
        # exponentials (the rotationally invariant CMC example)
        m, c = 128, 0.8
        lam = circle_nodes(m)
        phi = TwistedLoop(
            expm_tracefree(0.25 * c * (lam + 1 / lam)[:, None, None] * mk.E0),
            realform="split")
        fac = birkhoff_left(phi)
        want_minus = expm_tracefree(0.25 * c * (1 / lam)[:, None, None] * mk.E0)
        want_plus = expm_tracefree(0.25 * c * lam[:, None, None] * mk.E0)
        assert np.max(np.abs(fac.minus.samples - want_minus)) < 1e-10
        assert np.max(np.abs(fac.plus.samples - want_plus)) < 1e-10
        assert fac.residual < 1e-11

    def test_rational_null_axis_example(self):
        # Phi = [[1, y/lam],[-lam x, 1-xy]] has H_minus = [[1, y lam^-1/(1-xy)],[0,1]]
        m, x, y = 64, 0.3, 0.4
        lam = circle_nodes(m)
        phi = np.zeros((m, 2, 2), dtype=complex)
        phi[:, 0, 0] = 1.0
        phi[:, 0, 1] = y / lam
        phi[:, 1, 0] = -lam * x
        phi[:, 1, 1] = 1.0 - x * y
        fac = birkhoff_left(TwistedLoop(phi, realform="split"))
        want = np.zeros((m, 2, 2), dtype=complex)
        want[:, 0, 0] = 1.0
        want[:, 0, 1] = y / (lam * (1 - x * y))
        want[:, 1, 1] = 1.0
        assert np.max(np.abs(fac.minus.samples - want)) < 1e-12
        hp = fac.plus.samples
        want_hp = np.zeros_like(hp)
        want_hp[:, 0, 0] = 1.0 / (1 - x * y)
        want_hp[:, 1, 0] = -lam * x
        want_hp[:, 1, 1] = 1 - x * y
        assert np.max(np.abs(hp - want_hp)) < 1e-12

    def test_null_axis_leaves_big_cell(self):
        # at xy -> 1 the same family degenerates: must fail, not crash
        m, x, y = 64, 1.0, 1.0
        lam = circle_nodes(m)
        phi = np.zeros((m, 2, 2), dtype=complex)
        phi[:, 0, 0] = 1.0
        phi[:, 0, 1] = y / lam
        phi[:, 1, 0] = -lam * x
        phi[:, 1, 1] = 1.0 - x * y
        with pytest.raises(BigCellFailure):
            birkhoff_left(TwistedLoop(phi, realform="split"))


class TestRight:
    def test_identity(self):
        fac = birkhoff_right(TwistedLoop.identity(64, realform="split"))
        assert loop_dist(fac.minus, TwistedLoop.identity(64)) < 1e-12
        assert loop_dist(fac.plus, TwistedLoop.identity(64)) < 1e-12

    def test_plus_loop_already_factored(self):
        # support >= 0 and Phi(0) = I -> (Phi, I)
        m = 64
        lam = circle_nodes(m)
        phi = TwistedLoop(expm_tracefree(0.4 * lam[:, None, None] * mk.E1),
                          realform="split")
        fac = birkhoff_right(phi)
        assert loop_dist(fac.plus, phi) < 1e-10
        assert loop_dist(fac.minus, TwistedLoop.identity(m)) < 1e-10

    @pytest.mark.parametrize("realform", ["split", "unitary"])
    def test_roundtrip_random(self, realform):
        loop = random_bigcell_loop(rng(21), 6, 256, realform)
        fac = birkhoff_right(loop)
        recon = fac.plus @ fac.minus
        assert loop_dist(recon, loop) < 1e-10
        # H_plus(0) = I normalization: constant coefficient I, no negative modes
        c = fac.plus.coeffs()
        n = (c.shape[0] - 1) // 2
        assert np.max(np.abs(c[n] - np.eye(2))) < 1e-10
        assert np.max(np.abs(c[:n])) < 1e-10


class TestRandomizedProperties:
    @pytest.mark.parametrize("realform", ["split", "unitary"])
    @pytest.mark.parametrize("n", [2, 8])
    def test_reconstruction_idempotence_parity(self, realform, n):
        r = rng(100 + n)
        for _ in range(10):
            loop = random_bigcell_loop(r, n, 256, realform)
            fac = birkhoff_left(loop)
            assert fac.residual < 1e-10
            recon = fac.minus @ fac.plus
            assert loop_dist(recon, loop) < 1e-10
            # idempotence: refactoring the product returns the same factors
            fac2 = birkhoff_left(recon)
            assert loop_dist(fac2.minus, fac.minus) < 1e-10
            assert loop_dist(fac2.plus, fac.plus) < 1e-10
            # parity and real-form preservation
            assert fac.minus.parity_defect() < 1e-10
            assert fac.plus.parity_defect() < 1e-10
            assert fac.minus.realform_defect() < 1e-10
            assert fac.plus.realform_defect() < 1e-10

    def test_det_product_identity(self):
        loop = random_bigcell_loop(rng(31), 6, 128, "split")
        fac = birkhoff_left(loop)
        det = (np.linalg.det(fac.minus.samples) * np.linalg.det(fac.plus.samples))
        assert np.max(np.abs(det - np.linalg.det(loop.samples))) < 1e-10
        assert np.max(np.abs(np.linalg.det(fac.minus.samples) - 1)) < 1e-11
        assert np.max(np.abs(np.linalg.det(fac.plus.samples) - 1)) < 1e-11

    def test_minus_normalized_at_infinity(self):
        loop = random_bigcell_loop(rng(32), 5, 128, "unitary")
        fac = birkhoff_left(loop)
        n = (fac.minus.coeffs().shape[0] - 1) // 2
        c = fac.minus.coeffs()
        assert np.max(np.abs(c[n] - np.eye(2))) < 1e-12      # constant term I
        assert np.max(np.abs(c[n + 1:])) < 1e-10             # no positive modes

    def test_batched_matches_single(self):
        r = rng(33)
        loops = [random_bigcell_loop(r, 2, 64, "split", scale=0.25) for _ in range(5)]
        coeffs = np.stack([lp.coeffs(2) for lp in loops])
        res = birkhoff_left_batched(coeffs, 64, section=12, realform="split")
        assert res["ok"].all()
        for i, lp in enumerate(loops):
            fac = birkhoff_left(lp, nmax=2, section=12)
            got_minus = coeffs_to_samples(res["minus"][i], 64)
            assert np.max(np.abs(got_minus - fac.minus.samples)) < 1e-11

    def test_batched_failure_masking(self):
        # one degenerate item must not poison its neighbors
        m = 64
        lam = circle_nodes(m)
        good = random_bigcell_loop(rng(34), 4, m, "split")
        bad = np.zeros((m, 2, 2), dtype=complex)
        bad[:, 0, 0] = 1.0
        bad[:, 0, 1] = 1.0 / lam
        bad[:, 1, 0] = -lam
        bad[:, 1, 1] = 0.0  # the xy = 1 degeneration
        nbig = 8
        coeffs = np.stack([
            np.pad(good.coeffs(4), ((nbig - 4, nbig - 4), (0, 0), (0, 0))),
            samples_to_coeffs(bad, nbig),
        ])
        res = birkhoff_left_batched(coeffs, m, realform="split")
        assert bool(res["ok"][0])
        assert not bool(res["ok"][1])
        assert np.isfinite(res["minus"][0]).all()

    def test_unitary_big_cell_is_everything(self):
        # unitary loops never fail, even at larger amplitude
        r = rng(35)
        for _ in range(10):
            loop = random_bigcell_loop(r, 6, 256, "unitary", scale=1.2)
            fac = birkhoff_left(loop)
            assert fac.residual < 1e-9
