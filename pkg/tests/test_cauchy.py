import numpy as np
import pytest
import sympy as sp

import loopsurf as ls
from loopsurf import minkalg as mk
from loopsurf.cauchy import (
    HypothesisViolation, MixedType, classify, null_frame_decomposition,
    potential_cmc_noncharacteristic, potential_cmc_null,
    potential_psph_characteristic, potential_psph_noncharacteristic,
    potential_revolution_timelike,
)
from loopsurf.curves import CurveData, CurveEvaluators, ingest_curve
from loopsurf.framegen import integrate_potential
from loopsurf.loops import circle_nodes


def make_l3_data(f_exprs, v_exprs, t_range=(-1, 1), n=101, kind="cmc"):
    t = sp.Symbol("t", real=True)
    from loopsurf.curves import _symbolic_curve_data
    return _symbolic_curve_data("test", kind, "l3", f_exprs, v_exprs,
                                t_range, n)


class TestClassify:
    def test_circle_is_spacelike(self):
        rep = classify(ingest_curve("circle:rho=1"))
        assert rep.case == "cmc-spacelike"
        assert rep.witnesses["min_g"] > 0

    def test_timelike_cases(self):
        assert classify(ingest_curve("timelike-line")).case == "cmc-timelike"
        assert classify(ingest_curve("timelike-helix")).case == "cmc-timelike"

    def test_null_case(self):
        rep = classify(ingest_curve("null-revolution:H=0.5,alpha0=1"))
        assert rep.case == "cmc-null"
        assert rep.witnesses["eps2"] == -1.0

    def test_psph_cases(self):
        assert classify(ingest_curve("ellipse:a=1,b=2")).case == "psph-principal"
        assert classify(ingest_curve("parabola")).case == "psph-principal"
        assert classify(ingest_curve("helix")).case == "psph-general"
        assert classify(ingest_curve("line-asymptotic")).case == "psph-asymptotic"

    def test_mixed_type_rejected(self):
        t = sp.Symbol("t", real=True)
        # speed^2 = -1 + 2 t^2 changes sign inside the window
        f = [t, sp.sqrt(2) * t ** 2 / 2, sp.Integer(0)]
        v = [sp.Integer(0), sp.Integer(0), sp.Integer(1)]
        with pytest.raises(MixedType):
            data = make_l3_data(f, v)
            classify(data)

    def test_bad_v_norm_rejected(self):
        t = sp.Symbol("t", real=True)
        f = [t, sp.Integer(0), sp.Integer(0)]
        v = [sp.Integer(0), sp.Integer(2), sp.Integer(0)]  # |V|^2 != 1
        with pytest.raises(HypothesisViolation, match="<V,V>"):
            classify(make_l3_data(f, v))

    def test_isolated_asymptotic_contact_rejected(self):
        # <f0', N0'> vanishes at t = 0 only: rejected, not solved
        t = sp.Symbol("t", real=True)
        from loopsurf.curves import _symbolic_curve_data
        f = [t, t ** 3, sp.Integer(0)]  # curvature vanishes at t = 0
        n0 = [3 * t ** 2, sp.Integer(-1), sp.Integer(0)]
        norm = sp.sqrt(1 + 9 * t ** 4)
        data = _symbolic_curve_data("inflect", "psph", "e3", f,
                                    [e / norm for e in n0], (-0.5, 0.5), 101)
        with pytest.raises(HypothesisViolation, match="isolated"):
            classify(data)


class TestCmcNoncharacteristic:
    def test_cylinder_pair_matches_closed_form(self):
        # the generic construction on circle data reproduces the constant
        # revolution potential (Q = R = -rho(1+rho H)/2 built in)
        rho, h = 1.0, -0.5
        data = ingest_curve(f"circle:rho={rho}")
        pair = potential_cmc_noncharacteristic(data, h)
        ref = potential_revolution_timelike(rho, h)
        ts = np.linspace(-0.9, 0.9, 7)
        assert np.max(np.abs(pair.chi_coeffs(ts) - ref.chi_coeffs(ts))) < 1e-12
        assert np.max(np.abs(pair.psi_coeffs(ts) - ref.psi_coeffs(ts))) < 1e-12
        assert pair.meta["curve_locus"] == "diagonal"

    @pytest.mark.parametrize("rho,h", [(1.0, -0.5), (1.0, -1.0), (2.0, 0.5)])
    def test_revolution_regularity(self, rho, h):
        pair = potential_revolution_timelike(rho, h)
        c1 = pair.chi_coeffs(np.zeros(1))[0, 2, 1, 0]
        assert abs(c1 - h * rho / 2) < 1e-14
        assert c1 != 0

    def test_timelike_line_is_flat_data(self):
        data = ingest_curve("timelike-line")
        pair = potential_cmc_noncharacteristic(data, 0.7)
        ts = np.linspace(-1, 1, 5)
        c = pair.chi_coeffs(ts)
        # a = b = c = 0: only the H-terms survive
        want_c1 = np.array([[0.0, -0.35], [0.35, 0.0]])
        want_cm1 = np.array([[0.0, 0.35], [-0.35, 0.0]])
        assert np.max(np.abs(c[:, 1])) < 1e-12
        assert np.max(np.abs(c[:, 2] - want_c1)) < 1e-12
        assert np.max(np.abs(c[:, 0] - want_cm1)) < 1e-12

    def test_pair_invariants_on_helix(self):
        data = ingest_curve("timelike-helix")
        pair = potential_cmc_noncharacteristic(data, -0.6)
        ts = np.linspace(-1, 1, 21)
        c = pair.chi_coeffs(ts)
        assert np.max(np.abs(c.imag)) < 1e-12          # split form
        for k in (0, 2):                               # twisting parity
            assert np.max(np.abs(c[:, k, [0, 1], [0, 1]])) < 1e-12
        assert np.max(np.abs(c[:, 1, [0, 1], [1, 0]])) < 1e-12
        assert pair.regular

    def test_a_hat_at_lambda_one_is_frame_derivative(self):
        # evaluating chi at lambda = 1 reproduces F0^-1 F0' sample-wise
        data = ingest_curve("timelike-helix")
        pair = potential_cmc_noncharacteristic(data, -0.6)
        ts = np.linspace(-0.9, 0.9, 13)
        c = pair.chi_coeffs(ts)
        at_one = c[:, 0] + c[:, 1] + c[:, 2]
        want = pair.meta["frame_mc"](ts)
        assert np.max(np.abs(at_one - want)) < 1e-9

    def test_second_derivative_identity(self):
        # <f0'', N> = -(b + c) e^{omega/2} for the timelike parameterization
        data = ingest_curve("timelike-helix")
        pair = potential_cmc_noncharacteristic(data, -0.6)
        ts = np.linspace(-0.9, 0.9, 13)
        x = pair.meta["frame_mc"](ts)
        b = np.real(x[:, 0, 1])
        cc = np.real(x[:, 1, 0])
        w = np.sqrt(pair.meta["eomega"](ts))
        n = pair.meta["frame_cols"](ts)[2]
        f2n = mk.ip_l3(data.evaluators.d2f(ts), n)
        assert np.max(np.abs(f2n + (b + cc) * w)) < 1e-9

    def test_lift_consistency(self):
        # Ad of the lifted frame reproduces the frame columns
        data = ingest_curve("timelike-helix")
        pair = potential_cmc_noncharacteristic(data, -0.6)
        ts = np.linspace(0.0, 0.8, 9)
        cols = pair.meta["frame_cols"]

        def frame(t):
            e0, e1, e2 = cols(np.asarray([t]))
            return np.stack([e0[0], e1[0], e2[0]], axis=-1)

        lifted = mk.lift_frame_path(frame, ts, "l3")
        for t, f in zip(ts, lifted):
            r0 = np.linalg.inv(frame(ts[0])) @ frame(t)
            assert np.max(np.abs(mk.ad_matrix(f, "l3") - r0)) < 1e-8

    def test_h_zero_rejected(self):
        with pytest.raises(HypothesisViolation):
            potential_cmc_noncharacteristic(ingest_curve("timelike-line"), 0.0)


class TestCmcNull:
    def ones(self, y):
        return np.ones_like(np.asarray(y, dtype=float))

    def zeros(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def test_revolution_chi_is_single_elementary_mode(self):
        data = ingest_curve("null-revolution:H=0.5,alpha0=1")
        pair = potential_cmc_null(data, self.ones, self.zeros)
        ts = np.linspace(-1, 1, 9)
        c = pair.chi_coeffs(ts)
        want = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert np.max(np.abs(c[:, 2] - want)) < 1e-10
        assert np.max(np.abs(c[:, 1])) < 1e-10
        assert np.max(np.abs(c[:, 0])) < 1e-14

    def test_constant_shared_angle_data_gives_zero_chi(self):
        # s = t = 1, theta constant: the frame is constant
        t = sp.Symbol("t", real=True)
        th = 0.4
        f = [t / 2, sp.cos(th) * t / 2, sp.sin(th) * t / 2]
        v = [sp.Rational(-1, 2), sp.cos(th) / 2, sp.sin(th) / 2]
        data = make_l3_data(f, v)
        pair = potential_cmc_null(data, self.ones, self.zeros)
        c = pair.chi_coeffs(np.linspace(-0.5, 0.5, 5))
        assert np.max(np.abs(c)) < 1e-10

    def test_psi_integrates_to_unipotent_loop(self):
        # alpha = 1, beta = 0: F_minus(y) = [[1, y/lam],[0, 1]]
        data = ingest_curve("null-revolution:H=0.5,alpha0=1")
        pair = potential_cmc_null(data, self.ones, self.zeros)
        m = 32
        ys = np.array([0.0, 0.3, -0.6])
        fm = integrate_potential(pair.psi_coeffs, 0.0, np.sort(ys), m)
        lam = circle_nodes(m)
        for y, loop in zip(np.sort(ys), fm):
            want = np.stack([np.stack([np.ones(m), y / lam], -1),
                             np.stack([np.zeros(m), np.ones(m)], -1)], -2)
            assert np.max(np.abs(loop - want)) < 1e-12

    def test_remark_closed_form_oracle(self):
        # shared-angle data: chi = [[r'/r, -theta' lam/(2r^2)],
        #                           [r^2 theta' lam/2, -r'/r]]
        data = ingest_curve("null-ansatz")
        s, tt, theta = null_frame_decomposition(data)
        pair = potential_cmc_null(data, self.ones, self.zeros)
        ts = data.t
        c = pair.chi_coeffs(ts)
        r = np.sqrt(tt / s)
        # analytic r and theta for this catalog entry
        r_want = 1 + 0.2 * np.sin(ts)
        assert np.max(np.abs(r - r_want)) < 1e-12
        dr = 0.2 * np.cos(ts)
        dtheta = 1.0
        assert np.max(np.abs(c[:, 1, 0, 0] - dr / r_want)) < 1e-9
        assert np.max(np.abs(c[:, 2, 0, 1] + dtheta / (2 * r_want ** 2))) < 1e-9
        assert np.max(np.abs(c[:, 2, 1, 0] - dtheta * r_want ** 2 / 2)) < 1e-9

    def test_h_implied_constant_for_revolution(self):
        data = ingest_curve("null-revolution:H=0.5,alpha0=1")
        pair = potential_cmc_null(data, self.ones, self.zeros)
        h = pair.meta["h_implied"](data.t)
        assert np.max(np.abs(h - 0.5)) < 1e-10

    def test_h_implied_nonconstant_for_ansatz(self):
        # the shared-angle test data is incompatible with any constant H
        data = ingest_curve("null-ansatz")
        pair = potential_cmc_null(data, self.ones, self.zeros)
        h = pair.meta["h_implied"](data.t)
        assert h.max() - h.min() > 0.1

    def test_alpha_zero_rejected(self):
        data = ingest_curve("null-revolution:H=0.5,alpha0=1")
        with pytest.raises(HypothesisViolation, match="alpha"):
            potential_cmc_null(data, self.zeros, self.zeros)


class TestPsphNoncharacteristic:
    def test_parabola_scalars(self):
        data = ingest_curve("parabola")
        pair = potential_psph_noncharacteristic(data)
        t = np.array([0.0, 0.5, -0.8])
        alpha, beta, theta, theta_v, *_ = pair.meta["scalars"](t)
        assert np.max(np.abs(alpha)) < 1e-12
        want_beta = np.sqrt((1 + 4 * t ** 2) ** 3 + 4) / (1 + 4 * t ** 2)
        assert np.max(np.abs(beta - want_beta)) < 1e-10
        assert np.max(np.abs(theta_v)) < 1e-12
        want_cos = 2 / np.sqrt(4 + (1 + 4 * t ** 2) ** 3)
        assert np.max(np.abs(np.cos(theta) - want_cos)) < 1e-12

    def test_circle_frenet_oracle(self):
        # planar unit-speed circle of curvature kappa: alpha = 0,
        # beta = sqrt(kappa^2 + 1), theta_v = 0
        kappa = 1.7
        data = ingest_curve(f"circle2d:kappa={kappa}")
        pair = potential_psph_noncharacteristic(data)
        t = np.linspace(-0.5, 0.5, 7)
        alpha, beta, theta, theta_v, *_ = pair.meta["scalars"](t)
        assert np.max(np.abs(alpha)) < 1e-10
        assert np.max(np.abs(beta - np.sqrt(kappa ** 2 + 1))) < 1e-10
        assert np.max(np.abs(theta_v)) < 1e-10

    def test_general_case_identities(self):
        # alpha^2 + beta^2 = |f'|^2 + |N'|^2 and
        # alpha^2 beta^2 = |f'|^2 |N'|^2 - <f', N'>^2, sample-wise
        data = ingest_curve("helix")
        pair = potential_psph_noncharacteristic(data)
        t = np.linspace(-1, 1, 41)
        alpha, beta, *_ = pair.meta["scalars"](t)
        df = data.evaluators.df(t)
        dn = data.evaluators.dfield(t)
        fu2 = np.einsum("ij,ij->i", df, df)
        nu2 = np.einsum("ij,ij->i", dn, dn)
        fn = np.einsum("ij,ij->i", df, dn)
        assert np.max(np.abs(alpha ** 2 + beta ** 2 - (fu2 + nu2))) < 1e-9
        assert np.max(np.abs(alpha ** 2 * beta ** 2 - (fu2 * nu2 - fn ** 2))) < 1e-9
        assert np.min(alpha) > 0

    def test_pair_invariants(self):
        data = ingest_curve("ellipse:a=1,b=2")
        pair = potential_psph_noncharacteristic(data)
        ts = np.linspace(-1.1, 1.1, 11)
        for coeffs in (pair.chi_coeffs(ts), pair.psi_coeffs(ts)):
            # anti-Hermitian coefficients (unitary real form)
            ah = coeffs + np.conj(np.swapaxes(coeffs, -1, -2))
            assert np.max(np.abs(ah)) < 1e-12
            # twisting parity
            assert np.max(np.abs(coeffs[:, 0, [0, 1], [0, 1]])) < 1e-12
            assert np.max(np.abs(coeffs[:, 2, [0, 1], [0, 1]])) < 1e-12
            assert np.max(np.abs(coeffs[:, 1, [0, 1], [1, 0]])) < 1e-12
        assert pair.weakly_regular

    def test_normal_flip_recorded_and_equivalent(self):
        # handing in -N0 produces the same potentials with the flip recorded
        data = ingest_curve("parabola")
        ev = data.evaluators
        flipped = CurveData(
            form="e3", kind="psph", name="parabola-flipped", t=data.t,
            f0=data.f0, df=data.df, d2f=data.d2f,
            field=-data.field, dfield=-data.dfield, d2field=-data.d2field,
            evaluators=CurveEvaluators(
                f0=ev.f0, df=ev.df, d2f=ev.d2f,
                field=lambda t: -ev.field(t),
                dfield=lambda t: -ev.dfield(t),
                d2field=lambda t: -ev.d2field(t)),
            meta=dict(data.meta))
        pa = potential_psph_noncharacteristic(data)
        pb = potential_psph_noncharacteristic(flipped)
        assert not pa.meta["normal_flipped"]
        assert pb.meta["normal_flipped"]
        ts = np.linspace(-0.8, 0.8, 9)
        assert np.max(np.abs(pa.chi_coeffs(ts) - pb.chi_coeffs(ts))) < 1e-12


class TestPsphCharacteristic:
    def alpha_const(self, val):
        def fn(y):
            return np.full_like(np.asarray(y, dtype=float), val, dtype=complex)
        return fn

    def test_line_data_coefficients(self):
        b0 = 0.5
        data = ingest_curve(f"line-asymptotic:b={b0}")
        pair = potential_psph_characteristic(data, self.alpha_const(0.5))
        ts = np.linspace(-1, 1, 9)
        c = pair.chi_coeffs(ts)
        want_c1 = np.array([[0, 1j * b0], [1j * b0, 0]])
        assert np.max(np.abs(c[:, 2] - want_c1)) < 1e-10
        assert np.max(np.abs(c[:, 1])) < 1e-10
        assert pair.meta["speed_compatible"]

    def test_straight_line_constant_normal_gives_zero_chi(self):
        t = sp.Symbol("t", real=True)
        from loopsurf.curves import _symbolic_curve_data
        f = [t, sp.Integer(0), sp.Integer(0)]
        n0 = [sp.Integer(0), sp.Integer(0), sp.Integer(1)]
        data = _symbolic_curve_data("line", "psph", "e3", f, n0, (-1, 1), 51)
        pair = potential_psph_characteristic(data, self.alpha_const(0.5))
        c = pair.chi_coeffs(np.linspace(-1, 1, 7))
        assert np.max(np.abs(c)) < 1e-12
        # but the parameterization is incompatible (no twist): recorded
        assert not pair.meta["speed_compatible"]

    def test_psi_antihermitian_for_complex_alpha(self):
        data = ingest_curve("line-asymptotic")
        pair = potential_psph_characteristic(data, self.alpha_const(0.3 + 0.4j))
        c = pair.psi_coeffs(np.linspace(-1, 1, 5))
        ah = c + np.conj(np.swapaxes(c, -1, -2))
        assert np.max(np.abs(ah)) < 1e-14

    def test_non_characteristic_data_rejected(self):
        data = ingest_curve("parabola")
        with pytest.raises(HypothesisViolation):
            potential_psph_characteristic(data, self.alpha_const(0.5))

    def test_vanishing_alpha_rejected(self):
        data = ingest_curve("line-asymptotic")

        def alpha(y):
            return np.asarray(y, dtype=complex)  # vanishes at 0

        with pytest.raises(HypothesisViolation, match="alpha"):
            potential_psph_characteristic(data, alpha)
