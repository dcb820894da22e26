import numpy as np
import pytest

from loopsurf.curves import CurveError, catalog_names, ingest_curve


def write_circle_csv(path, n, with_field=True, radius=1.0):
    ts = np.linspace(-1.0, 1.0, n)
    with open(path, "w") as fh:
        if with_field:
            fh.write("t,fx,fy,fz,vx,vy,vz\n")
        else:
            fh.write("t,fx,fy,fz\n")
        for t in ts:
            f = (radius * np.sin(t), radius * np.cos(t), 0.0)
            v = (radius, 0.0, 0.0)  # placeholder field
            row = [t, *f] + (list(v) if with_field else [])
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return ts


class TestCatalog:
    def test_names_cover_both_kinds(self):
        names = catalog_names()
        assert "parabola" in names["psph"]
        assert "circle" in names["cmc"]

    def test_parabola_matches_reference_parameterization(self):
        data = ingest_curve("parabola")
        t = np.array([0.0, 0.4, -0.9])
        want_f = np.stack([t, t ** 2, np.zeros_like(t)], axis=-1)
        assert np.max(np.abs(data.evaluators.f0(t) - want_f)) < 1e-14
        want_n = np.stack([2 * t, -np.ones_like(t), np.zeros_like(t)],
                          axis=-1) / np.sqrt(1 + 4 * t ** 2)[:, None]
        assert np.max(np.abs(data.evaluators.field(t) - want_n)) < 1e-13

    def test_lemniscate_parameterization(self):
        data = ingest_curve("lemniscate")
        t = np.array([0.3, -0.7])
        want = np.stack([np.cos(t) / (1 + np.sin(t) ** 2),
                         np.sin(2 * t) / (2 * (1 + np.sin(t) ** 2)),
                         np.zeros_like(t)], axis=-1)
        assert np.max(np.abs(data.evaluators.f0(t) - want)) < 1e-14

    def test_principal_normal_is_orthonormal_frame(self):
        for name in ("parabola", "ellipse:a=1,b=2", "helix", "cubic"):
            data = ingest_curve(name)
            n = data.field
            df = data.df
            assert np.max(np.abs(np.einsum("ij,ij->i", n, n) - 1)) < 1e-12
            assert np.max(np.abs(np.einsum("ij,ij->i", n, df))) < 1e-10
            # construction requires <f0', N0'> > 0
            assert np.min(np.einsum("ij,ij->i", df, data.dfield)) > 0

    def test_principal_derivative_chain_fd_oracle(self):
        data = ingest_curve("lemniscate")
        ev = data.evaluators
        t = np.linspace(-0.8, 0.8, 7)
        h = 1e-4
        fd1 = (8 * (ev.field(t + h) - ev.field(t - h))
               - (ev.field(t + 2 * h) - ev.field(t - 2 * h))) / (12 * h)
        assert np.max(np.abs(fd1 - ev.dfield(t))) < 1e-10
        fd2 = (8 * (ev.dfield(t + h) - ev.dfield(t - h))
               - (ev.dfield(t + 2 * h) - ev.dfield(t - 2 * h))) / (12 * h)
        assert np.max(np.abs(fd2 - ev.d2field(t))) < 1e-9

    def test_helix_frenet_quantities(self):
        # unit-speed helix with curvature kappa, torsion tau
        kappa, tau = 1.0, 0.8
        data = ingest_curve(f"helix:kappa={kappa},tau={tau}")
        speed = np.linalg.norm(data.df, axis=1)
        assert np.max(np.abs(speed - 1.0)) < 1e-12
        # |f0''| = kappa for unit speed
        assert np.max(np.abs(np.linalg.norm(data.d2f, axis=1) - kappa)) < 1e-12

    def test_unknown_curve_raises(self):
        with pytest.raises(CurveError):
            ingest_curve("klein-bottle")

    def test_bad_parameter_raises(self):
        with pytest.raises(CurveError):
            ingest_curve("ellipse:a")


class TestCSV:
    def test_roundtrip_and_fd4_convergence(self, tmp_path):
        errs = []
        for n in (41, 81):
            path = tmp_path / f"circle{n}.csv"
            write_circle_csv(path, n, with_field=False)
            data = ingest_curve(f"csv:{path}", kind="psph")
            t = data.t
            want_df = np.stack([np.cos(t), -np.sin(t), np.zeros_like(t)], -1)
            errs.append(np.max(np.abs(data.df - want_df)))
        # 4th order: halving h divides the error by ~16
        assert errs[0] / errs[1] > 10
        assert errs[1] < 1e-6

    def test_auto_normal_from_csv(self, tmp_path):
        path = tmp_path / "c.csv"
        write_circle_csv(path, 81, with_field=False)
        data = ingest_curve(f"csv:{path}", kind="psph")
        # circle: principal normal is radial; sign fixed by <f', N'> > 0
        t = data.t[10]
        got = data.field[10]
        want = np.array([np.sin(t), np.cos(t), 0.0])
        assert min(np.linalg.norm(got - want), np.linalg.norm(got + want)) < 1e-5
        assert np.min(np.einsum("ij,ij->i", data.df, data.dfield)) > 0

    def test_malformed_csv(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,fx,fy,fz\n0,1,2,zzz\n" + "\n".join(
            f"{i*0.1},1,2,3" for i in range(1, 10)))
        with pytest.raises(CurveError, match="malformed"):
            ingest_curve(f"csv:{path}", kind="psph")

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n" + "\n".join(
            f"{i*0.1},1,2,3" for i in range(10)))
        with pytest.raises(CurveError, match="header"):
            ingest_curve(f"csv:{path}", kind="psph")

    def test_nonuniform_grid(self, tmp_path):
        path = tmp_path / "bad.csv"
        ts = np.concatenate([np.linspace(0, 1, 8), [1.5]])
        path.write_text("t,fx,fy,fz\n" + "\n".join(
            f"{t},{np.sin(t)},{np.cos(t)},0" for t in ts))
        with pytest.raises(CurveError, match="uniform"):
            ingest_curve(f"csv:{path}", kind="psph")

    def test_too_few_samples(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_circle_csv(path, 7, with_field=False)
        with pytest.raises(CurveError, match="9 samples"):
            ingest_curve(f"csv:{path}", kind="psph")

    def test_evaluator_range_guard(self, tmp_path):
        path = tmp_path / "c.csv"
        write_circle_csv(path, 41, with_field=False)
        data = ingest_curve(f"csv:{path}", kind="psph")
        with pytest.raises(CurveError, match="range"):
            data.evaluators.f0(np.array([5.0]))
