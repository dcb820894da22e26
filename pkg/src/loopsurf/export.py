"""Mesh and diagnostics export: OBJ, CSV, JSON, and a check cache.

CSV uses %.17g so identical configs reproduce byte-identical files; OBJ
drops quads touching masked nodes (holes where the construction left the
big cell or regularity failed).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .surface import CheckResult, DiagnosticsReport, SurfaceMesh

__all__ = ["write_obj", "write_mesh_csv", "write_diagnostics",
           "write_cache", "load_cache", "check_from_cache"]


def _g17(v):
    return f"{v:.17g}"


def write_mesh_csv(mesh: SurfaceMesh, path):
    """Rows x,y,u,v,fx,fy,fz,nx,ny,nz,mask over the full grid (row-major)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,u,v,fx,fy,fz,nx,ny,nz,mask\n")
        for i, xv in enumerate(mesh.x):
            for j, yv in enumerate(mesh.y):
                u = 0.5 * (xv - yv)
                v = 0.5 * (xv + yv)
                p = mesh.positions[i, j]
                n = mesh.normals[i, j]
                vals = [xv, yv, u, v, p[0], p[1], p[2], n[0], n[1], n[2]]
                fh.write(",".join(_g17(w) for w in vals)
                         + f",{int(mesh.mask[i, j])}\n")


def write_obj(mesh: SurfaceMesh, path):
    """Vertices + vertex normals + quad faces, skipping masked nodes."""
    nx, ny = mesh.mask.shape
    index = np.zeros((nx, ny), dtype=int)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# loopsurf mesh: kind={mesh.kind} form={mesh.form}\n")
        count = 0
        for i in range(nx):
            for j in range(ny):
                if not mesh.mask[i, j]:
                    continue
                count += 1
                index[i, j] = count
                p = mesh.positions[i, j]
                n = mesh.normals[i, j]
                fh.write(f"v {_g17(p[0])} {_g17(p[1])} {_g17(p[2])}\n")
                fh.write(f"vn {_g17(n[0])} {_g17(n[1])} {_g17(n[2])}\n")
        for i in range(nx - 1):
            for j in range(ny - 1):
                ids = (index[i, j], index[i + 1, j],
                       index[i + 1, j + 1], index[i, j + 1])
                if all(ids):
                    fh.write("f " + " ".join(f"{k}//{k}" for k in ids) + "\n")


def write_diagnostics(report: DiagnosticsReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
        fh.write("\n")


# ---------------------------------------------------------------------------
# check cache: everything the mesh-side diagnostics need, no loop data
# ---------------------------------------------------------------------------

def write_cache(artifacts, path):
    from .surface import _curve_nodes  # local import: private helper

    mesh = artifacts.mesh
    locus = mesh.meta.get("curve_locus", "antidiagonal")
    payload = {
        "x": mesh.x, "y": mesh.y,
        "positions": mesh.positions, "normals": mesh.normals,
        "mask": mesh.mask,
        "form": np.array(mesh.form), "kind": np.array(mesh.kind),
        "locus": np.array(locus),
        "normal_flipped": np.array(bool(mesh.meta.get("normal_flipped", False))),
        "problem": np.array(str(mesh.meta.get("problem", ""))),
        "h_target": np.array(float(artifacts.config.h or 0.0)),
    }
    data = artifacts.data
    if data is not None:
        nodes = _curve_nodes(mesh, locus)
        params = np.array([t for (_, _, t) in nodes])
        payload["curve_t"] = params
        payload["curve_f0"] = data.evaluators.f0(params)
        payload["curve_df"] = data.evaluators.df(params)
        payload["curve_d2f"] = data.evaluators.d2f(params)
        payload["curve_field"] = data.evaluators.field(params)
        payload["geodesic"] = np.array(bool(data.meta.get("principal_normal")))
    gauge = artifacts.gauge
    if mesh.kind == "psph" and gauge is not None:
        payload["gauge_phi"] = gauge.phi
        payload["gauge_fx"] = gauge.fx_abs
        payload["gauge_fy"] = gauge.fy_abs
        payload["gauge_weak"] = gauge.weakly_regular
        payload["gauge_singular"] = gauge.singular
    np.savez_compressed(path, **payload)


def load_cache(path):
    return dict(np.load(path, allow_pickle=False))


class _TabulatedCurve:
    """Evaluator shim over tabulated curve values at the cached parameters."""

    class _Lookup:
        def __init__(self, params, values):
            self.params = params
            self.values = values

        def __call__(self, t):
            idx = np.argmin(np.abs(self.params - t))
            if abs(self.params[idx] - t) > 1e-9:
                raise KeyError(f"parameter {t} not tabulated")
            return self.values[idx]

    def __init__(self, cache):
        p = cache["curve_t"]
        self.evaluators = type("Ev", (), {})()
        self.evaluators.f0 = self._Lookup(p, cache["curve_f0"])
        self.evaluators.df = self._Lookup(p, cache["curve_df"])
        self.evaluators.d2f = self._Lookup(p, cache["curve_d2f"])
        self.evaluators.field = self._Lookup(p, cache["curve_field"])
        self.meta = {}


def check_from_cache(cache) -> DiagnosticsReport:
    """Re-run the mesh-side diagnostics from a solve cache."""
    from .surface import (cauchy_residual, gauss_curvature, geodesic_residual,
                          mean_curvature, sine_gordon_residual)

    mesh = SurfaceMesh(
        x=cache["x"], y=cache["y"], positions=cache["positions"],
        normals=cache["normals"], mask=cache["mask"].astype(bool),
        form=str(cache["form"]), kind=str(cache["kind"]),
        meta={"curve_locus": str(cache["locus"]),
              "normal_flipped": bool(cache["normal_flipped"])})
    report = DiagnosticsReport()
    if "curve_t" in cache:
        data = _TabulatedCurve(cache)
        for res in cauchy_residual(mesh, data,
                                   locus=str(cache["locus"])).values():
            report.add(res)
        if mesh.kind == "psph" and bool(cache.get("geodesic", False)):
            report.add(geodesic_residual(mesh, data, locus=str(cache["locus"])))
    if mesh.kind == "cmc":
        _, hres = mean_curvature(mesh, float(cache["h_target"]))
        report.add(hres)
    else:
        _, kres = gauss_curvature(mesh)
        report.add(kres)
        if "gauge_phi" in cache:
            gauge = type("G", (), {})()
            gauge.phi = cache["gauge_phi"]
            gauge.fx_abs = cache["gauge_fx"]
            gauge.fy_abs = cache["gauge_fy"]
            gauge.weakly_regular = cache["gauge_weak"].astype(bool)
            gauge.singular = cache["gauge_singular"].astype(bool)
            frames = type("F", (), {})()
            frames.x = cache["x"]
            frames.y = cache["y"]
            frames.mask = cache["mask"].astype(bool)
            for res in sine_gordon_residual(frames, gauge).values():
                report.add(res)
    cov = float(mesh.mask.mean())
    report.add(CheckResult(
        name="big_cell_coverage", max_residual=1.0 - cov,
        mean_residual=1.0 - cov, tol=1.0, passed=True,
        extra={"coverage": cov}))
    return report


def export_artifacts(artifacts, out_dir):
    """Write mesh (OBJ + CSV per lambda0), diagnostics JSON, and the cache."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for lam, mesh in artifacts.meshes.items():
        tag = "" if lam == artifacts.config.lambda0[0] else f"_lam{lam:g}"
        csv_path = os.path.join(out_dir, f"mesh{tag}.csv")
        obj_path = os.path.join(out_dir, f"mesh{tag}.obj")
        write_mesh_csv(mesh, csv_path)
        write_obj(mesh, obj_path)
        paths[f"csv{tag}"] = csv_path
        paths[f"obj{tag}"] = obj_path
    diag_path = os.path.join(out_dir, "diagnostics.json")
    write_diagnostics(artifacts.diagnostics, diag_path)
    cache_path = os.path.join(out_dir, "cache.npz")
    write_cache(artifacts, cache_path)
    cfg_path = os.path.join(out_dir, "config.json")
    cfg = artifacts.config
    with open(cfg_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({
            "problem": cfg.problem, "curve": cfg.curve, "H": cfg.h,
            "alpha": cfg.alpha, "beta": cfg.beta, "grid": list(cfg.grid),
            "lambda0": list(cfg.lambda0), "t0": cfg.t0,
            "numerics": {"N": cfg.numerics.n, "M": cfg.numerics.m,
                         "steps_per_unit": cfg.numerics.steps_per_unit},
        }, fh, sort_keys=True, indent=2)
        fh.write("\n")
    paths.update({"diagnostics": diag_path, "cache": cache_path,
                  "config": cfg_path})
    return paths
