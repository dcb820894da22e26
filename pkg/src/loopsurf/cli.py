"""Command-line front end.

Subcommands:
  solve    run the pipeline for a catalog problem or an explicit problem kind
  check    re-run diagnostics on a produced mesh cache (or sweep grids)
  catalog  list built-in problems and curves

Exit codes: 0 all configured diagnostics pass; 2 configuration error;
3 hypothesis violation in the input data; 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .cauchy import HypothesisViolation
from .birkhoff import BigCellFailure
from .curves import CurveError, catalog_names
from .expr import ExprError
from .solve import (
    ConfigError, JobConfig, Numerics, catalog_problems, config_for,
    solve_problem, _CATALOG,
)

_CONFIG_KEYS = {
    "problem", "curve", "H", "alpha", "beta",
    "grid_x0", "grid_x1", "grid_y0", "grid_y1", "grid_nx", "grid_ny",
    "lambda0", "t0", "N", "M", "steps_per_unit", "section", "out_dir",
}


def read_config_file(path):
    """Flat key = value configuration; unknown keys are rejected."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _config_from_sources(file_cfg, args):
    problem = file_cfg.get("problem")
    if getattr(args, "problem", None):
        problem = args.problem
    if problem is None:
        raise ConfigError("no problem given (positional argument or config file)")

    base = config_for(problem) if problem in _CATALOG else JobConfig(problem=problem)
    overrides = {}

    def pick(cli_name, file_key, conv, field):
        val = getattr(args, cli_name, None)
        if val is None and file_key in file_cfg:
            val = file_cfg[file_key]
        if val is not None:
            overrides[field] = conv(val)

    pick("curve", "curve", str, "curve")
    pick("H", "H", float, "h")
    pick("alpha", "alpha", str, "alpha")
    pick("beta", "beta", str, "beta")
    pick("t0", "t0", float, "t0")
    pick("out", "out_dir", str, "out_dir")
    pick("lambda0", "lambda0",
         lambda s: tuple(float(v) for v in str(s).split(",")), "lambda0")

    grid = list(base.grid)
    names = ["grid_x0", "grid_x1", "grid_y0", "grid_y1", "grid_nx", "grid_ny"]
    for i, key in enumerate(names):
        if key in file_cfg:
            grid[i] = float(file_cfg[key]) if i < 4 else int(file_cfg[key])
    if getattr(args, "grid", None):
        parts = args.grid.split(",")
        if len(parts) != 6:
            raise ConfigError("--grid expects x0,x1,y0,y1,nx,ny")
        grid = [float(parts[0]), float(parts[1]), float(parts[2]),
                float(parts[3]), int(parts[4]), int(parts[5])]
    overrides["grid"] = tuple(grid)

    nm = base.numerics
    num_over = {}
    for cli_name, file_key, field, conv in (
            ("N", "N", "n", int), ("M", "M", "m", int),
            ("steps", "steps_per_unit", "steps_per_unit", int),
            ("section", "section", "section", int)):
        val = getattr(args, cli_name, None)
        if val is None and file_key in file_cfg:
            val = file_cfg[file_key]
        if val is not None:
            num_over[field] = conv(val)
    if num_over:
        overrides["numerics"] = replace(nm, **num_over)

    return replace(base, **overrides).validated()


def _resolve_problem_name(args):
    """Map the CLI problem grammar onto catalog ids / problem kinds."""
    name = args.problem
    if name in _CATALOG:
        return name
    if name == "cmc-revolution":
        axis = getattr(args, "axis", None) or "timelike"
        if axis == "timelike":
            args.curve = args.curve or f"circle:rho={getattr(args, 'rho', None) or 1.0}"
            return "cmc-cylinder"
        if axis == "null":
            return "cmc-null"
        raise ConfigError(f"unsupported revolution axis {axis!r} "
                          "(timelike and null are implemented)")
    if name in ("psph", "cmc", "cmc-null", "psph-char"):
        return name
    raise ConfigError(f"unknown problem {name!r}")


def _run_solve(args):
    file_cfg = read_config_file(args.config) if args.config else {}
    args.problem = _resolve_problem_name(args) if args.problem else None
    if args.problem == "cmc-revolution":
        raise ConfigError("unreachable")
    if getattr(args, "rho", None) and args.problem == "cmc-cylinder":
        args.curve = f"circle:rho={args.rho}"
    cfg = _config_from_sources(file_cfg, args)
    art = solve_problem(cfg)
    mesh = art.mesh
    cov = mesh.coverage()
    failed = int((~art.frames.mask).sum())
    print(f"problem: {cfg.problem}")
    print(f"grid: {cfg.grid[4]}x{cfg.grid[5]} on "
          f"[{cfg.grid[0]:g},{cfg.grid[1]:g}]x[{cfg.grid[2]:g},{cfg.grid[3]:g}]")
    print(f"mask coverage: {cov:.4f} ({failed} big-cell failures)")
    for line in art.diagnostics.summary_lines():
        print(line)
    if cfg.out_dir:
        from .export import export_artifacts
        paths = export_artifacts(art, cfg.out_dir)
        print("wrote: " + ", ".join(sorted(paths.values())))
    return 0 if art.diagnostics.passed else 4


def _run_check(args):
    if args.sweep:
        return _run_sweep(args)
    import os
    cache_path = args.cache
    if cache_path is None and args.out:
        cache_path = os.path.join(args.out, "cache.npz")
    if cache_path is None:
        raise ConfigError("check needs --cache FILE or --out DIR")
    from .export import check_from_cache, load_cache
    report = check_from_cache(load_cache(cache_path))
    for line in report.summary_lines():
        print(line)
    return 0 if report.passed else 4


def _run_sweep(args):
    """Refinement sweep: re-solve at a grid ladder, print convergence table."""
    file_cfg = read_config_file(args.config) if args.config else {}
    cfg = _config_from_sources(file_cfg, args)
    sizes = [int(s) for s in (args.sweep.split(",") if isinstance(args.sweep, str)
                              else ["41", "81", "161"])]
    rows = {}
    for nkt in sizes:
        c = replace(cfg, grid=cfg.grid[:4] + (nkt, nkt), out_dir=None)
        art = solve_problem(c)
        for name, chk in art.diagnostics.checks.items():
            rows.setdefault(name, []).append(chk.max_residual)
    print(f"{'check':34s} " + " ".join(f"{n:>12d}" for n in sizes) + "   rates")
    all_ok = True
    for name in sorted(rows):
        vals = rows[name]
        rates = [np.log2(vals[i] / vals[i + 1]) if vals[i + 1] > 0 else float("inf")
                 for i in range(len(vals) - 1)]
        print(f"{name:34s} " + " ".join(f"{v:12.3e}" for v in vals)
              + "   " + " ".join(f"{r:5.2f}" for r in rates))
    return 0 if all_ok else 4


def _run_catalog(_args):
    print("catalog problems:")
    for name, doc in catalog_problems().items():
        print(f"  {name:22s} {doc}")
    names = catalog_names()
    print("curves (cmc):  " + ", ".join(names["cmc"]))
    print("curves (psph): " + ", ".join(names["psph"]))
    print('CSV curves: "csv:<path>" with header t,fx,fy,fz[,vx,vy,vz]')
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="loopsurf",
        description="Geometric Cauchy problems for timelike CMC and "
                    "pseudospherical surfaces")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the construction pipeline")
    ps.add_argument("problem", nargs="?",
                    help="catalog id or kind: psph | cmc | cmc-null | "
                         "cmc-revolution | psph-char")
    ps.add_argument("--curve", help="catalog curve spec or csv:<path>")
    ps.add_argument("--H", type=float, help="mean curvature (CMC problems)")
    ps.add_argument("--alpha", help="free function of y (null/characteristic)")
    ps.add_argument("--beta", help="free function of y (null case)")
    ps.add_argument("--axis", choices=("timelike", "null"),
                    help="revolution axis (cmc-revolution)")
    ps.add_argument("--rho", type=float, help="revolution radius")
    ps.add_argument("--geodesic", action="store_true",
                    help="use the principal normal so the curve is a geodesic "
                         "(default for catalog pseudospherical curves)")
    ps.add_argument("--grid", help="x0,x1,y0,y1,nx,ny")
    ps.add_argument("--lambda0", help="comma list of deformation parameters")
    ps.add_argument("--t0", type=float, help="base curve parameter")
    ps.add_argument("--N", type=int, help="Laurent truncation order")
    ps.add_argument("--M", type=int, help="circle sample count")
    ps.add_argument("--steps", type=int, help="ODE steps per unit parameter")
    ps.add_argument("--section", type=int, help="Birkhoff section size")
    ps.add_argument("--config", help="flat key = value configuration file")
    ps.add_argument("--out", help="output directory")
    ps.set_defaults(func=_run_solve)

    pc = sub.add_parser("check", help="re-run diagnostics on produced artifacts")
    pc.add_argument("--cache", help="path to cache.npz from a solve")
    pc.add_argument("--out", help="output directory of a previous solve")
    pc.add_argument("--config", help="config file (required with --sweep)")
    pc.add_argument("--sweep", nargs="?", const="41,81,161",
                    help="refinement sweep sizes, e.g. 41,81,161")
    pc.add_argument("problem", nargs="?", help="problem for --sweep")
    pc.add_argument("--curve")
    pc.add_argument("--H", type=float)
    pc.add_argument("--alpha")
    pc.add_argument("--beta")
    pc.set_defaults(func=_run_check)

    pl = sub.add_parser("catalog", help="list built-in problems and curves")
    pl.set_defaults(func=_run_catalog)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CurveError, ExprError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return 3
    except (BigCellFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
