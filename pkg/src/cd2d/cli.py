"""Command-line front end: single solves, convergence sweeps, property checks.

Commands:

* ``solve``  - one (eps, N) run; writes a plot-ready grid dump plus a
  metadata JSON (transition widths, residual, wall time).
* ``sweep``  - an (eps, N) error table via the double-mesh estimate;
  writes CSV and JSON reports.
* ``verify`` - runs the built-in property checks (matrix sign structure,
  inverse positivity, stability bound, variant agreement, smooth-oracle
  convergence order) and reports pass/fail per property.

Configuration may come from an INI file (section ``[run]``) with the same
keys as the flags; explicit flags win over the file.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, mesh as mesh_mod
from .assembly import Variant, assemble_system, m_matrix_check
from .analysis import DoubleMeshMode
from .errors import CD2DError
from .problems import (ProblemSpec, builtin_problem, check_mesh_parameter,
                       problem_names, sample_field, validate)
from .solve import residual_norm, solve_direct, write_grid_dump

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

FULL_EPSILONS = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
FULL_NS = [32, 64, 128, 256, 512, 1024]
DESK_N_CAP = 256


@dataclass
class RunConfig:
    problem: str = "Example1"
    epsilons: list[float] = None
    Ns: list[int] = None
    variant: Variant = Variant.TRANSFORMED
    double_mesh: DoubleMeshMode = DoubleMeshMode.BISECT
    workers: int = 1
    out_dir: str = "."
    desk: bool = False
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.epsilons is None:
            self.epsilons = list(FULL_EPSILONS)
        if self.Ns is None:
            self.Ns = list(FULL_NS)
        if self.desk:
            self.Ns = [n for n in self.Ns if n <= DESK_N_CAP]


def _parse_floats(text: str) -> list[float]:
    parts = text.replace(",", " ").split()
    return [float(p) for p in parts]


def _parse_ints(text: str) -> list[int]:
    parts = text.replace(",", " ").split()
    return [int(p) for p in parts]


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def parse_config(text: str) -> RunConfig:
    """Parse an INI config (section [run]) into a RunConfig."""
    parser = configparser.ConfigParser()
    parser.read_string(text)
    if not parser.has_section("run"):
        raise CD2DError("config file has no [run] section")
    sec = parser["run"]
    kwargs = {}
    if "problem" in sec:
        kwargs["problem"] = sec["problem"].strip()
    if "epsilons" in sec:
        kwargs["epsilons"] = _parse_floats(sec["epsilons"])
    if "ns" in sec:
        kwargs["Ns"] = _parse_ints(sec["ns"])
    if "variant" in sec:
        kwargs["variant"] = Variant(sec["variant"].strip().lower())
    if "double_mesh" in sec:
        kwargs["double_mesh"] = DoubleMeshMode(sec["double_mesh"].strip().lower())
    if "workers" in sec:
        kwargs["workers"] = int(sec["workers"])
    if "out_dir" in sec:
        kwargs["out_dir"] = sec["out_dir"].strip()
    if "desk" in sec:
        kwargs["desk"] = _parse_bool(sec["desk"])
    if "alpha" in sec and sec["alpha"].strip():
        kwargs["alpha"] = float(sec["alpha"])
    if "beta" in sec and sec["beta"].strip():
        kwargs["beta"] = float(sec["beta"])
    return RunConfig(**kwargs)


def serialize_config(config: RunConfig) -> str:
    """Render a RunConfig back to INI text (round-trips through parse_config)."""
    parser = configparser.ConfigParser()
    parser["run"] = {
        "problem": config.problem,
        "epsilons": ", ".join(f"{e:g}" for e in config.epsilons),
        "ns": ", ".join(str(n) for n in config.Ns),
        "variant": config.variant.value,
        "double_mesh": config.double_mesh.value,
        "workers": str(config.workers),
        "out_dir": config.out_dir,
        "desk": str(config.desk).lower(),
    }
    if config.alpha is not None:
        parser["run"]["alpha"] = f"{config.alpha:g}"
    if config.beta is not None:
        parser["run"]["beta"] = f"{config.beta:g}"
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _merge_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = parse_config(Path(args.config).read_text())
    else:
        config = RunConfig()
    if args.problem is not None:
        config.problem = args.problem
    if args.epsilon:
        config.epsilons = list(args.epsilon)
    if args.N:
        config.Ns = list(args.N)
    if args.variant is not None:
        config.variant = Variant(args.variant)
    if args.double_mesh is not None:
        config.double_mesh = DoubleMeshMode(args.double_mesh)
    if args.workers is not None:
        config.workers = args.workers
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.alpha is not None:
        config.alpha = args.alpha
    if args.beta is not None:
        config.beta = args.beta
    if args.desk:
        config.desk = True
        config.Ns = [n for n in config.Ns if n <= DESK_N_CAP]
    return config


def _load_spec(config: RunConfig) -> ProblemSpec:
    spec = builtin_problem(config.problem)
    if config.alpha is not None:
        spec = replace(spec, alpha=config.alpha)
    if config.beta is not None:
        spec = replace(spec, beta=config.beta)
    return spec


def _eps_tag(eps: float) -> str:
    return f"{eps:g}".replace("-", "m")


def cmd_solve(config: RunConfig) -> int:
    if len(config.epsilons) != 1 or len(config.Ns) != 1:
        print("solve needs exactly one --epsilon and one --N", file=sys.stderr)
        return EXIT_CONFIG
    eps, N = config.epsilons[0], config.Ns[0]
    try:
        spec = _load_spec(config).with_epsilon(eps)
        report = validate(spec, N)
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        if not report.ok:
            for err in report.errors:
                print(f"error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        params = mesh_mod.compute_transition_points(spec, N)
        tm = mesh_mod.TensorMesh(x=mesh_mod.build_mesh_x(params, spec.d1),
                                 y=mesh_mod.build_mesh_y(params, spec.d2))
    except CD2DError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        start = time.perf_counter()
        system = assemble_system(spec, tm, config.variant)
        solution = solve_direct(system)
        wall = time.perf_counter() - start
        residual = residual_norm(system, solution)
    except CD2DError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"u_{spec.name.lower()}_{config.variant.value}_eps{_eps_tag(eps)}_N{N}"
    grid_path = out / f"{stem}.dat"
    with open(grid_path, "w") as fh:
        write_grid_dump(solution, fh)
    meta = {
        "problem": spec.name,
        "variant": config.variant.value,
        "epsilon": eps,
        "N": N,
        "sigma_x": params.sigma_x,
        "sigma_y": params.sigma_y,
        "residual": residual,
        "max_abs_u": solution.max_norm(),
        "wall_time": wall,
        "warnings": report.warnings,
    }
    meta_path = out / f"{stem}.json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {grid_path} and {meta_path}")
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    if not config.epsilons or not config.Ns:
        print("sweep needs at least one epsilon and one N", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = _load_spec(config)
        for N in config.Ns:
            check_mesh_parameter(N)
    except CD2DError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = analysis.run_sweep(spec, config.epsilons, config.Ns,
                                variant=config.variant, mode=config.double_mesh,
                                workers=config.workers)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = (f"table_{spec.name.lower()}_{config.variant.value}"
            f"_{config.double_mesh.value}")
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w") as fh:
        analysis.write_table_csv(result.table, fh)
    json_path = out / f"{stem}.json"
    with open(json_path, "w") as fh:
        json.dump(analysis.sweep_to_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(analysis.format_table_text(result.table))
    print(f"wrote {csv_path} and {json_path}")
    failed = [c for c in result.cells if not c.ok]
    for cell in failed:
        print(f"missing cell eps={cell.epsilon:g} N={cell.N}: {cell.error}",
              file=sys.stderr)
    return EXIT_OK if not failed else EXIT_INCOMPLETE


def stability_bound(spec: ProblemSpec, tm: mesh_mod.TensorMesh) -> float:
    """(1/alpha) max|f| + max|q|, both sampled on the mesh."""
    n = tm.n
    half = n // 2
    xs, ys = tm.x.points, tm.y.points
    f_max = 0.0
    blocks = [
        (xs[:half + 1], ys[:half + 1], 0),
        (xs[half:], ys[:half + 1], 1),
        (xs[:half + 1], ys[half:], 2),
        (xs[half:], ys[half:], 3),
    ]
    for xq, yq, k in blocks:
        vals = sample_field(spec.f_quadrants[k], xq, yq)
        f_max = max(f_max, float(np.max(np.abs(vals))))
    q_max = 0.0
    for trace in spec.q_edges:
        vals = [abs(float(trace(t))) for t in np.concatenate([xs, ys])]
        q_max = max(q_max, max(vals))
    return f_max / spec.alpha + q_max


def cmd_verify(config: RunConfig) -> int:
    try:
        spec = _load_spec(config)
    except CD2DError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    eps = config.epsilons[0]
    spec = spec.with_epsilon(eps)
    checks: list[tuple[str, bool, str]] = []

    tm16 = mesh_mod.build_tensor_mesh(spec, 16)
    system = assemble_system(spec, tm16, config.variant)
    report = m_matrix_check(system, compute_inverse=True)
    checks.append((
        f"matrix sign structure ({config.variant.value}, N=16)",
        report.sign_ok, report.summary()))
    inv_ok = (report.min_inverse_entry is not None
              and report.min_inverse_entry >= -1e-12)
    checks.append((
        "inverse positivity (N=16)", inv_ok,
        f"min inverse entry {report.min_inverse_entry:.3e}"))

    bound_ok = True
    detail = []
    for N in (16, 32):
        tm = mesh_mod.build_tensor_mesh(spec, N)
        sol = solve_direct(assemble_system(spec, tm, config.variant))
        bound = stability_bound(spec, tm)
        detail.append(f"N={N}: |U|={sol.max_norm():.4e} bound={bound:.4e}")
        if sol.max_norm() > bound:
            bound_ok = False
    checks.append(("stability bound", bound_ok, "; ".join(detail)))

    tm = mesh_mod.build_tensor_mesh(spec, 16)
    u_t = solve_direct(assemble_system(spec, tm, Variant.TRANSFORMED))
    u_r = solve_direct(assemble_system(spec, tm, Variant.RAW))
    diff = float(np.max(np.abs(u_t.values - u_r.values)))
    checks.append(("raw/transformed agreement (N=16)", diff <= 1e-9,
                   f"max difference {diff:.3e}"))

    mms = analysis.manufactured_solution_study([32, 64, 128], config.variant)
    orders = mms.E_uniform
    mms_ok = bool(np.all((orders >= 0.9) & (orders <= 1.15)))
    checks.append(("smooth-oracle order in [0.90, 1.15]", mms_ok,
                   "orders " + ", ".join(f"{o:.3f}" for o in orders)))

    all_ok = True
    for name, ok, detail_text in checks:
        status = "PASS" if ok else "FAIL"
        all_ok &= ok
        print(f"{status}  {name}: {detail_text}")
    return EXIT_OK if all_ok else EXIT_INCOMPLETE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cd2d",
        description="Fitted-mesh upwind solver for 2-D convection-diffusion "
                    "with a discontinuous source")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("solve", "single (eps, N) solve with grid dump"),
                            ("sweep", "double-mesh convergence table"),
                            ("verify", "property checks")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--problem", default=None,
                       help="registered problem name (builtin: "
                            + ", ".join(problem_names()) + ")")
        p.add_argument("--epsilon", type=float, action="append", default=None,
                       help="perturbation parameter (repeatable)")
        p.add_argument("--N", type=int, action="append", default=None,
                       help="mesh intervals per axis, multiple of 8 (repeatable)")
        p.add_argument("--variant", choices=[v.value for v in Variant],
                       default=None, help="interface row treatment")
        p.add_argument("--double-mesh", dest="double_mesh",
                       choices=[m.value for m in DoubleMeshMode], default=None,
                       help="companion-mesh convention for the error estimate")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel sweep cells")
        p.add_argument("--out-dir", dest="out_dir", default=None,
                       help="output directory")
        p.add_argument("--alpha", type=float, default=None,
                       help="override the stored lower bound on a")
        p.add_argument("--beta", type=float, default=None,
                       help="override the stored beta (beta^2 bounds b)")
        p.add_argument("--desk", action="store_true",
                       help="cap N at 256 for quick runs")
        p.add_argument("--config", default=None,
                       help="INI config file; flags override it")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_config(args)
    except (CD2DError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "solve":
        return cmd_solve(config)
    if args.command == "sweep":
        return cmd_sweep(config)
    return cmd_verify(config)


if __name__ == "__main__":
    sys.exit(main())
