"""Command-line front end.

Subcommands: run (time integration with diagnostics), verify (structural
property suite plus a short integration check), convergence (refinement
ladder on a manufactured solution), operators-check (operator identities
and matrix export), translate (time-translate compactness table).

Exit codes: 0 success, 1 a verdict failed, 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import output
from .config import ConfigError, parse_config
from .grid import midpoint_refined, uniform_grid
from .mms import mms_problem
from .operators import Operators
from .scheme import ProjectionScheme
from .verify import (
    convergence_study,
    property_suite,
    summed_step_increments,
    translate_diagnostic,
)

__all__ = ["main"]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="macstag",
        description="Incremental projection solver and structural verification harness "
        "for the incompressible Navier-Stokes equations on staggered grids.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="configuration file (key=value sections)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.directory)")
    common.add_argument("--seed", type=int, metavar="U64", help="seed for randomized checks")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate the configured problem")
    sub.add_parser("verify", parents=[common], help="structural property suite and short run check")
    p = sub.add_parser("convergence", parents=[common], help="refinement study on the configured problem")
    p.add_argument("--levels", type=int, default=3, metavar="K", help="number of refinement levels")
    sub.add_parser("operators-check", parents=[common], help="operator identities, export matrices")
    p = sub.add_parser("translate", parents=[common], help="time-translate compactness table")
    p.add_argument(
        "--taus",
        default="1,2,4",
        metavar="K1,K2,..",
        help="translates as positive integer multiples of dt",
    )
    return parser


def _load(args):
    overrides = {}
    if args.out is not None:
        overrides[("output", "directory")] = args.out
    if args.seed is not None:
        overrides[("output", "seed")] = args.seed
    return parse_config(args.config, env=os.environ, overrides=overrides)


def _print_step(diag):
    print(
        f"step {diag.n:5d}  t={diag.t:.6g}  energy={diag.kinetic_energy:.9e}  "
        f"div_max={diag.div_max:.3e}  iters={diag.pred_iters}/{diag.corr_iters}"
    )


def cmd_run(cfg):
    grid = cfg.build_grid()
    problem = mms_problem(cfg.problem)
    if problem.dim != grid.dim:
        raise ConfigError([f"problem {cfg.problem!r} is {problem.dim}D but the grid is {grid.dim}D"])
    scheme = ProjectionScheme(grid, **cfg.scheme_kwargs())
    traj = scheme.run(problem.initial, problem.forcing, cfg.t_final, cfg.steps, progress=_print_step)

    os.makedirs(cfg.out_dir, exist_ok=True)
    output.write_diagnostics_csv(os.path.join(cfg.out_dir, "diagnostics.csv"), traj.diagnostics)
    output.write_text(os.path.join(cfg.out_dir, "config.resolved.ini"), cfg.to_ini())
    snaps = []
    if cfg.cadence > 0:
        snaps = [n for n in range(0, cfg.steps + 1) if n % cfg.cadence == 0]
    if cfg.steps not in snaps:
        snaps.append(cfg.steps)
    for n in snaps:
        base = f"fields_{n:06d}"
        if cfg.output_format == "vtk":
            output.write_vtk(
                os.path.join(cfg.out_dir, base + ".vtk"), grid, traj.velocities[n], traj.pressures[n]
            )
        else:
            output.write_fields_csv(cfg.out_dir, base, grid, traj.velocities[n], traj.pressures[n])
    final = traj.diagnostics[-1]
    print(
        f"run complete: {cfg.steps} steps to t={cfg.t_final:g}, "
        f"final energy {final.kinetic_energy:.9e}, outputs in {cfg.out_dir}"
    )
    return 0


def _default_verify_grid():
    return uniform_grid((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (4, 4, 4))


def cmd_verify(cfg, args):
    grid = _default_verify_grid() if args.config is None else cfg.build_grid()
    report = property_suite(grid, seed=cfg.seed)
    lines = [report.summary()]

    problem = mms_problem(cfg.problem)
    if problem.dim != grid.dim:
        problem = mms_problem("vortex2d" if grid.dim == 2 else "vortex3d")
    scheme = ProjectionScheme(grid, **cfg.scheme_kwargs())
    steps = min(cfg.steps, 8)
    traj = scheme.run(problem.initial, problem.forcing, min(cfg.t_final, 0.25), steps)
    margin = min(d.energy_residual / max(d.energy_scale, 1e-300) for d in traj.diagnostics)
    div_worst = max(d.div_max for d in traj.diagnostics)
    energy_ok = margin >= -1e-9
    div_ok = div_worst <= 10.0 * cfg.poisson_tol
    lines.append(
        f"{'pass' if energy_ok else 'FAIL'}  per-step energy inequality over {steps} steps: "
        f"worst relative margin {margin:.3e} (allowed >= -1e-09)"
    )
    lines.append(
        f"{'pass' if div_ok else 'FAIL'}  post-correction divergence: worst {div_worst:.3e} "
        f"(allowed <= {10.0 * cfg.poisson_tol:.1e})"
    )
    ok = report.passed and energy_ok and div_ok
    lines.append("verify: " + ("pass" if ok else "FAIL"))
    text = "\n".join(lines)
    print(text)
    os.makedirs(cfg.out_dir, exist_ok=True)
    output.write_text(os.path.join(cfg.out_dir, "verify_report.txt"), text)
    return 0 if ok else 1


def cmd_operators_check(cfg, args):
    grid = _default_verify_grid() if args.config is None else cfg.build_grid()
    report = property_suite(grid, seed=cfg.seed)
    print(report.summary())
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = Operators(grid).export_matrices(os.path.join(cfg.out_dir, "matrices"))
    output.write_text(os.path.join(cfg.out_dir, "operators_report.txt"), report.summary())
    print(f"exported {len(paths)} matrices to {os.path.join(cfg.out_dir, 'matrices')}")
    return 0 if report.passed else 1


def cmd_convergence(cfg, args):
    if args.levels < 1:
        raise ConfigError([f"--levels must be >= 1, got {args.levels}"])
    problem = mms_problem(cfg.problem)
    grid = cfg.build_grid()
    if problem.dim != grid.dim:
        raise ConfigError([f"problem {cfg.problem!r} is {problem.dim}D but the grid is {grid.dim}D"])
    levels = []
    steps = cfg.steps
    for _ in range(args.levels):
        levels.append((grid, steps))
        grid = midpoint_refined(grid)
        steps *= 2
    report = convergence_study(problem, levels, cfg.t_final, **cfg.scheme_kwargs())
    print(report.summary())
    os.makedirs(cfg.out_dir, exist_ok=True)
    output.write_study_csv(os.path.join(cfg.out_dir, "study.csv"), report)
    output.write_text(os.path.join(cfg.out_dir, "study_summary.txt"), report.summary())
    return 0 if report.passed() else 1


def cmd_translate(cfg, args):
    try:
        multiples = [int(tok) for tok in args.taus.split(",") if tok.strip()]
    except ValueError:
        print(f"error: cannot parse --taus {args.taus!r} as integers", file=sys.stderr)
        return 2
    if not multiples or any(k < 1 for k in multiples):
        print(f"error: --taus must be positive integers, got {args.taus!r}", file=sys.stderr)
        return 2
    problem = mms_problem(cfg.problem)
    grid = cfg.build_grid()
    if problem.dim != grid.dim:
        raise ConfigError([f"problem {cfg.problem!r} is {problem.dim}D but the grid is {grid.dim}D"])
    scheme = ProjectionScheme(grid, **cfg.scheme_kwargs())
    traj = scheme.run(problem.initial, problem.forcing, cfg.t_final, cfg.steps)
    dt = traj.dt
    bad = [k for k in multiples if k >= cfg.steps]
    if bad:
        print(f"error: translates {bad} do not fit a {cfg.steps}-step trajectory", file=sys.stderr)
        return 2
    rows = translate_diagnostic(traj, [k * dt for k in multiples])
    baseline = summed_step_increments(traj)
    ok = True
    print(f"translate table for {cfg.problem} ({cfg.steps} steps, dt={dt:.5g})")
    print("tau        steps  l2_translate_sq   star_translate_sq")
    for r in rows:
        print(f"{r.tau:<10.5g} {r.steps:<6d} {r.l2_sq:<17.10e} {r.star_sq:<17.10e}")
        if r.star_sq > r.l2_sq + 1e-13 * max(1.0, r.l2_sq):
            ok = False
    print(f"summed step increments (exact tau=dt integral): {baseline:.10e}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    output.write_translate_csv(os.path.join(cfg.out_dir, "translate.csv"), rows)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args)
        if args.command == "operators-check":
            return cmd_operators_check(cfg, args)
        if args.command == "convergence":
            return cmd_convergence(cfg, args)
        if args.command == "translate":
            return cmd_translate(cfg, args)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
