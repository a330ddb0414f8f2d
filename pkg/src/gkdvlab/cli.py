"""Scenario-driven command line front end.

Subcommands: run, study, norms, split, catalog.  A run is defined entirely
by its config file; outputs are plot-ready CSV series, snapshot binaries
and a verdict summary.  Exit codes are a stable contract:

    0   success
    2   configuration error (also used by argument parsing)
    3   solver instability or contamination abort
    4   a verdict failed
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import os
import sys

import numpy as np

from . import __version__
from .background import residual_S, zhidkov_split
from .config import ConfigError, ScenarioConfig, BACKGROUND_VARIANTS, \
    NONLINEARITY_KINDS
from .diagnostics import collect_report, l2_growth_monitor
from .fieldio import read_snapshot, read_trajectory, write_snapshot, \
    write_trajectory
from .norms import (
    WeightSequence,
    bourgain_norm,
    enveloped_norm,
    extend_trajectory,
    sobolev_norm,
    trajectory_l2_sobolev,
    trajectory_sup_sobolev,
)
from .solver import SolverError, evolve, vanishing_viscosity
from .spectral import UnresolvedFieldError, l2_norm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_VERDICT = 4


def _say(quiet: bool, message: str):
    if not quiet:
        print(message)


def _write_metadata(directory: str, config: ScenarioConfig):
    with open(os.path.join(directory, "run_metadata.txt"), "w") as fh:
        fh.write(f"gkdvlab version = {__version__}\n")
        fh.write(f"numpy version = {np.__version__}\n")
        fh.write(f"grid id = L{config.grid_half_length!r}_n{config.grid_points}\n")
        fh.write("\n# config echo\n")
        fh.write(config.serialize())


def _run_one(config: ScenarioConfig, quiet: bool) -> int:
    grid = config.grid()
    bg = config.background()
    nl = config.nonlinearity()
    u0 = config.initial_data()
    outdir = config.output_directory
    os.makedirs(outdir, exist_ok=True)
    _write_metadata(outdir, config)

    verdicts = {}

    exact_nl = bg.associated_nonlinearity()
    if exact_nl is not None and exact_nl.coeffs == nl.coeffs:
        jet = bg.jet(0.0, grid.x)
        scale = float(np.max(np.abs(jet.psi_t) + np.abs(jet.psi_xxx)
                             + np.abs(nl.fp(jet.psi) * jet.psi_x)))
        try:
            forcing = residual_S(bg, nl, 0.0, grid)
        except UnresolvedFieldError as err:
            _say(quiet, f"unresolved field: {err}")
            return EXIT_INSTABILITY
        worst = float(np.max(np.abs(forcing.values)))
        verdicts["background-exactness"] = (
            worst <= 1e-10 * max(scale, 1e-300),
            f"max|S| = {worst:.3e}, scale {scale:.3e}",
        )

    try:
        traj = evolve(u0, bg, nl, config.solver, raise_on_failure=False)
    except (SolverError, UnresolvedFieldError) as err:
        _say(quiet, f"unresolved or unstable scenario: {err}")
        return EXIT_INSTABILITY
    if len(traj.fields) < 2:
        _say(quiet, f"run aborted immediately: {traj.abort_reason}")
        return EXIT_INSTABILITY

    omega = (WeightSequence.bracket_power(grid, config.omega_eps)
             if config.omega_eps > 0 else WeightSequence.ones(grid))
    report = collect_report(traj, bg, nl, config.diagnostics_s, omega,
                            config.solver.boundary_buffer)

    growth = l2_growth_monitor(traj, bg, nl)
    verdicts["l2-growth-bound"] = (
        growth.holds,
        f"A={growth.forcing_level:.3e} B={growth.growth_rate:.3f} "
        f"margin={growth.worst_margin:.3e}",
    )
    if config.initial_kind == "zero" and exact_nl is not None \
            and exact_nl.coeffs == nl.coeffs:
        sup_l2 = max(l2_norm(f) for f in traj.fields)
        verdicts["zero-perturbation-persistence"] = (
            sup_l2 <= 1e-8, f"sup L2 = {sup_l2:.3e}")

    report.verdicts = verdicts
    write_trajectory(os.path.join(outdir, "trajectory"), traj)
    report.write_csv(os.path.join(outdir, "diagnostics.csv"))
    report.write_verdicts(os.path.join(outdir, "verdicts.txt"))

    for name, (passed, detail) in sorted(verdicts.items()):
        _say(quiet, f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")
    if not traj.completed:
        _say(quiet, f"run aborted: {traj.abort_reason}")
        return EXIT_INSTABILITY
    if not report.all_pass:
        return EXIT_VERDICT
    _say(quiet, f"run complete: outputs in {outdir}")
    return EXIT_OK


def cmd_run(args) -> int:
    configs = [ScenarioConfig.from_file(p) for p in args.config]
    for i, cfg in enumerate(configs):
        if args.output:
            cfg.output_directory = (
                args.output if len(configs) == 1
                else os.path.join(args.output, f"scenario{i:02d}")
            )
    if len(configs) == 1 or args.jobs <= 1:
        status = EXIT_OK
        for cfg in configs:
            status = max(status, _run_one(cfg, args.quiet))
        return status
    with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_run_one_pickled,
                                [cfg.serialize() for cfg in configs],
                                [args.quiet] * len(configs)))
    return max(results)


def _run_one_pickled(serialized: str, quiet: bool) -> int:
    return _run_one(ScenarioConfig.parse(serialized), quiet)


def cmd_study(args) -> int:
    config = ScenarioConfig.from_file(args.config)
    grid = config.grid()
    bg = config.background()
    nl = config.nonlinearity()
    outpath = args.output or "study.txt"
    ladder = [float(tok) for tok in args.ladder.split(",")]

    rows = []
    aborted = None
    if args.kind == "viscosity":
        mus = ladder if ladder[-1] == 0.0 else ladder + [0.0]
        try:
            study = vanishing_viscosity(config.initial_data(), bg, nl, mus,
                                        config.solver,
                                        s=config.diagnostics_s)
            rows = [(mu, diff) for mu, diff in zip(study.mus,
                                                   study.differences)]
            fitted = study.fitted_rate
        except SolverError as err:
            aborted = str(err)
            fitted = float("nan")
    elif args.kind == "temporal":
        from dataclasses import replace

        dts = sorted(ladder, reverse=True)
        finest = dts[-1]
        try:
            u0 = config.initial_data()
            runs = {}
            for dt in dts:
                cadence = int(round(config.solver.horizon / dt))
                cfg = replace(config.solver, dt=dt, cadence=cadence)
                runs[dt] = evolve(u0, bg, nl, cfg).fields[-1]
            for dt in dts[:-1]:
                err = float(np.max(np.abs(runs[dt].values
                                          - runs[finest].values)))
                rows.append((dt, err))
            fitted = _fit_order([r[0] for r in rows], [r[1] for r in rows])
        except SolverError as err:
            aborted = str(err)
            fitted = float("nan")
    elif args.kind == "spatial":
        ns = sorted(int(v) for v in ladder)
        try:
            finest_n = ns[-1]
            results = {}
            for n in ns:
                cfg_n = ScenarioConfig.parse(config.serialize())
                cfg_n.grid_points = n
                results[n] = evolve(cfg_n.initial_data(), bg, nl,
                                    config.solver).fields[-1]
            for n in ns[:-1]:
                stride = finest_n // n
                err = float(np.max(np.abs(
                    results[n].values - results[finest_n].values[::stride])))
                rows.append((float(n), err))
            # spectral convergence has no power-law order; report the mean
            # number of decades gained per grid doubling instead
            drops = [np.log10(a[1] / b[1]) for a, b in zip(rows, rows[1:])
                     if b[1] > 0]
            fitted = float(np.mean(drops)) if drops else float("nan")
        except SolverError as err:
            aborted = str(err)
            fitted = float("nan")
    else:
        raise ConfigError(f"unknown study kind {args.kind!r}")

    with open(outpath, "w") as fh:
        fh.write(f"# study kind = {args.kind}\n")
        if aborted:
            fh.write(f"# aborted = {aborted}\n")
        fh.write("# level error\n")
        for level, err in rows:
            fh.write(f"{level!r} {err!r}\n")
        fh.write(f"# fitted order/rate = {fitted!r}\n")
    _say(args.quiet, f"study table written to {outpath}")
    return EXIT_INSTABILITY if aborted else EXIT_OK


def _fit_order(levels, errors):
    pairs = [(lv, er) for lv, er in zip(levels, errors) if er > 0]
    if len(pairs) < 2:
        return float("nan")
    lv, er = np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs])
    return float(np.polyfit(lv, er, 1)[0])


def cmd_norms(args) -> int:
    traj = read_trajectory(args.trajectory)
    grid = traj.grid
    omega = (WeightSequence.bracket_power(grid, args.omega_eps)
             if args.omega_eps > 0 else WeightSequence.ones(grid))
    s, b = args.s, args.b

    mat = traj.values_matrix()
    peak = np.max(np.abs(mat))
    decaying = peak == 0.0 or max(np.max(np.abs(mat[0])),
                                  np.max(np.abs(mat[-1]))) <= 1e-10 * peak
    work = traj if decaying else extend_trajectory(traj)

    # at b = 0 the modulation weight drops out and the restricted norm
    # collapses to the time-integrated H^s norm of the stored window
    b0_value = (bourgain_norm(work, s, 0.0) if decaying
                else trajectory_l2_sobolev(traj, s))
    rows = [
        ("sup_t_sobolev", s, "", trajectory_sup_sobolev(traj, s)),
        ("l2_t_sobolev", s, "", trajectory_l2_sobolev(traj, s)),
        ("sup_t_enveloped", s, "",
         max(enveloped_norm(f, s, omega) for f in traj.fields)),
        ("bourgain", s, b, bourgain_norm(work, s, b)),
        ("bourgain", s, 0.0, b0_value),
    ]
    grid_id = f"L{grid.half_length!r}_n{grid.n}"
    window = f"[{traj.t0!r};{traj.t0 + traj.dt * (len(traj) - 1)!r}]"
    writer = csv.writer(sys.stdout if args.output == "-" else
                        open(args.output, "w", newline=""))
    writer.writerow(["name", "s", "b", "value", "grid", "window"])
    for name, s_val, b_val, value in rows:
        writer.writerow([name, s_val, b_val, f"{value:.16e}", grid_id, window])
    return EXIT_OK


def cmd_split(args) -> int:
    fld, t = read_snapshot(args.input)
    smooth, remainder = zhidkov_split(fld)
    write_snapshot(args.output_prefix + "_smooth.f64", smooth, t)
    write_snapshot(args.output_prefix + "_remainder.f64", remainder, t)
    sup = float(np.max(np.abs(smooth.values)))
    hs = sobolev_norm(remainder, args.s)
    print(f"sup smooth part = {sup:.12e}")
    print(f"H^{args.s} remainder = {hs:.12e}")
    return EXIT_OK


def cmd_catalog(args) -> int:
    print("backgrounds:")
    params = {
        "zero": "",
        "mkdv_kink": "c > 0, sign",
        "gardner_kink": "c > 0, beta > 0, sign",
        "kdv_cnoidal": "c > 0, kappa in (0,1)",
        "mkdv_dnoidal": "c > 0, kappa in (0,1)",
        "synthetic": "",
        "tabulated": "file",
    }
    for variant in BACKGROUND_VARIANTS:
        suffix = f"  ({params[variant]})" if params[variant] else ""
        print(f"  {variant}{suffix}")
    print("nonlinearities:")
    for kind in NONLINEARITY_KINDS:
        print(f"  {kind}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gkdvlab",
        description="numerical laboratory for generalized KdV dynamics "
                    "on bounded backgrounds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute scenarios from config files")
    p_run.add_argument("--config", required=True, nargs="+",
                       help="scenario config path(s)")
    p_run.add_argument("--output", default=None, help="output directory override")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="run scenarios concurrently")
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_study = sub.add_parser("study", help="convergence ladders")
    p_study.add_argument("--kind", required=True,
                         choices=("spatial", "temporal", "viscosity"))
    p_study.add_argument("--config", required=True)
    p_study.add_argument("--ladder", required=True,
                         help="comma-separated levels, coarse to fine")
    p_study.add_argument("--output", default=None)
    p_study.add_argument("--quiet", action="store_true")
    p_study.set_defaults(func=cmd_study)

    p_norms = sub.add_parser("norms", help="norm table for a stored trajectory")
    p_norms.add_argument("--trajectory", required=True,
                         help="trajectory directory")
    p_norms.add_argument("--s", type=float, default=1.0)
    p_norms.add_argument("--b", type=float, default=1.0)
    p_norms.add_argument("--omega-eps", type=float, default=0.0)
    p_norms.add_argument("--output", default="-")
    p_norms.set_defaults(func=cmd_norms)

    p_split = sub.add_parser("split",
                             help="smooth/decaying split of a field snapshot")
    p_split.add_argument("--input", required=True)
    p_split.add_argument("--output-prefix", required=True)
    p_split.add_argument("--s", type=float, default=1.0)
    p_split.set_defaults(func=cmd_split)

    p_cat = sub.add_parser("catalog",
                           help="list available backgrounds and nonlinearities")
    p_cat.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
