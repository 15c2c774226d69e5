"""Command line front end: ``bhlab run | sweep | verify``.

Exit status is 0 when every verdict passes, 2 when a verdict fails and 1
on configuration or execution errors.
"""
import argparse
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import artifacts
from .calculus import get_pair
from .config import ConfigError, dump_config, load_config
from .errors import BHLabError
from .hilbert import SpectralGrid, make_source
from .solver import (SchemeConfig, evolve, front_position, riemann_field, write_checkpoint)
from .stability import (discretisation_budget, envelope_check, loglog_slope,
                        run_envelope_constant, run_stability, shift_l2_control)
from .verify import SUITES, SWEEP_AMPLITUDES, format_table, run_suite

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


# ---------------------------------------------------------------------------
# riemann runs

def run_riemann(cfg, outdir):
    sc = cfg.scenario
    grid = SpectralGrid(sc.n, sc.length)
    pair = get_pair(sc.pair, sc.bound)
    src = make_source(sc.source)
    uL, uR = cfg.u_left, cfg.u_right
    state0 = riemann_field(grid, pair.flux, uL, uR, cfg.x0)
    traj = evolve(state0, pair, src, SchemeConfig(cfl=sc.cfl, t_end=sc.t_end))
    final = traj.states[-1]
    T = final.time
    masses = np.array([s.mass() for s in traj.states])
    drift = float(np.max(np.abs(np.diff(masses)))) if masses.size > 1 else 0.0
    exact = riemann_field(grid, pair.flux, uL, uR, cfg.x0, T).values

    write_checkpoint(outdir / "initial.bhlb", state0)
    write_checkpoint(outdir / "final.bhlb", final)
    artifacts.write_table(outdir / "field.csv", ["x", "u", "u_exact"],
                          [grid.x, final.values, exact])

    summary = {"kind": "riemann", "n": sc.n, "dx": grid.dx, "t_end": T,
               "steps": len(traj.states) - 1, "u_left": uL, "u_right": uR,
               "l1_error": float(np.sum(np.abs(final.values - exact)) * grid.dx),
               "mass_drift_per_step": drift}
    verdicts = {"conservation": drift < 1e-12}
    if uL > uR and sc.source == "zero":
        speed = float((pair.flux.eval(uL) - pair.flux.eval(uR)) / (uL - uR))
        times = traj.times
        fronts = [front_position(s, uL, uR, near=cfg.x0 + speed * s.time) for s in traj.states]
        artifacts.write_table(outdir / "front.csv", ["t", "front", "front_exact"],
                              [times, fronts, cfg.x0 + speed * times])
        measured = (fronts[-1] - cfg.x0) / T
        summary.update(shock_speed_exact=speed, shock_speed_measured=measured,
                       shock_speed_error=abs(measured - speed),
                       shock_speed_limit=2 * grid.dx / T)
        verdicts["shock_speed"] = abs(measured - speed) < 2 * grid.dx / T
    return summary, verdicts


# ---------------------------------------------------------------------------
# stability runs

def _single_summary(report, cfg):
    sc = report.scenario
    d = report.diagnostics
    budget = discretisation_budget(report)
    summary = {
        "kind": "stability", "n": sc.n, "dx": sc.length / sc.n, "t_end": float(report.times[-1]),
        "steps": report.times.size - 1, "amplitude": sc.amplitude, "shift_mode": sc.shift_mode,
        "E0": report.E0, "ET": report.ET, "E_max": float(np.max(report.E)),
        "shift_energy": report.shift_energy, "shift_mismatch": report.shift_mismatch,
        "X_final": float(report.X[-1]), "gamma_worst_increment": report.gamma_worst,
        "gamma_budget": budget, "ladder": sc.ladder, "ladder_gaps": report.ladder_gaps,
        "c_star": report.c_star, "c_2star": report.c_2star,
        "boundary_mass": report.boundary_mass, "residual_budget": d["residual_budget"],
        "balance_mismatch": d["balance_mismatch"],
        "envelope_C": run_envelope_constant(report),
    }
    verdicts = {"comparability": d["comparability_ok"], "E_nonnegative": d["E_nonnegative"]}
    if sc.shift_mode == "filippov":
        verdicts["ladder_monotone"] = report.ladder_monotone
    if cfg.e_max is not None:
        verdicts["E_max"] = bool(np.max(report.E) <= cfg.e_max)
    if cfg.gamma_check:
        verdicts["gamma_monotone"] = report.gamma_worst <= budget
    return summary, verdicts


def _stability_worker(sc, outdir):
    pair = get_pair(sc.pair, sc.bound)
    report = run_stability(sc, keep_trajectory=True)
    artifacts.write_stability_bundle(outdir, report, pair.flux)
    report.trajectory = None      # keep the pickled result small
    return report


def run_single(cfg, outdir):
    report = _stability_worker(cfg.scenario, outdir)
    return _single_summary(report, cfg)


def run_sweep(cfg, outdir, jobs=1):
    base = cfg.scenario
    amps = cfg.amplitudes or SWEEP_AMPLITUDES
    ns = cfg.refinements or (base.n,)
    tasks = []
    for n in ns:
        for a in amps:
            sc = replace(base, n=n, amplitude=a, ladder=base.ladder if n == base.n else None)
            tasks.append((sc, outdir / f"run_n{n}_a{a:g}"))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_stability_worker, *zip(*tasks)))
    else:
        reports = [_stability_worker(*t) for t in tasks]

    rows = [[], [], [], [], [], [], [], []]
    for r in reports:
        for col, v in zip(rows, (r.scenario.n, r.scenario.amplitude, r.E0, r.ET,
                                 r.shift_energy, r.gamma_worst, discretisation_budget(r),
                                 run_envelope_constant(r))):
            col.append(v)
    artifacts.write_table(outdir / "sweep.csv",
                          ["n", "amplitude", "E0", "ET", "shift_energy", "gamma_worst",
                           "gamma_budget", "envelope_C"], rows)

    summary = {"kind": "sweep", "refinements": tuple(ns), "amplitudes": tuple(amps),
               "t_end": base.t_end, "shift_mode": base.shift_mode}
    verdicts = {}
    Cs = []
    for n in ns:
        group = [r for r in reports if r.scenario.n == n]
        fit = envelope_check(group)
        Cs.append(fit.C)
        summary[f"envelope_C_n{n}"] = fit.C
        verdicts[f"envelope_n{n}"] = fit.passed
        positive = sorted((r for r in group if r.E0 > 0), key=lambda r: r.E0)
        if len(positive) >= 2:
            small = positive[:3]
            slope = loglog_slope([r.E0 for r in small], [r.ET for r in small])
            summary[f"slope_n{n}"] = slope
            verdicts[f"slope_n{n}"] = 0.2 <= slope <= 1.1
            if base.shift_mode == "filippov":
                ctl = shift_l2_control(group)
                summary[f"shift_C_n{n}"] = ctl.C_fixed
                summary[f"shift_exponents_n{n}"] = (ctl.gamma_fit, ctl.rho_fit)
                verdicts[f"shift_control_n{n}"] = ctl.passed
    for a, b, n in zip(Cs[:-1], Cs[1:], ns[1:]):
        ratio = max(a, b) / min(a, b) if min(a, b) > 0 else np.inf
        summary[f"envelope_C_ratio_n{n}"] = ratio
        verdicts[f"envelope_refinement_n{n}"] = ratio < 2.0
    return summary, verdicts


# ---------------------------------------------------------------------------
# verbs

def _prepare(args, force_sweep=False):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if force_sweep and not cfg.is_sweep:
        cfg = replace(cfg, amplitudes=SWEEP_AMPLITUDES)
    return cfg


def _execute(args, force_sweep=False):
    try:
        cfg = _prepare(args, force_sweep)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.validate_only:
        print(f"{args.config}: configuration is valid")
        return EXIT_OK
    if force_sweep and cfg.kind != "stability":
        print("error: sweeps are only defined for stability scenarios", file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(args.out if args.out is not None else cfg.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "config.cfg").write_text(dump_config(cfg))
    except OSError as exc:
        print(f"error: cannot write to {outdir}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        if cfg.kind == "riemann":
            summary, verdicts = run_riemann(cfg, outdir)
        elif cfg.is_sweep:
            summary, verdicts = run_sweep(cfg, outdir, args.jobs)
        else:
            summary, verdicts = run_single(cfg, outdir)
    except (BHLabError, FloatingPointError, ValueError) as exc:
        record = {"status": "error", "error_type": type(exc).__name__, "error": str(exc)}
        if getattr(exc, "time", None) is not None:
            record["error_time"] = exc.time
        artifacts.write_summary(outdir / "summary.txt", record)
        (outdir / "error.txt").write_text(traceback.format_exc())
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    passed = all(bool(v) for v in verdicts.values())
    summary = {"status": "ok", "seed": cfg.scenario.seed, **summary}
    summary.update({f"verdict_{k}": "pass" if v else "fail" for k, v in verdicts.items()})
    summary["verdict"] = "pass" if passed else "fail"
    artifacts.write_summary(outdir / "summary.txt", summary)
    for k, v in verdicts.items():
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    print(f"artifacts in {outdir}")
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_run(args):
    return _execute(args)


def cmd_sweep(args):
    return _execute(args, force_sweep=True)


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return EXIT_ERROR
    seed = 0 if args.seed is None else args.seed
    results = run_suite(args.suite, seed=seed, jobs=args.jobs)
    print(format_table(results))
    if args.out is not None:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        artifacts.write_table(outdir / "verify.csv",
                              ["check", "passed", "value", "threshold", "seconds", "detail"],
                              [[r.name for r in results], [r.passed for r in results],
                               [float(r.value) for r in results],
                               [float(r.threshold) for r in results],
                               [r.seconds for r in results], [r.detail for r in results]])
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _jobs(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs needs a positive integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="bhlab",
                                     description="Relative-entropy stability lab for scalar "
                                                 "balance laws with a nonlocal source.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="64-bit seed (overrides config)")
    common.add_argument("--jobs", type=_jobs, default=1, help="worker processes")
    common.add_argument("--out", default=None, help="output directory (overrides config)")
    sub = parser.add_subparsers(dest="verb", required=True)
    for name, func, helptext in (("run", cmd_run, "run a scenario file"),
                                 ("sweep", cmd_sweep, "run a scenario as an amplitude sweep")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config")
        p.add_argument("--validate-only", action="store_true",
                       help="check the file and exit without running")
        p.set_defaults(func=func)
    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; that code is reserved for verdicts
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
