"""Config-driven command-line driver.

Subcommands::

    fcgl solve       --config run.yaml [--out DIR]
    fcgl convergence --config run.yaml [--out DIR]
    fcgl bench       --config run.yaml [--out DIR] [--warmup]
    fcgl coeffs      --alpha A [--fd-order {2,4}] [--n N] [--h H] [--out DIR]

Common flags: ``--threads N`` (BLAS threads; honored reliably through the
``fcgl`` console script, which sets the environment before numpy loads),
``--precision {single,double}``, ``--warmup``.

Exit codes: 0 success, 1 configuration error, 2 iterative solver failed to
converge, 3 blow-up detected during time stepping.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import integrators, tensorops
from .config import ConfigError, build_problem, build_run_config, dump_config, load_config
from .fracfd import build_operator, eigendecompose
from .integrators import BlowUpError, IncompatibleSchemeError, fit_order, run
from .problem import discrete_l2_error

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_BLOWUP = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcgl", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="BLAS thread count")
        p.add_argument("--precision", choices=("single", "double"), default=None,
                       help="override run.precision")
        p.add_argument("--warmup", action="store_true",
                       help="run once, discard, then run again for timing")

    common(sub.add_parser("solve", help="time-march one configuration"))
    common(sub.add_parser("convergence", help="error vs step count study with fitted order"))
    common(sub.add_parser("bench", help="spectral vs iterative engine wall-clock comparison"))
    coeffs = sub.add_parser("coeffs", help="print FD coefficients and operator spectrum")
    coeffs.add_argument("--alpha", type=float, required=True)
    coeffs.add_argument("--fd-order", type=int, choices=(2, 4), default=2)
    coeffs.add_argument("--n", type=int, default=16)
    coeffs.add_argument("--h", type=float, default=1.0)
    coeffs.add_argument("--out", default=None)
    coeffs.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None) -> int:
    return run_cli(sys.argv[1:] if argv is None else list(argv))


def run_cli(argv) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "coeffs":
            return _cmd_coeffs(args)
        cfg = load_config(args.config)
        if args.out is not None:
            cfg["output"]["directory"] = args.out
        if args.precision is not None:
            cfg["run"]["precision"] = args.precision
        if args.command == "solve":
            return _cmd_solve(cfg, args)
        if args.command == "convergence":
            return _cmd_convergence(cfg, args)
        return _cmd_bench(cfg, args)
    except (ConfigError, IncompatibleSchemeError) as exc:
        print(f"fcgl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"fcgl: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


def _outdir(cfg) -> str:
    path = cfg["output"]["directory"]
    os.makedirs(path, exist_ok=True)
    return path


def _thread_count() -> str:
    return os.environ.get("OPENBLAS_NUM_THREADS") or os.environ.get("OMP_NUM_THREADS") or "default"


def _write_summary(path, pairs) -> None:
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def _fmt(x) -> str:
    return f"{x:.17g}"


def _cmd_solve(cfg, args) -> int:
    out = _outdir(cfg)
    problem = build_problem(cfg)
    rc = build_run_config(cfg)
    if args.warmup:
        run(problem, rc)
        problem = build_problem(cfg)
    result = run(problem, rc)

    with open(os.path.join(out, "run.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "error", "step_seconds"])
        for n in range(result.steps):
            err = _fmt(result.step_errors[n]) if result.step_errors else ""
            writer.writerow([n + 1, _fmt((n + 1) * result.tau), err,
                             _fmt(result.step_seconds[n])])

    axes = problem.axes
    for t_req, state in result.snapshots:
        tag = f"{t_req:.6g}".replace("-", "m").replace(".", "p")
        tensorops.write_tensor(os.path.join(out, f"snapshot_t{tag}.bin"), state)
        tensorops.write_abs_csv(os.path.join(out, f"snapshot_t{tag}.csv"), state, axes=axes)

    summary = [
        ("command", "solve"),
        ("scheme", rc.scheme), ("engine", rc.engine),
        ("grid", "x".join(str(n) for n in problem.shape)),
        ("fd_order", problem.fd_order), ("steps", rc.steps), ("tau", _fmt(result.tau)),
        ("precision", rc.precision), ("threads", _thread_count()),
        ("precompute_seconds", _fmt(result.precompute_seconds)),
        ("loop_seconds", _fmt(result.loop_seconds)),
        ("total_seconds", _fmt(result.total_seconds)),
        ("mean_step_seconds", _fmt(float(np.mean(result.step_seconds)))),
        ("final_error", _fmt(result.error) if result.error is not None else "n/a"),
        ("solver_ok", result.solver_ok),
    ]
    if result.iteration_stats:
        summary.extend(sorted(result.iteration_stats.items()))
    _write_summary(os.path.join(out, "summary.txt"), summary)
    with open(os.path.join(out, "effective_config.yaml"), "w") as fh:
        fh.write(dump_config(cfg))
    print(f"solve: {rc.scheme}/{rc.engine} steps={rc.steps} "
          f"error={result.error if result.error is not None else 'n/a'} "
          f"total={result.total_seconds:.3f}s -> {out}/")
    return EXIT_OK if result.solver_ok else EXIT_NO_CONVERGENCE


def _cmd_convergence(cfg, args) -> int:
    out = _outdir(cfg)
    steps_list = sorted(cfg["convergence"]["steps_list"])
    if len(steps_list) < 3:
        raise ConfigError("convergence.steps_list needs at least 3 step counts")
    mode = cfg["convergence"]["mode"]
    probe = build_problem(cfg)
    if mode == "auto":
        mode = "exact" if probe.source.manufactured else "self"
    if mode == "exact" and not probe.source.manufactured:
        raise ConfigError("convergence.mode=exact needs a manufactured source")

    reference = None
    if mode == "self":
        reference = integrators.reference_solution(
            build_problem(cfg), max(steps_list),
            factor=int(cfg["convergence"]["reference_factor"]),
            precision=cfg["run"]["precision"])

    final_time = probe.params.final_time
    ok = True
    rows = []
    for steps in steps_list:
        problem = build_problem(cfg)
        result = run(problem, build_run_config(cfg, steps=steps))
        ok = ok and result.solver_ok
        if mode == "exact":
            err = result.error
        else:
            err = discrete_l2_error(result.final.astype(np.complex128), reference, problem.steps)
        rows.append((steps, final_time / steps, err, result.total_seconds))
        print(f"steps={steps:6d} tau={final_time / steps:.5e} error={err:.6e} "
              f"({result.total_seconds:.3f}s)")

    errors = [r[2] for r in rows]
    order = fit_order([r[1] for r in rows], errors)
    degenerate = bool(np.allclose(errors, errors[0], rtol=1e-12, atol=0.0))
    if degenerate:
        order = 0.0
        print("warning: errors do not vary across step counts; fitted order 0 (degenerate)")
    print(f"fitted order: {order:.3f}")

    with open(os.path.join(out, "convergence.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["steps", "tau", "error", "total_seconds"])
        for steps, tau, err, secs in rows:
            writer.writerow([steps, _fmt(tau), _fmt(err), _fmt(secs)])
    _write_summary(os.path.join(out, "summary.txt"), [
        ("command", "convergence"), ("mode", mode),
        ("scheme", cfg["run"]["scheme"]), ("engine", cfg["run"]["engine"]),
        ("fitted_order", _fmt(order)), ("degenerate", degenerate),
        ("threads", _thread_count()),
    ])
    with open(os.path.join(out, "effective_config.yaml"), "w") as fh:
        fh.write(dump_config(cfg))
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _cmd_bench(cfg, args) -> int:
    out = _outdir(cfg)
    schemes = cfg["bench"]["schemes"] or [cfg["run"]["scheme"]]
    n_list = cfg["bench"]["n_list"] or [cfg["problem"]["n"]]
    steps = cfg["bench"]["steps"] or cfg["run"]["steps"]
    for scheme in schemes:
        if scheme not in integrators.SCHEMES:
            raise ConfigError(f"bench scheme {scheme!r} not available")

    engine_a, engine_b = cfg["bench"]["engines"]
    rows = []
    ok = True
    for scheme in schemes:
        for n in n_list:
            timings = []
            for engine in (engine_a, engine_b):
                local = {**cfg, "problem": {**cfg["problem"], "n": n}}
                rc = build_run_config(local, steps=steps, scheme=scheme, engine=engine)
                if args.warmup:
                    run(build_problem(local), rc)
                result = run(build_problem(local), rc)
                ok = ok and result.solver_ok
                timings.append(result)
            first, second = timings
            speedup = second.total_seconds / first.total_seconds
            stats = second.iteration_stats or first.iteration_stats or {}
            rows.append([scheme, n, steps,
                         _fmt(first.precompute_seconds), _fmt(first.total_seconds),
                         _fmt(second.precompute_seconds), _fmt(second.total_seconds),
                         _fmt(speedup),
                         stats.get("outer_mean", ""), stats.get("inner_mean", "")])
            print(f"{scheme:9s} n={n:5d} {engine_a}={first.total_seconds:9.3f}s "
                  f"{engine_b}={second.total_seconds:9.3f}s speedup={speedup:8.2f}x")

    with open(os.path.join(out, "bench.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "n", "steps", f"{engine_a}_precompute_s", f"{engine_a}_total_s",
                         f"{engine_b}_precompute_s", f"{engine_b}_total_s", "speedup",
                         "outer_mean_iters", "inner_mean_iters"])
        writer.writerows(rows)
    with open(os.path.join(out, "effective_config.yaml"), "w") as fh:
        fh.write(dump_config(cfg))
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _cmd_coeffs(args) -> int:
    try:
        op = build_operator(args.alpha, args.fd_order, args.n, args.h)
    except ValueError as exc:
        print(f"fcgl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    factor = eigendecompose(op)
    print(f"# alpha={args.alpha} fd_order={args.fd_order} n={args.n} h={args.h}")
    print("k,coefficient")
    for k, g in enumerate(op.coeffs):
        print(f"{k},{_fmt(g)}")
    print("k,eigenvalue")
    for k, lam in enumerate(factor.eigenvalues, start=1):
        print(f"{k},{_fmt(lam)}")
    print(f"# max eigenvalue: {_fmt(factor.eigenvalues.max())}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "coeffs.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "coefficient"])
            for k, g in enumerate(op.coeffs):
                writer.writerow([k, _fmt(g)])
        with open(os.path.join(args.out, "spectrum.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "eigenvalue"])
            for k, lam in enumerate(factor.eigenvalues, start=1):
                writer.writerow([k, _fmt(lam)])
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
