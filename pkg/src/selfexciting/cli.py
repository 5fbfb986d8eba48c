"""Batch command-line interface.

Subcommands: ``simulate``, ``fit``, ``predict``, ``intensity``, ``verify``.
Data artifacts go to files or stdout; diagnostics go to stderr, so output
can be piped safely.  Exit codes: 0 success, 2 usage or validation error,
3 fit did not converge, 4 finite prediction required but supercritical,
5 verification failure.  Every randomized command is deterministic given
``--seed``; when the ``CI`` environment variable is set the seed must be
passed explicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import verify as verify_mod
from .cascade_io import (
    CascadeFormatError,
    CascadeValidationError,
    parse_cascade,
    write_events,
    write_intensity_trace,
)
from .inference import ExponentialHawkesParams, FitConfig, fit_mle
from .kernels import (
    ExponentialKernel,
    MarkDistribution,
    MarkedExponentialKernel,
    MarkedPowerLawKernel,
    ParameterError,
    PowerLawKernel,
    branching_factor,
    marked_branching_factor,
)
from .prediction import Regime, simulate_continuations, total_cascade_size
from .process import ConstantBackground, Event, HawkesModel, ZeroBackground
from .simulation import (
    Horizon,
    MaxEvents,
    ParetoMarks,
    SimulationConfig,
    StallError,
    UnitMarks,
    simulate_cluster,
    simulate_exp_decomposition,
    simulate_thinning,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_SUPERCRITICAL = 4
EXIT_VERIFY_FAILED = 5

KERNEL_CHOICES = ("exponential", "powerlaw", "marked-powerlaw", "marked-exponential")


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def _resolve_seed(args, parser) -> int:
    if args.seed is not None:
        return args.seed
    if os.environ.get("CI"):
        parser.error("--seed is required when the CI environment variable is set")
    seed = int(np.random.SeedSequence().entropy % (2**63))
    _diag(f"seed: {seed} (from system entropy; pass --seed to reproduce)")
    return seed


def _add_kernel_flags(sub) -> None:
    sub.add_argument("--kernel", choices=KERNEL_CHOICES, default="marked-powerlaw")
    sub.add_argument("--alpha", type=float, help="exponential/power-law amplitude")
    sub.add_argument("--delta", type=float, help="exponential decay / power-law offset")
    sub.add_argument("--eta", type=float, help="power-law exponent")
    sub.add_argument("--kappa", type=float, help="marked kernels: virality scale")
    sub.add_argument("--beta", type=float, help="marked kernels: mark warping")
    sub.add_argument("--c", type=float, help="marked power-law: temporal offset")
    sub.add_argument("--theta", type=float, help="marked kernels: decay exponent")


def _build_kernel(args, parser):
    need = lambda flag, value: parser.error(f"--kernel {args.kernel} requires --{flag}") if value is None else value
    try:
        if args.kernel == "exponential":
            return ExponentialKernel(need("alpha", args.alpha), need("delta", args.delta))
        if args.kernel == "powerlaw":
            return PowerLawKernel(
                need("alpha", args.alpha), need("delta", args.delta), need("eta", args.eta)
            )
        if args.kernel == "marked-powerlaw":
            return MarkedPowerLawKernel(
                need("kappa", args.kappa),
                need("beta", args.beta),
                need("c", args.c),
                need("theta", args.theta),
            )
        return MarkedExponentialKernel(
            need("kappa", args.kappa), need("beta", args.beta), need("theta", args.theta)
        )
    except ParameterError as err:
        parser.error(str(err))


def _kernel_n_star(kernel, mark_exponent):
    if not kernel.marked:
        return branching_factor(kernel)
    if mark_exponent is None:
        return None
    return marked_branching_factor(kernel, MarkDistribution(mark_exponent))


def _open_output(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_artifact(path, writer) -> None:
    handle, owned = _open_output(path)
    try:
        writer(handle)
    finally:
        if owned:
            handle.close()


def cmd_simulate(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    if args.gamma is not None:
        # exponential-decomposition mode (rejection free, linear time)
        if args.kernel != "exponential":
            parser.error("--gamma selects the decomposition sampler (exponential kernel only)")
        if args.lambda0 is None or args.delta is None:
            parser.error("decomposition mode requires --lambda0 and --delta")
        if args.n is None and args.horizon is None:
            parser.error("need --n and/or --horizon")
        try:
            sim = simulate_exp_decomposition(
                a=args.a if args.a is not None else 0.0,
                lambda0=args.lambda0,
                delta=args.delta,
                gamma=args.gamma,
                n_events=args.n,
                seed=seed,
                horizon=args.horizon,
            )
        except ValueError as err:
            parser.error(str(err))
        n_star = args.gamma / args.delta
        _write_artifact(args.output, lambda h: write_events(sim.sequence, h))
        _diag(
            f"simulated {len(sim)} events by decomposition over "
            f"[0, {sim.observation_end:g}]; n*={n_star:g}"
        )
        return EXIT_OK

    kernel = _build_kernel(args, parser)
    if args.n is None and args.horizon is None:
        parser.error("need a stop rule: --n or --horizon")
    if args.n is not None and args.horizon is not None:
        parser.error("thinning takes a single stop rule (--n or --horizon)")
    stop = MaxEvents(args.n) if args.n is not None else Horizon(args.horizon)
    if args.marks == "pareto":
        if args.mark_exponent is None:
            parser.error("--marks pareto requires --mark-exponent")
        marks = ParetoMarks(MarkDistribution(args.mark_exponent))
    else:
        marks = UnitMarks()
    config = SimulationConfig(
        stop=stop, seed=seed, marks=marks, attribute_parents=not args.no_parents
    )
    n_star = _kernel_n_star(kernel, args.mark_exponent)

    try:
        if args.immigrant_mark is not None:
            model = HawkesModel(ZeroBackground(), kernel)
            sim = simulate_cluster(model, Event(0.0, args.immigrant_mark), config)
        else:
            rate = args.lambda0 if args.lambda0 is not None else 0.0
            background = ConstantBackground(rate) if rate > 0.0 else ZeroBackground()
            model = HawkesModel(background, kernel)
            sim = simulate_thinning(model, config)
    except StallError as err:
        if err.partial is not None and len(err.partial):
            _write_artifact(args.output, lambda h: write_events(err.partial.sequence, h))
            _diag(f"stalled after {len(err.partial)} events: {err}")
        else:
            _diag(f"stalled with no events: {err}")
        return 1
    except (ValueError, ParameterError) as err:
        parser.error(str(err))

    _write_artifact(args.output, lambda h: write_events(sim.sequence, h))
    summary = (
        f"simulated {len(sim)} events by thinning over [0, {sim.observation_end:g}] "
        f"(rejected {sim.rejected_count})"
    )
    if n_star is not None:
        summary += f"; n*={n_star:g}"
    _diag(summary)
    return EXIT_OK


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fit_report(result) -> dict:
    params = result.params
    if isinstance(params, ExponentialHawkesParams):
        values = {"lambda0": params.lambda0, "alpha": params.alpha, "delta": params.delta}
    else:
        values = {
            "kappa": params.kappa,
            "beta": params.beta,
            "c": params.c,
            "theta": params.theta,
        }
    report = {"kernel": result.kernel}
    report.update(values)
    report["log_likelihood"] = result.log_likelihood
    report["n_star"] = result.n_star
    report["converged"] = result.converged
    report["starts"] = len(result.starts)
    for rec in result.starts:
        prefix = f"start.{rec.index}"
        report[f"{prefix}.status"] = rec.status
        report[f"{prefix}.objective"] = rec.objective
        report[f"{prefix}.log_likelihood"] = rec.log_likelihood
        report[f"{prefix}.n_star"] = rec.n_star
        report[f"{prefix}.suspect"] = rec.suspect
        for name, value in rec.init.items():
            report[f"{prefix}.init.{name}"] = value
    return report


def _emit_report(report: dict, args) -> None:
    def writer(handle):
        if args.json:
            json.dump(report, handle, indent=2)
            handle.write("\n")
        else:
            for key, value in report.items():
                handle.write(f"{key}={_format_value(value)}\n")

    _write_artifact(args.output, writer)


def cmd_fit(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    require_immigrant = args.kernel == "marked-powerlaw"
    try:
        seq = parse_cascade(
            args.input,
            observation_end=args.window,
            tie_policy=args.tie_policy,
            require_immigrant=require_immigrant,
        )
    except (CascadeFormatError, CascadeValidationError, OSError) as err:
        parser.error(str(err))
    cfg = FitConfig(
        kernel=args.kernel,
        starts=args.starts,
        seed=seed,
        mark_exponent=args.mark_exponent,
        enforce_subcritical=not args.no_subcritical,
        max_iterations=args.max_iterations,
        workers=args.workers,
    )
    try:
        result = fit_mle(seq, cfg)
    except (ValueError, ParameterError) as err:
        parser.error(str(err))
    _emit_report(_fit_report(result), args)
    if not result.converged:
        _diag("no start converged; see the per-start trace in the report")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _params_from_fit_report(path, parser):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        parser.error(str(err))
    if text.lstrip().startswith("{"):
        data = json.loads(text)
    else:
        data = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, value = line.partition("=")
                data[key.strip()] = value.strip()
    kernel_name = data.get("kernel")
    try:
        if kernel_name == "marked-powerlaw":
            return MarkedPowerLawKernel(
                float(data["kappa"]), float(data["beta"]), float(data["c"]), float(data["theta"])
            )
        if kernel_name == "marked-exponential":
            return MarkedExponentialKernel(
                float(data["kappa"]), float(data["beta"]), float(data["theta"])
            )
    except (KeyError, ValueError) as err:
        parser.error(f"fit report {path} is missing kernel parameters: {err}")
    parser.error(
        f"fit report {path} has kernel {kernel_name!r}; prediction needs a marked kernel"
    )


def cmd_predict(args, parser) -> int:
    if args.mark_exponent is None:
        parser.error("--mark-exponent is required (branching factor needs the mark law)")
    if args.from_fit is not None:
        kernel = _params_from_fit_report(args.from_fit, parser)
    else:
        if args.kernel not in ("marked-powerlaw", "marked-exponential"):
            parser.error("predict supports marked kernels only")
        kernel = _build_kernel(args, parser)
    try:
        seq = parse_cascade(
            args.input,
            observation_end=args.window,
            tie_policy=args.tie_policy,
            require_immigrant=True,
        )
        dist = MarkDistribution(args.mark_exponent)
        report = total_cascade_size(kernel, dist, seq)
    except (CascadeFormatError, CascadeValidationError, ParameterError, OSError) as err:
        parser.error(str(err))

    out = {
        "n_observed": report.n_observed,
        "a1": report.a1,
        "n_star": report.n_star,
        "regime": report.regime.value,
    }
    if report.regime is Regime.SUBCRITICAL:
        out["n_infinity"] = report.n_infinity
        out["numerically_unstable"] = report.numerically_unstable
    if 0.95 <= report.n_star < 1.0:
        _diag(
            f"warning: n*={report.n_star:.4f} is close to critical; "
            "the size prediction is numerically fragile"
        )
    if args.runs is not None:
        seed = _resolve_seed(args, parser)
        mc = simulate_continuations(kernel, dist, seq, runs=args.runs, seed=seed)
        out["continuation_runs"] = args.runs
        out["continuation_mean"] = float(np.mean(mc.sizes))
        out["continuation_stderr"] = float(np.std(mc.sizes, ddof=1)) / math.sqrt(args.runs)
        out["continuation_truncated"] = mc.truncated_runs
    _emit_report(out, args)
    if args.require_finite and report.regime is Regime.SUPERCRITICAL:
        _diag(f"supercritical regime (n*={report.n_star:g}); no finite prediction")
        return EXIT_SUPERCRITICAL
    return EXIT_OK


def cmd_intensity(args, parser) -> int:
    kernel = _build_kernel(args, parser)
    rate = args.lambda0 if args.lambda0 is not None else 0.0
    background = ConstantBackground(rate) if rate > 0.0 else ZeroBackground()
    model = HawkesModel(background, kernel)
    try:
        seq = parse_cascade(
            args.input, observation_end=args.window, tie_policy=args.tie_policy
        )
        if args.step <= 0.0:
            raise ValueError("step must be > 0")
        _write_artifact(
            args.output,
            lambda h: write_intensity_trace(model, seq, args.t0, args.t1, args.step, h),
        )
    except (CascadeFormatError, CascadeValidationError, ValueError, OSError) as err:
        parser.error(str(err))
    return EXIT_OK


def cmd_verify(args, parser) -> int:
    seed = args.seed
    if seed is None and os.environ.get("CI"):
        parser.error("--seed is required when the CI environment variable is set")
    results = verify_mod.run_suites(
        names=args.suite,
        seed=seed,
        n_events=args.n,
        instances=args.instances,
        runs=args.runs,
        clusters=args.clusters,
    )
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    if failed:
        _diag(f"{len(failed)} of {len(results)} checks failed")
        return EXIT_VERIFY_FAILED
    _diag(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkes",
        description="Simulate, fit, and predict Hawkes self-exciting processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate events (thinning or decomposition)")
    _add_kernel_flags(sim)
    sim.add_argument("--lambda0", type=float, help="constant background rate (0 = none)")
    sim.add_argument("--a", type=float, help="decomposition: constant immigrant rate")
    sim.add_argument("--gamma", type=float, help="decomposition: per-event intensity jump")
    sim.add_argument("--immigrant-mark", type=float, help="simulate one cluster seeded at t=0")
    sim.add_argument("--horizon", type=float, help="stop at this time")
    sim.add_argument("--n", type=int, help="stop after this many events")
    sim.add_argument("--marks", choices=("unit", "pareto"), default="unit")
    sim.add_argument("--mark-exponent", type=float)
    sim.add_argument("--no-parents", action="store_true", help="skip parent attribution")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--output", help="events CSV path (default stdout)")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="maximum-likelihood fit of a cascade or event file")
    fit.add_argument("--input", required=True)
    fit.add_argument("--window", type=float, help="observation horizon override (s)")
    fit.add_argument("--kernel", choices=("marked-powerlaw", "exponential"),
                     default="marked-powerlaw")
    fit.add_argument("--mark-exponent", type=float)
    fit.add_argument("--starts", type=int, default=10)
    fit.add_argument("--max-iterations", type=int, default=500)
    fit.add_argument("--no-subcritical", action="store_true",
                     help="drop the n* < 1 penalty")
    fit.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    fit.add_argument("--tie-policy", choices=("reject", "perturb"), default="reject")
    fit.add_argument("--json", action="store_true")
    fit.add_argument("--seed", type=int)
    fit.add_argument("--output", help="report path (default stdout)")
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="closed-form expected total cascade size")
    _add_kernel_flags(pred)
    pred.add_argument("--input", required=True)
    pred.add_argument("--window", type=float)
    pred.add_argument("--from-fit", help="read kernel parameters from a fit report")
    pred.add_argument("--mark-exponent", type=float)
    pred.add_argument("--runs", type=int, help="also Monte Carlo continuations")
    pred.add_argument("--require-finite", action="store_true")
    pred.add_argument("--tie-policy", choices=("reject", "perturb"), default="reject")
    pred.add_argument("--json", action="store_true")
    pred.add_argument("--seed", type=int)
    pred.add_argument("--output", help="report path (default stdout)")
    pred.set_defaults(func=cmd_predict)

    trace = sub.add_parser("intensity", help="sample the intensity to a CSV trace")
    _add_kernel_flags(trace)
    trace.add_argument("--input", required=True)
    trace.add_argument("--window", type=float)
    trace.add_argument("--lambda0", type=float, help="constant background rate")
    trace.add_argument("--t0", type=float, required=True)
    trace.add_argument("--t1", type=float, required=True)
    trace.add_argument("--step", type=float, required=True)
    trace.add_argument("--tie-policy", choices=("reject", "perturb"), default="reject")
    trace.add_argument("--output", help="trace CSV path (default stdout)")
    trace.set_defaults(func=cmd_intensity)

    ver = sub.add_parser("verify", help="run the cross-module oracle suites")
    ver.add_argument(
        "--suite",
        action="append",
        choices=("all",) + tuple(verify_mod.SUITES),
        help="suite to run (repeatable; default all)",
    )
    ver.add_argument("--n", type=int, help="events per sampler for the KS suite")
    ver.add_argument("--instances", type=int, help="instances for likelihood/gradient")
    ver.add_argument("--runs", type=int, help="Monte Carlo runs for prediction")
    ver.add_argument("--clusters", type=int, help="clusters for the size-law suite")
    ver.add_argument("--seed", type=int)
    ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
