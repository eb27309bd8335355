"""
Command-line interface.

Usage::

    pywsacs rdf --config experiment.json
    pywsacs sweep --config duty_n_sweep.json --svg --jobs 4
    pywsacs gate --config experiment.json
    pywsacs verify --config experiment.json --seed 7
    pywsacs --print-schema

Every command reads an `ExperimentConfig` JSON file (defaults apply when
``--config`` is omitted); flags override the ``output`` section.  All files
are written once, after results are merged in order.
"""

from __future__ import annotations

import argparse
import logging
import math
import pathlib
import sys
from typing import Callable, Dict, List, Optional, Sequence

import pydantic

from .af_model import AfModel
from .asymptotic import (
    GateVerdict,
    GuardPlan,
    SweepResult,
    distortion_sweep,
    gate_check,
    guard_plan,
    n_sweep,
    phase_sweep,
    rdf_sync,
)
from .config import ExperimentConfig, schema_json
from .exceptions import (
    ConfigurationError,
    DomainError,
    NumericalError,
    PreconditionError,
    ResourceError,
    WsacsException,
)
from .sampling import resolve_plan
from .util.tools import format_value, write_csv, write_json
from .verify import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PARTIAL = 4
EXIT_GATE_FAIL = 5
EXIT_VERIFY_FAIL = 6

RDF_HEADER = (
    "n",
    "p_n",
    "epsilon_n",
    "phi_s",
    "D",
    "R",
    "theta",
    "avg_var",
    "quad_error",
    "constraint_inactive",
    "gate",
    "status",
)
SWEEP_HEADERS = {
    "n": ("n", "p_n", "epsilon_n", "phi_opt", "R", "theta", "status"),
    "phi": ("phi_tilde", "R", "theta", "status"),
    "D": ("D", "R", "theta", "status"),
}


def configure_logging(verbosity: int = 0, log_file: Optional[str] = None) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        filename=log_file,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("pywsacs").setLevel(level)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the configuration file (if any) and apply command-line overrides."""
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig()
    try:
        if args.out is not None:
            config.output.directory = args.out
        if args.jobs is not None:
            config.output.jobs = args.jobs
        if args.seed is not None:
            config.output.seed = args.seed
        if args.svg:
            config.output.svg = True
        if args.html:
            config.output.html = True
    except pydantic.ValidationError as ex:
        raise ConfigurationError(f"Invalid command-line override:\n{ex}") from ex
    return config


# rdf


def _guard_report(guard: GuardPlan, R: float) -> dict:
    report = pydantic.TypeAdapter(GuardPlan).dump_python(guard, mode="json")
    report["overall_rate"] = guard.overall_rate(R)
    return report


def cmd_rdf(config: ExperimentConfig) -> int:
    """Evaluate the rate at a single (n, phase, D) point."""
    model = config.af
    plan = config.sampling.resolve(model)
    if not plan.synchronous:
        raise ConfigurationError(
            "rdf evaluates a synchronous plan; set sampling.n to a positive integer"
        )
    point = rdf_sync(model, plan, config.D, config.spectrum)
    gate = gate_check(model, plan.p, config.D, config.gate)
    guard = guard_plan(
        model, plan, config.guard_block_length, math.fmod(plan.phi_s, model.period)
    )

    print(f"R={point.R:.6f} bits/sample")
    print(f"theta={point.theta:.6g}")
    print(f"p_n={point.p_n}")
    print(f"avg_var={point.avg_var:.6g}")
    print(f"gate={gate.verdict} (gamma_c estimate {gate.estimate.value:.6g}, {gate.label})")
    if point.constraint_inactive:
        print("constraint inactive: D is at or above the average variance, R=0")

    directory = config.output.path
    if config.output.csv:
        row = (
            plan.n,
            plan.p_n,
            plan.epsilon_n,
            plan.phi_s,
            point.D,
            point.R,
            point.theta,
            point.avg_var,
            point.quad_error,
            point.constraint_inactive,
            gate.verdict,
            "ok",
        )
        write_csv(directory / "rdf.csv", RDF_HEADER, [row])
    write_json(directory / "guard_plan.json", _guard_report(guard, point.R))
    logger.info("rdf: R=%g written to %s", point.R, directory)
    return EXIT_OK


# sweep


def _sweep_rows(result: SweepResult) -> List[tuple]:
    rows = []
    for point in result.points:
        if result.axis == "n":
            rows.append(
                (
                    int(point.axis_value),
                    point.p_n,
                    point.epsilon_n,
                    point.phi_opt,
                    point.R,
                    point.theta,
                    point.status,
                )
            )
        else:
            rows.append((point.axis_value, point.R, point.theta, point.status))
    return rows


def _curve_summary(
    result: SweepResult,
    model: AfModel,
    n: Optional[int],
    filename: Optional[str],
) -> dict:
    return {
        "t_dc": model.t_dc,
        "n": n,
        "file": filename,
        "label": result.label,
        "partial": result.partial,
        "limsup_estimate": result.limsup_estimate,
        "window": result.window,
        "gate": result.gate.to_report() if result.gate is not None else None,
        "failed": [
            {"axis_value": point.axis_value, "error": point.error}
            for point in result.points
            if not point.ok
        ],
    }


def _curve_gate(config: ExperimentConfig, model: AfModel) -> GateVerdict:
    D = config.D
    if config.sweep.axis == "D":
        D = max(config.sweep.get_D_values())
    return gate_check(model, config.sampling.p, D, config.gate)


def cmd_sweep(config: ExperimentConfig) -> int:
    """Sweep along n, the sampling phase or the distortion."""
    sweep = config.sweep
    if sweep is None:
        raise ConfigurationError("The sweep command needs a 'sweep' section")
    sampling = config.sampling

    curves: Dict[str, tuple] = {}
    for model in config.models():
        t_dc = format_value(model.t_dc)
        gate = _curve_gate(config, model)
        if sweep.axis == "n":
            if sweep.phase == "optimize":
                phase = "optimize"
            else:
                phase = sampling.phase_seconds(model) / model.period
            result = n_sweep(
                model,
                sampling.p,
                sampling.epsilon,
                config.D,
                sweep.get_n_values(),
                window_fraction=sweep.window_fraction,
                phase=phase,
                phase_grid_size=sweep.phase_grid_size,
                spectrum=config.spectrum,
                max_cost=sweep.max_cost,
                allow_expensive=sweep.allow_expensive,
                gate=gate,
                jobs=config.output.jobs,
            )
            curves[f"t_dc={t_dc}"] = (f"sweep_n_tdc{t_dc}", model, None, result)
            continue

        for n in sweep.get_n_values() or [sampling.n]:
            plan = resolve_plan(
                model, sampling.p, sampling.epsilon, n, sampling.phase_seconds(model)
            )
            if not plan.synchronous:
                raise ConfigurationError(f"A {sweep.axis}-sweep needs finite n values")
            if sweep.axis == "phi":
                result = phase_sweep(
                    model, plan, config.D, sweep.get_phi_values(), config.spectrum, gate
                )
            else:
                result = distortion_sweep(
                    model, plan, sweep.get_D_values(), config.spectrum, gate
                )
            label = f"t_dc={t_dc}, n={plan.n}"
            curves[label] = (f"sweep_{sweep.axis}_tdc{t_dc}_n{plan.n}", model, plan.n, result)

    directory = config.output.path
    summaries = []
    for label, (stem, model, n, result) in curves.items():
        filename = None
        if config.output.csv:
            filename = f"{stem}.csv"
            write_csv(directory / filename, SWEEP_HEADERS[sweep.axis], _sweep_rows(result))
        summary = _curve_summary(result, model, n, filename)
        summary["curve"] = label
        summaries.append(summary)
        if result.limsup_estimate is not None:
            print(f"{label}: limsup estimate R={result.limsup_estimate:.6f} ({result.label})")
        else:
            print(f"{label}: {len(result.points)} points ({result.label})")

    write_json(
        directory / f"sweep_{sweep.axis}_summary.json",
        {"axis": sweep.axis, "D": config.D, "curves": summaries},
    )
    if config.output.svg or config.output.html:
        _write_sweep_figures(config, {label: curve[3] for label, curve in curves.items()})

    partial = [label for label, curve in curves.items() if curve[3].partial]
    if partial:
        logger.warning("Partial sweep: failed points in %s", ", ".join(partial))
        return EXIT_PARTIAL
    return EXIT_OK


def _write_sweep_figures(config: ExperimentConfig, results: Dict[str, SweepResult]) -> None:
    try:
        from .plotting import sweep_graph, write_figures
    except ImportError as ex:
        raise ConfigurationError(f"Figure output requires the plotting extras: {ex}") from ex

    graph = sweep_graph(results)
    try:
        write_figures(
            graph,
            config.output.path,
            f"sweep_{config.sweep.axis}",
            svg=config.output.svg,
            html=config.output.html,
        )
    except ImportError as ex:
        raise ConfigurationError(f"Figure output requires the plotting extras: {ex}") from ex


# gate


def cmd_gate(config: ExperimentConfig) -> int:
    """Evaluate the admissibility gate; the report is written either way."""
    model = config.af
    gate = gate_check(model, config.sampling.p, config.D, config.gate)
    report = gate.to_report()
    report["model"] = model.model_dump(mode="json", by_alias=True)
    path = write_json(config.output.path / "gate.json", report)
    print(f"gate={gate.verdict} (gamma_c estimate {gate.estimate.value:.6g}, D={config.D:g})")
    logger.info("Gate report written to %s", path)
    return EXIT_OK if gate.passed else EXIT_GATE_FAIL


# verify


def cmd_verify(config: ExperimentConfig) -> int:
    """Run the verification suite and write its JSON report."""
    model = config.af
    report = run_suite(
        model,
        config.sampling.p,
        config.sampling.epsilon,
        config.D,
        config.output.seed,
        settings=config.verify,
        spectrum=config.spectrum,
        gate_settings=config.gate,
        phi_s=config.sampling.phase_seconds(model),
    )
    for check in report.checks:
        print(f"{check.name}: {check.status}")
    print(f"verify={report.status}")
    path = write_json(config.output.path / "verify.json", report.to_report())
    logger.info("Verification report written to %s", path)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


COMMANDS: Dict[str, Callable[[ExperimentConfig], int]] = {
    "rdf": cmd_rdf,
    "sweep": cmd_sweep,
    "gate": cmd_gate,
    "verify": cmd_verify,
}

_COMMAND_HELP = {
    "rdf": "rate at a single (n, phase, D) point",
    "sweep": "rates along n, the sampling phase or the distortion",
    "gate": "admissibility gate report",
    "verify": "verification suite report",
}


def build_parser() -> argparse.ArgumentParser:
    from . import __version__

    parser = argparse.ArgumentParser(
        prog="pywsacs",
        description="Rate-distortion functions of sampled cyclostationary Gaussian sources.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--print-schema",
        action="store_true",
        help="print the JSON schema of the configuration and exit",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON experiment configuration")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--jobs", type=int, help="worker processes for sweep points")
    common.add_argument("--seed", type=int, help="seed of the Monte Carlo streams")
    common.add_argument("--svg", action="store_true", default=None, help="write SVG figures")
    common.add_argument(
        "--html", action="store_true", default=None, help="write standalone HTML figures"
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="repeat for more logging"
    )
    common.add_argument("--log-file", help="write the log here instead of stderr")

    subparsers = parser.add_subparsers(dest="command", metavar="command")
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=_COMMAND_HELP[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.print_schema:
        sys.stdout.write(schema_json() + "\n")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("pywsacs: error: a command is required", file=sys.stderr)
        return EXIT_CONFIG

    configure_logging(args.verbose, args.log_file)
    try:
        config = load_config(args)
        pathlib.Path(config.output.path).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config)
    except (ConfigurationError, DomainError, PreconditionError) as ex:
        logger.debug("Configuration failure", exc_info=True)
        print(f"Configuration error: {ex}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ResourceError) as ex:
        logger.debug("Numerical failure", exc_info=True)
        print(f"Numerical error: {ex}", file=sys.stderr)
        if isinstance(ex, ResourceError) and ex.advisory:
            print(ex.advisory, file=sys.stderr)
        return EXIT_NUMERIC
    except WsacsException as ex:
        print(f"Error: {ex}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as ex:
        print(f"Unable to write output: {ex}", file=sys.stderr)
        return EXIT_CONFIG
