#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""The fusekit command line.

    fusekit run --config <path> [--seed N | --seeds K --base-seed N] [--out <dir>] [--check]
    fusekit demo pendulum [--theta0-deg D] [--seed N] [--out <dir>]
    fusekit demo tracking [--seed N] [--out <dir>]
    fusekit version
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, TextIO, Sequence

import numpy as np

import fusekit
from fusekit import scenarios
from fusekit.matlib import DomainError
from fusekit.plotting import TraceFigure
from fusekit.run_config import RunConfig, RunConfigError, load_config, render_config, read_document
from fusekit.scenarios import ScenarioTrace, ScenarioSummary, ScenarioKind, PendulumParams, TrackingParams
from fusekit.utils import LogHelper, Logger, FusekitProperties

EXIT_OK:int = 0
EXIT_CHECK_FAILED:int = 1
EXIT_CONFIG_ERROR:int = 2
EXIT_IO_ERROR:int = 3

NA:str = "NA"

_LOG:Logger = LogHelper.logger("cli")


def format_real(value:float) -> str:
    """17 significant digits, enough to read back the identical double"""
    return "{0:.17g}".format(value)


def trace_csv_header(trace:ScenarioTrace) -> str:
    n = trace.state_dim()
    d = trace.measurement_dim()
    columns = ["t"]
    columns += ["x_true_{0}".format(i) for i in range(n)]
    columns += ["z_{0}".format(i) for i in range(d)]
    columns += ["x_hat_{0}".format(i) for i in range(n)]
    columns += ["p_diag_{0}".format(i) for i in range(n)]
    columns += ["nu_{0}".format(i) for i in range(d)]
    columns += ["sig3_{0}".format(i) for i in range(n)]
    return ",".join(columns)


def trace_csv_lines(trace:ScenarioTrace) -> List[str]:
    """The trace as CSV rows, header first.  z and nu are NA at steps without a
    measurement, the same is true of nu at the initializing measurement."""
    d = trace.measurement_dim()
    lines = [trace_csv_header(trace)]
    for record in trace.records():
        values = [format_real(record.t())]
        values += [format_real(value) for value in record.x_true()]
        values += [NA] * d if record.z() is None else [format_real(value) for value in record.z()]
        values += [format_real(value) for value in record.x_hat()]
        values += [format_real(value) for value in record.p_diag()]
        values += [NA] * d if record.nu() is None else [format_real(value) for value in record.nu()]
        values += [format_real(value) for value in record.three_sigma()]
        lines.append(",".join(values))

    return lines


def write_trace_csv(trace:ScenarioTrace, file_name:Path):
    with open(file_name, "w", newline="\n") as out:
        for line in trace_csv_lines(trace):
            out.write(line + "\n")
    _LOG.info("Wrote trace {0}", file_name)


def summary_lines(config:RunConfig, summary:ScenarioSummary, labels:List[str]) -> List[str]:
    """The pooled summary as key: value lines, the values are those of pool_metrics"""
    lines = ["scenario: {0}".format(config.scenario().value),
        "seeds: {0}".format(", ".join(str(seed) for seed in config.seeds())),
        "runs: {0}".format(summary.run_count()),
        "records: {0}".format(summary.record_count()),
        "updates: {0}".format(summary.update_count())]

    for label, value in zip(labels, summary.rmse()):
        lines.append("rmse_{0}: {1}".format(label, format_real(value)))
    for label, value in zip(labels, summary.containment()):
        lines.append("containment_{0}: {1}".format(label, format_real(value)))

    innovation = summary.innovation()
    if innovation is not None:
        alpha = FusekitProperties.get_property("NisSignificance", 0.05)
        low, high = innovation.nis_interval(alpha)
        for index, value in enumerate(innovation.mean()):
            lines.append("innovation_mean_{0}: {1}".format(index, format_real(value)))
        for (row, col), value in np.ndenumerate(innovation.sample_cov()):
            lines.append("innovation_cov_{0}_{1}: {2}".format(row, col, format_real(value)))
        lines.append("mean_nis: {0}".format(format_real(innovation.mean_nis())))
        lines.append("nis_interval: {0}, {1}".format(format_real(low), format_real(high)))
    else:
        lines.append("mean_nis: {0}".format(NA))

    # the config as run, defaults included
    for line in render_config(config).splitlines():
        key, value = read_document(line).popitem()
        lines.append("config.{0}: {1}".format(key, value))
    lines.append("defaults: {0}".format(", ".join(config.defaulted_keys())))
    return lines


def write_summary_table(summary:ScenarioSummary, labels:List[str], out:TextIO):
    out.write("{0:<12}{1:>24}{2:>14}\n".format("state", "rmse", "containment"))
    for label, rmse, containment in zip(labels, summary.rmse(), summary.containment()):
        out.write("{0:<12}{1:>24.9g}{2:>14.4f}\n".format(label, rmse, containment))

    if summary.innovation() is not None:
        out.write("mean NIS: {0:.4f} over {1} updates\n".format(summary.mean_nis(), summary.update_count()))
        out.write("innovation mean: {0}\n".format(", ".join(
            "{0:.6g}".format(value) for value in summary.innovation_mean())))


def run_seeds(config:RunConfig) -> List[ScenarioTrace]:
    """Run the configured scenario once per seed.  With SeedWorkers above 1 the seeds
    run on a thread pool, the traces come back in seed order either way."""
    workers = FusekitProperties.get_property("SeedWorkers", 1)
    seeds = config.seeds()
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(
                lambda seed: scenarios.run_scenario(config.scenario(), config.params(), seed), seeds))

    return [scenarios.run_scenario(config.scenario(), config.params(), seed) for seed in seeds]


def run_command(config:RunConfig, check:bool=False, out:TextIO=None) -> int:
    """Run every seed, write the requested files and print the pooled summary table.
    With check set the exit status is EXIT_CHECK_FAILED when the pooled three-sigma
    containment of any state is below the ContainmentFloor property."""
    if out is None:
        out = sys.stdout

    output_dir = Path(config.output_dir())
    writes_files = config.emit_trace_csv() or config.emit_summary() or config.emit_plot_data()
    try:
        if writes_files:
            output_dir.mkdir(parents=True, exist_ok=True)

        traces = run_seeds(config)
        for trace in traces:
            if config.emit_trace_csv():
                write_trace_csv(trace, output_dir / "trace_{0}.csv".format(trace.seed()))
            if config.emit_plot_data():
                TraceFigure(trace).save(output_dir / "plot_{0}.png".format(trace.seed()))

        summary = scenarios.pool_metrics(traces)
        labels = traces[0].state_labels()
        if config.emit_summary():
            summary_file = output_dir / "summary.txt"
            summary_file.write_text("\n".join(summary_lines(config, summary, labels)) + "\n")
            _LOG.info("Wrote summary {0}", summary_file)
    except OSError as error:
        _LOG.error("Failed writing results to {0}: {1}", output_dir, error)
        sys.stderr.write("fusekit: cannot write results: {0}\n".format(error))
        return EXIT_IO_ERROR

    write_summary_table(summary, labels, out)

    if check:
        floor = FusekitProperties.get_property("ContainmentFloor", 0.95)
        if summary.containment_fraction() < floor:
            _LOG.error("Check failed, containment {0} is below {1}", summary.containment().tolist(), floor)
            out.write("CHECK FAILED: containment {0:.4f} < {1}\n".format(summary.containment_fraction(), floor))
            return EXIT_CHECK_FAILED
        out.write("CHECK PASSED\n")

    return EXIT_OK


def demo_config(kind:ScenarioKind, theta0_deg:float=None, seed:int=0, output_dir:str=None) -> RunConfig:
    """The standard run shape with default parameters.  Files are only written when an
    output directory is given."""
    if kind == ScenarioKind.PENDULUM:
        params = PendulumParams() if theta0_deg is None else PendulumParams(theta0=math.radians(theta0_deg))
    else:
        params = TrackingParams()

    emit = output_dir is not None
    return RunConfig(kind, params, [seed], output_dir if emit else ".", emit, emit, emit)


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fusekit",
        description="Multi-sensor fusion and state estimation experiments")
    parser.add_argument("-v", "--verbose", action="count", default=0,
        help="Log progress to standard error, twice for debug output")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    run = commands.add_parser("run", help="Run the scenario described by a config file")
    run.add_argument("--config", required=True, help="Path of the run config document")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="Run a single seed")
    seeds.add_argument("--seeds", type=int, help="Run this many consecutive seeds")
    run.add_argument("--base-seed", type=int, default=0, help="First of the --seeds seeds")
    run.add_argument("--out", help="Output directory, overrides output_dir in the config")
    run.add_argument("--check", action="store_true",
        help="Exit with status 1 if pooled three-sigma containment is below the floor")

    demo = commands.add_parser("demo", help="Run an experiment with default parameters")
    demo.add_argument("scenario", choices=[kind.value for kind in ScenarioKind])
    demo.add_argument("--theta0-deg", type=float, help="Initial pendulum angle in degrees")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--out", help="Write the trace, summary and plot to this directory")

    commands.add_parser("version", help="Print the fusekit version")
    return parser


def main(argv:Sequence[str]=None, out:TextIO=None) -> int:
    if out is None:
        out = sys.stdout

    args = create_parser().parse_args(argv)
    if args.verbose > 0:
        LogHelper.set_level(logging.DEBUG if args.verbose > 1 else logging.INFO)

    if args.command == "version":
        out.write("fusekit {0}\n".format(fusekit.__version__))
        return EXIT_OK

    try:
        if args.command == "demo":
            kind = ScenarioKind(args.scenario)
            if kind == ScenarioKind.PENDULUM:
                params = demo_config(kind, args.theta0_deg).params()
                out.write("linearization gap: {0:.4f} of amplitude\n".format(scenarios.linearization_gap(params)))
            return run_command(demo_config(kind, args.theta0_deg, args.seed, args.out), out=out)

        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seeds([args.seed])
        elif args.seeds is not None:
            if args.seeds < 1 or args.base_seed < 0:
                raise RunConfigError("--seeds must be 1 or more and --base-seed 0 or more")
            config = config.with_seeds(list(range(args.base_seed, args.base_seed + args.seeds)))
        if args.out is not None:
            config = config.with_output_dir(args.out)

        return run_command(config, args.check, out)
    except RunConfigError as error:
        _LOG.error("Invalid config: {0}", error)
        sys.stderr.write("fusekit: {0}\n".format(error))
        return EXIT_CONFIG_ERROR
    except DomainError as error:
        _LOG.error("Parameters out of range: {0}", error)
        sys.stderr.write("fusekit: parameters out of range: {0}\n".format(error))
        return EXIT_CONFIG_ERROR
    except OSError as error:
        _LOG.error("Cannot read config: {0}", error)
        sys.stderr.write("fusekit: cannot read config: {0}\n".format(error))
        return EXIT_IO_ERROR
