import sys
import argparse
import logging
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

# Ensure the project root is in the Python path
sys.path.append(str(Path(__file__).parent))

from src.backend.analysis.imperfection_analyzer import DEFAULT_EPSILONS, ImperfectionAnalyzer
from src.backend.engines.runner import run_curve
from src.backend.parsers.config_parser import RunConfigParser
from src.backend.validation.acceptance import run_acceptance
from src.common.config import CONFIG
from src.common.data_repository import ResultRepository, write_csv
from src.common.errors import RspError
from src.common.run_config import ENGINES, RunConfig

logger = logging.getLogger("RspToolkit")

# flag name -> RunConfig field (parameters go into "params")
RUN_FLAGS = ("scenario", "engine", "t_end", "points", "dt", "n_traj", "seed", "benchmark", "out")
PARAM_FLAGS = ("gamma", "eta", "tau", "delta", "alpha", "gamma_iso", "gamma_d")


def _add_common(parser):
    parser.add_argument('--config', type=str, help='Run configuration file ([run] and [scenario:<name>] sections)')
    parser.add_argument('--scenario', type=str, help='Scenario name, e.g. ideal, constant, open-loop')
    parser.add_argument('--engine', choices=ENGINES, help='Engine that computes the curve')
    parser.add_argument('--gamma', type=float, help='Measurement rate γ (times are in units of 1/γ)')
    parser.add_argument('--eta', type=float, help='Detection efficiency η')
    parser.add_argument('--tau', type=float, help='Feedback delay τ')
    parser.add_argument('--delta', type=float, help='Calibration error δ')
    parser.add_argument('--alpha', type=float, help='Constant feedback strength α')
    parser.add_argument('--gamma-iso', type=float, help='Isotropic dephasing rate')
    parser.add_argument('--gamma-d', type=float, help='Damping rate')
    parser.add_argument('--t-end', type=float, help='Final time')
    parser.add_argument('--points', type=int, help='Number of output grid points')
    parser.add_argument('--dt', type=float, help='Integration step')
    parser.add_argument('--n-traj', type=int, help='Number of trajectories for stochastic engines')
    parser.add_argument('--seed', type=int, help='Base seed; trajectory i uses seed + i')
    parser.add_argument('--benchmark', choices=('bloch', 'lambda'), help='Open-loop benchmark convention')
    parser.add_argument('--out', type=str, help='Output CSV path')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='Rapid state preparation feedback toolkit')
    commands = parser.add_subparsers(dest='command', required=True)

    _add_common(commands.add_parser('curve', help='Curve of one scenario as CSV (t,value[,stderr])'))
    _add_common(commands.add_parser('ensemble', help='Stochastic ensemble mean ± standard error as CSV'))

    tables = commands.add_parser('tables', help='Reproduce the imperfection threshold tables')
    _add_common(tables)
    tables.add_argument('--which', type=int, choices=(1, 2), action='append',
                        help='Table to reproduce (repeatable, default: both)')

    _add_common(commands.add_parser('crossings', help='Crossing times of feedback curves with the benchmark'))

    speedup = commands.add_parser('speedup', help='Asymptotic speed-up of ideal feedback over open loop')
    _add_common(speedup)
    speedup.add_argument('--epsilon', type=float, action='append', help='Distance 1 - x of the target (repeatable)')

    validate = commands.add_parser('validate', help='Run the acceptance suite')
    _add_common(validate)
    validate.add_argument('--level', choices=('quick', 'full'), default='quick', help='Suite level')

    return parser.parse_args(argv)


def build_run_config(args, **forced):
    """RunConfig from the optional config file, overridden by explicitly given flags."""
    settings = {"params": {}}
    if args.config:
        settings = RunConfigParser(args.config).parse(scenario=args.scenario)
    for name in RUN_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    for name in PARAM_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            settings["params"][name] = value
    settings.update(forced)
    return RunConfig(**settings)


def _emit(frame, config, result_type, name):
    if config.out is not None:
        path = write_csv(frame, config.out)
    else:
        path = ResultRepository(CONFIG["storage_dir"]).save_data(result_type, frame, name)
    logger.info(f"Saved {len(frame)} rows to {path}")
    return path


def cmd_curve(args, **forced):
    config = build_run_config(args, **forced)
    frame = run_curve(config)
    _emit(frame, config, "curves", f"{config.scenario}_{config.engine}")
    return 0


def cmd_tables(args):
    config = build_run_config(args)
    analyzer = ImperfectionAnalyzer(config.benchmark, config.params.gamma)
    frames = []
    for which in args.which or (1, 2):
        print(analyzer.format_table(which))
        print()
        frames.append(analyzer.table_frame(which))
    frame = pd.concat(frames, ignore_index=True)
    _emit(frame, config, "tables", f"tables_{config.benchmark}")
    return 0


def cmd_crossings(args):
    config = build_run_config(args)
    report = ImperfectionAnalyzer(config.benchmark, config.params.gamma).crossing_report()
    for row in report.itertuples():
        note = f"  ({row.note})" if row.note else ""
        print(f"{row.crossing:<46} t = {row.computed:.4f}  published {row.published:g}{note}")
    _emit(report, config, "crossings", "crossings")
    return 0


def cmd_speedup(args):
    config = build_run_config(args)
    epsilons = tuple(args.epsilon) if args.epsilon else DEFAULT_EPSILONS
    report = ImperfectionAnalyzer(config.benchmark, config.params.gamma).speedup_report(epsilons)
    for row in report.itertuples():
        print(f"epsilon = {row.epsilon:<10.3g} speed-up = {row.ratio:.6f}")
    _emit(report, config, "crossings", "speedup")
    return 0


def cmd_validate(args):
    config = build_run_config(args)
    report = run_acceptance(args.level)
    print(report.format())
    if config.out is not None or args.level == "full":
        _emit(report.to_frame(), config, "validation", f"validation_{args.level}")
    if not report.passed:
        for failure in report.failures():
            logger.error(failure.detail)
        return 1
    return 0


def main(argv=None):
    args = parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, str(CONFIG["log_level"]).upper(), logging.INFO)
    logging.basicConfig(level=level, format='%(message)s')

    try:
        if args.command == 'curve':
            return cmd_curve(args)
        if args.command == 'ensemble':
            return cmd_curve(args, engine="sme")
        if args.command == 'tables':
            return cmd_tables(args)
        if args.command == 'crossings':
            return cmd_crossings(args)
        if args.command == 'speedup':
            return cmd_speedup(args)
        return cmd_validate(args)
    except (RspError, ValidationError, FileNotFoundError) as e:
        logger.error(f"Error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
