"""
Main entry point for the Oscillator SAT Toolbox.
Command-line interface: solve, oracle, gen, table and gradcheck.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from modules.dynamics import SystemId
from modules.errors import (ConfigError, CornerError, FormulaError, IntegrationError,
                            OracleCapError, SolverError, TraceExportError)
from modules.formula import (DEFAULT_ORACLE_CAP, Objective, brute_force, generate_random_3sat,
                             read_dimacs_file, serialize_dimacs, write_dimacs_file)
from modules.gradcheck import DEFAULT_TOLERANCE, run_gradcheck_suites
from modules.kernel import S2Mode, SystemParams
from modules.system_two import clause_energy_table
from settings_manager import SettingsManager, SolverSettings
from solve_manager import SolveConfig, SolveManager, SolveReport, replay_report
from trace_export import emit_report, emit_table, emit_trace, load_report, params_header

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

EXIT_OK = 0
EXIT_BEST_EFFORT = 1
EXIT_INPUT_ERROR = 2
EXIT_IO_ERROR = 3

INPUT_ERRORS = (ConfigError, FormulaError, OracleCapError, CornerError, ValueError)

logger = logging.getLogger(__name__)


def configure_logging(level: str, log_file: Optional[str] = None):
    """Log to stderr (stdout carries command output) and optionally to a file"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='oscsat',
        description='Oscillator-inspired dynamical systems for 3-SAT and Max-NAE-3-SAT',
    )
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--log-file', default=None, help='also write log records to this file')
    commands = parser.add_subparsers(dest='command', required=True)

    solve = commands.add_parser('solve', help='solve a DIMACS instance with restarts')
    solve.add_argument('instance', nargs='?', help='DIMACS CNF file')
    solve.add_argument('--system', choices=[s.value for s in SystemId])
    solve.add_argument('--objective', choices=[o.value for o in Objective])
    solve.add_argument('--s2-mode', dest='s2_mode', choices=[m.value for m in S2Mode])
    solve.add_argument('--config', help='key = value settings file')
    solve.add_argument('--params', help='inline overrides, e.g. A=1.5,As=0.002,omega=6.28,an=5e-4,dt=1e-3')
    solve.add_argument('--restarts', type=int)
    solve.add_argument('--periods', type=float)
    solve.add_argument('--seed', type=int)
    solve.add_argument('--workers', type=int)
    solve.add_argument('--sample-stride', dest='sample_stride', type=int)
    solve.add_argument('--kernel-normalized', dest='kernel_normalized', action=argparse.BooleanOptionalAction,
                       default=None, help='drop the absent-variable kernel factors (System II default)')
    solve.add_argument('--no-oracle', dest='use_oracle', action='store_false', default=None)
    solve.add_argument('--allow-duplicates', action='store_true',
                       help='deduplicate repeated literals instead of rejecting them')
    solve.add_argument('--trace', help='write the best restart trace here')
    solve.add_argument('--trace-format', choices=['csv', 'json'], default='csv')
    solve.add_argument('--record-kernels', action='store_true', help='store clause kernels in JSON traces')
    solve.add_argument('--report', help='also write the report JSON here')
    solve.add_argument('--replay', help='re-run a saved report instead of an instance')

    oracle = commands.add_parser('oracle', help='exhaustive optimum of an instance')
    oracle.add_argument('instance')
    oracle.add_argument('--objective', choices=['all'] + [o.value for o in Objective], default='all')
    oracle.add_argument('--cap', type=int, default=DEFAULT_ORACLE_CAP)

    gen = commands.add_parser('gen', help='generate a uniform random 3-SAT instance')
    gen.add_argument('--vars', dest='n_vars', type=int, required=True)
    gen.add_argument('--clauses', dest='n_clauses', type=int, required=True)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--output', '-o', default=None)

    table = commands.add_parser('table', help='single-clause energies at every corner')
    table.add_argument('--params', help='A=...,As=... overrides for System II')
    table.add_argument('--output', '-o', default=None)

    gradcheck = commands.add_parser('gradcheck', help='finite-difference gradient checks')
    gradcheck.add_argument('--instances', type=int, default=50)
    gradcheck.add_argument('--states', type=int, default=10)
    gradcheck.add_argument('--seed', type=int, default=0)
    gradcheck.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE)

    return parser


def resolve_solve_settings(args: argparse.Namespace) -> SolverSettings:
    """Defaults < settings file < --params < explicit flags"""
    manager = SettingsManager()
    if args.config:
        manager.load_file(args.config)
    if args.system:
        manager.apply_overrides({'system': args.system})
    if args.params:
        manager.apply_params(args.params)
    manager.apply_overrides({
        'system': args.system,
        'objective': args.objective,
        's2_mode': args.s2_mode,
        'restarts': args.restarts,
        'periods': args.periods,
        'seed': args.seed,
        'workers': args.workers,
        'sample_stride': args.sample_stride,
        'kernel_normalized': args.kernel_normalized,
        'use_oracle': args.use_oracle,
    })
    return manager.validate()


def print_json(payload: Dict[str, Any]):
    sys.stdout.write(json.dumps(payload, indent=2, allow_nan=False) + '\n')


def cmd_solve(args: argparse.Namespace) -> int:
    settings: Optional[SolverSettings] = None
    try:
        if args.replay:
            configure_logging(SettingsManager().resolve_log_level(args.log_level), args.log_file)
            report = replay_report(load_report(args.replay), workers=args.workers)
        else:
            if not args.instance:
                raise ConfigError("solve needs an instance file or --replay")
            settings = resolve_solve_settings(args)
            configure_logging(SettingsManager(settings).resolve_log_level(args.log_level), args.log_file)
            formula = read_dimacs_file(args.instance, allow_duplicates=args.allow_duplicates)
            config = SolveConfig(formula=formula, settings=settings,
                                 keep_trace=bool(args.trace), record_kernels=args.record_kernels)
            report = _run_with_trace(config, args)
    except INPUT_ERRORS as e:
        logger.error(f"Invalid input: {e}")
        print_json(SolveReport.input_error(str(e), settings).to_dict())
        return EXIT_INPUT_ERROR
    except (TraceExportError, OSError) as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO_ERROR
    except IntegrationError as e:
        logger.error(f"Integration failed: {e}")
        return EXIT_BEST_EFFORT

    payload = report.to_dict()
    try:
        if args.report:
            emit_report(payload, args.report)
    except TraceExportError as e:
        logger.error(f"Failed to write report: {e}")
        return EXIT_IO_ERROR
    print_json(payload)
    return report.exit_code


def _run_with_trace(config: SolveConfig, args: argparse.Namespace) -> SolveReport:
    manager = SolveManager(config)
    report = manager.run()
    if args.trace and manager.trace is not None:
        emit_trace(manager.trace, args.trace_format, args.trace)
    return report


def cmd_oracle(args: argparse.Namespace) -> int:
    configure_logging(SettingsManager().resolve_log_level(args.log_level), args.log_file)
    objectives = list(Objective) if args.objective == 'all' else [Objective(args.objective)]
    try:
        formula = read_dimacs_file(args.instance)
        results = {o.value: brute_force(formula, o, cap=args.cap).to_dict() for o in objectives}
    except INPUT_ERRORS as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT_ERROR
    except OSError as e:
        logger.error(f"Cannot read {args.instance}: {e}")
        return EXIT_IO_ERROR
    print_json({'num_vars': formula.num_vars, 'num_clauses': formula.num_clauses, 'results': results})
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    configure_logging(SettingsManager().resolve_log_level(args.log_level), args.log_file)
    try:
        formula = generate_random_3sat(args.n_vars, args.n_clauses, args.seed)
    except INPUT_ERRORS as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT_ERROR
    if args.output is None or args.output == '-':
        sys.stdout.write(serialize_dimacs(formula))
        return EXIT_OK
    try:
        write_dimacs_file(formula, args.output)
    except OSError as e:
        logger.error(f"Failed to write {args.output}: {e}")
        return EXIT_IO_ERROR
    return EXIT_OK


def cmd_table(args: argparse.Namespace) -> int:
    configure_logging(SettingsManager().resolve_log_level(args.log_level), args.log_file)
    try:
        manager = SettingsManager(SolverSettings(system=SystemId.TWO.value))
        if args.params:
            manager.apply_params(args.params)
        params: SystemParams = manager.settings.to_params().require_positive_coupling()
        rows = clause_energy_table(params)
    except INPUT_ERRORS as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT_ERROR
    logger.info(f"Clause energy table at {params_header(params)}")
    try:
        emit_table(rows, args.output)
    except TraceExportError as e:
        logger.error(f"Failed to write table: {e}")
        return EXIT_IO_ERROR
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    configure_logging(SettingsManager().resolve_log_level(args.log_level), args.log_file)
    if args.instances < 1 or args.states < 1:
        logger.error("gradcheck needs at least one instance and one state")
        return EXIT_INPUT_ERROR
    results = run_gradcheck_suites(args.instances, args.states, args.seed, args.tolerance)
    print_json({'suites': [result.to_dict() for result in results]})
    return EXIT_OK if all(result.passed for result in results) else EXIT_BEST_EFFORT


COMMANDS = {
    'solve': cmd_solve,
    'oracle': cmd_oracle,
    'gen': cmd_gen,
    'table': cmd_table,
    'gradcheck': cmd_gradcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, matching the input-error code
        return int(e.code) if e.code is not None else EXIT_OK

    try:
        exit_code = COMMANDS[args.command](args)
        logger.info(f"{args.command} exited with code: {exit_code}")
        return exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_BEST_EFFORT
    except SolverError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
