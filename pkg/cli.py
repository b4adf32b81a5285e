"""
Command-line front end.

Each subcommand loads its documents, calls into the library and prints either
plain values or a versioned JSON report. Failures map onto stable exit codes.
"""

import argparse
import logging
import sys
from enum import IntEnum
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from analysis import (
    analyze_equality,
    analyze_inequality,
    equality_tolerance_paper,
    equality_tolerance_strict,
    inequality_tolerance,
)
from bell import gamma_coefficients, local_bounds
from errors import DomainError, FormatError, NoViolationError, ResourceError
from formats import (
    dumps_document,
    load_document,
    load_expression,
    noise_from_dict,
    save_document,
    save_settings,
    settings_from_dict,
)
from optimize import OptimizationConfig, load_config, maximize, refine
from polytope import dimension_report
from quantum import NoiseModel, noisy_value, quantum_value
from scenario import format_gamma_index, format_p_key, p_in_gamma_table, parse_scenario
from verify import run_suite

_LOGGER = logging.getLogger(__name__)


class ExitCode(IntEnum):
    OK = 0
    NO_VIOLATION = 1
    CHECKS_FAILED = 1
    INPUT_ERROR = 2
    INTERNAL_ERROR = 3


class ToleranceMode:
    INEQUALITY = 'inequality'
    EQUALITY_PAPER = 'equality-paper'
    EQUALITY_STRICT = 'equality-strict'
    ALL = (INEQUALITY, EQUALITY_PAPER, EQUALITY_STRICT)


def fmt(value: float, full_precision: bool = False) -> str:
    return repr(float(value)) if full_precision else f'{value:.6g}'


def _settings_and_noise(path: Path):
    document = load_document(path)
    return settings_from_dict(document), noise_from_dict(document)


def _emit(document: dict, output: Optional[Path]):
    if output is None:
        sys.stdout.write(dumps_document(document))
    else:
        save_document(document, output)


def cmd_bounds(args) -> ExitCode:
    expr = load_expression(args.expression)
    lower, upper = local_bounds(expr)
    print(f'({fmt(lower, args.full_precision)}, {fmt(upper, args.full_precision)})')
    if args.gamma:
        values = gamma_coefficients(expr).values
        for index in np.ndindex(values.shape):
            print(f'{format_gamma_index(index)} {fmt(values[index], args.full_precision)}')
    return ExitCode.OK


def cmd_eval(args) -> ExitCode:
    expr = load_expression(args.expression)
    settings, noise = _settings_and_noise(args.settings)
    if args.noise is not None:
        noise = NoiseModel(args.noise)
    print(f'quantum_value {fmt(quantum_value(expr, settings), args.full_precision)}')
    if noise is not None:
        print(f'noisy_value {fmt(noisy_value(expr, settings, noise), args.full_precision)} (p={noise.p})')
    return ExitCode.OK


def cmd_tolerance(args) -> ExitCode:
    expr = load_expression(args.expression)
    settings, _noise = _settings_and_noise(args.settings)
    complement = load_expression(args.complement) if args.complement else None
    if args.mode == ToleranceMode.INEQUALITY:
        if complement is not None:
            _LOGGER.error('inequality mode takes no --complement; use equality-paper or equality-strict')
            return ExitCode.INPUT_ERROR
        p = inequality_tolerance(expr, settings)
    elif args.mode == ToleranceMode.EQUALITY_PAPER:
        if complement is None:
            _LOGGER.error('equality-paper mode needs --complement')
            return ExitCode.INPUT_ERROR
        p = equality_tolerance_paper(expr, complement, settings)
    else:
        p = equality_tolerance_strict(complement or expr, settings)
    print(fmt(p, args.full_precision))
    return ExitCode.OK


def cmd_rank(args) -> ExitCode:
    report = dimension_report(parse_scenario(args.scenario))
    _emit(report.to_dict(), args.output)
    return ExitCode.OK


def cmd_optimize(args) -> ExitCode:
    expr = load_expression(args.expression)
    complement = load_expression(args.complement) if args.complement else None
    config = load_config(args.config) if args.config else OptimizationConfig()
    config = config.with_overrides(seed=args.seed, restarts=args.restarts, max_iterations=args.max_iterations)
    if args.start:
        start, _noise = _settings_and_noise(args.start)
        result = refine(expr, start, config, complement)
    else:
        result = maximize(expr, complement, config, parallel=args.parallel)
    sys.stdout.write(dumps_document(result.to_dict()))
    output = args.output or Path('best_settings.json')
    save_settings(result.best_settings, output, provenance=f'{config.objective.value} search for {expr.name}')
    if not result.violated:
        _LOGGER.error(f'No violation found for {expr.name}')
        return ExitCode.NO_VIOLATION
    return ExitCode.OK


def cmd_verify_paper(args) -> ExitCode:
    report = run_suite(include_optimizer=not args.skip_optimizer, parallel=args.parallel)
    for check in report.checks:
        status = 'PASS' if check.passed else 'FAIL'
        print(f'{status} {check.name}: {fmt(check.computed, args.full_precision)} '
              f'(expected {fmt(check.expected, args.full_precision)})', file=sys.stderr)
    _emit(report.to_dict(), args.output)
    if not report.passed:
        _LOGGER.error(f'{len(report.failures())} verification checks failed')
        return ExitCode.CHECKS_FAILED
    return ExitCode.OK


def cmd_table(args) -> ExitCode:
    for key, indices in p_in_gamma_table(parse_scenario(args.scenario)).items():
        print(f'{format_p_key(key)} = ' + ' + '.join(format_gamma_index(index) for index in indices))
    return ExitCode.OK


def cmd_analyze(args) -> ExitCode:
    expr = load_expression(args.expression)
    settings, _noise = _settings_and_noise(args.settings)
    if args.complement:
        report = analyze_equality(expr, load_expression(args.complement), settings)
    else:
        report = analyze_inequality(expr, settings)
    _emit(report.to_dict(), args.output)
    return ExitCode.OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--full-precision', action='store_true', help='print every digit instead of 6')
    common.add_argument('--output', type=Path, help='write the report (or best settings) to this file')
    common.add_argument('--log-file', type=Path, help='also write log records to this file')
    common.add_argument('--verbose', action='store_true', help='log at DEBUG level')

    parser = argparse.ArgumentParser(prog='bellcheck', description='Bell expressions for two-setting scenarios')
    commands = parser.add_subparsers(dest='command', required=True)

    def command(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    sub = command('bounds', cmd_bounds, 'local bounds of an expression')
    sub.add_argument('expression', type=Path)
    sub.add_argument('--gamma', action='store_true', help='print the full gamma coefficient table')

    sub = command('eval', cmd_eval, 'quantum (and noisy) value')
    sub.add_argument('expression', type=Path)
    sub.add_argument('settings', type=Path)
    sub.add_argument('--noise', type=float, help='white-noise fraction p')

    sub = command('tolerance', cmd_tolerance, 'white-noise tolerance')
    sub.add_argument('expression', type=Path)
    sub.add_argument('settings', type=Path)
    sub.add_argument('--mode', choices=ToleranceMode.ALL, default=ToleranceMode.INEQUALITY)
    sub.add_argument('--complement', type=Path)

    sub = command('rank', cmd_rank, 'independent probability counts for a scenario')
    sub.add_argument('scenario', help='outcome counts "l1,l2,r1,r2"')

    sub = command('optimize', cmd_optimize, 'search quantum settings')
    sub.add_argument('expression', type=Path)
    sub.add_argument('config', type=Path, nargs='?')
    sub.add_argument('--complement', type=Path)
    sub.add_argument('--start', type=Path, help='refine from these settings instead of random restarts')
    sub.add_argument('--seed', type=int)
    sub.add_argument('--restarts', type=int)
    sub.add_argument('--max-iterations', type=int)
    sub.add_argument('--parallel', action='store_true')

    sub = command('verify-paper', cmd_verify_paper, 'reproduce the published numbers')
    sub.add_argument('--skip-optimizer', action='store_true', help='leave out the optimizer reachability checks')
    sub.add_argument('--parallel', action='store_true')

    sub = command('table', cmd_table, 'each probability written in gamma terms')
    sub.add_argument('scenario', nargs='?', default='3,3,3,3')

    sub = command('analyze', cmd_analyze, 'full analysis report')
    sub.add_argument('expression', type=Path)
    sub.add_argument('settings', type=Path)
    sub.add_argument('--complement', type=Path, help='treat the expression as an equality with this complement')
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def run(args: argparse.Namespace) -> int:
    try:
        return int(args.handler(args))
    except NoViolationError as exc:
        _LOGGER.error(f'No violation: {exc}')
        return ExitCode.NO_VIOLATION
    except (FormatError, DomainError, ResourceError, IndexError, OSError) as exc:
        _LOGGER.error(f'{args.command}: {exc}')
        return ExitCode.INPUT_ERROR
    except Exception:
        _LOGGER.exception(f'{args.command}: internal error')
        return ExitCode.INTERNAL_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    return run(parse_args(argv))
