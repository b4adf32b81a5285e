"""
Derivative-free search over quantum settings.

The free parameters (state coefficients as 2·D² reals, and/or the two phase
pairs) are packed into one real vector and searched with Nelder-Mead. The
state block is renormalized and the phases are wrapped into [0, D) before
every evaluation, so each candidate is a valid setting.

Where the requested objective is undefined (no violation yet) the search
follows a signed surrogate that is negative there and continuous with the
objective at the boundary.

When the state is free, every Nelder-Mead launch is preceded by an exact
state step: at the current phases the extreme eigenvectors of the Bell
operator are scored and kept if they beat the best point. Launches repeat
from the best point with a fresh simplex until one gains less than the
configured tolerance or the iteration budget runs out.
"""

import logging
import multiprocessing as mp
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from analysis import (
    VIOLATION_ATOL,
    bound_crossing,
    bound_gap,
    equality_tolerance_paper,
    inequality_tolerance,
    pinned_crossing,
    pinned_gap,
    violation_amount,
)
from bell import BellExpression, local_bounds, verify_complement
from errors import DomainError, FormatError
from formats import FORMAT_VERSION, load_document, settings_from_dict, settings_to_dict
from quantum import (
    QuantumSettings,
    extremal_states,
    maximally_entangled,
    probability_table,
    quantum_value,
    random_settings,
    validate_settings,
    white_noise_value,
)

_LOGGER = logging.getLogger(__name__)

TRACE_LOG_EVERY = 500


class Objective(str, Enum):
    VIOLATION = 'violation'
    QUANTUM_VALUE = 'quantum_value'
    TOLERANCE = 'tolerance'
    TOLERANCE_PAPER = 'tolerance_paper'


class ParameterGroup(str, Enum):
    STATE = 'state'
    ALPHA = 'alpha'
    BETA = 'beta'


@dataclass(frozen=True)
class OptimizationConfig:
    objective: Objective = Objective.VIOLATION
    free_parameters: Tuple[ParameterGroup, ...] = tuple(ParameterGroup)
    restarts: int = 20
    max_iterations: int = 4000
    seed: int = 0
    tolerance: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, 'objective', Objective(self.objective))
        groups = {ParameterGroup(group) for group in self.free_parameters}
        if not groups:
            raise DomainError('At least one parameter group must be free')
        object.__setattr__(self, 'free_parameters', tuple(g for g in ParameterGroup if g in groups))
        if self.restarts < 1:
            raise DomainError(f'restarts must be positive, got {self.restarts}')
        if self.max_iterations < 0:
            raise DomainError(f'max_iterations must be nonnegative, got {self.max_iterations}')
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
        if self.tolerance <= 0:
            raise DomainError(f'tolerance must be positive, got {self.tolerance}')

    def with_overrides(self, **changes) -> 'OptimizationConfig':
        """Replace the fields given with a non-None value."""
        return replace(self, **{key: value for key, value in changes.items() if value is not None})

    def to_dict(self) -> dict:
        return {
            'format_version': FORMAT_VERSION,
            'kind': 'optimizer_config',
            'optimizer': {
                'objective': self.objective.value,
                'free_parameters': [group.value for group in self.free_parameters],
                'restarts': self.restarts,
                'max_iterations': self.max_iterations,
                'seed': self.seed,
                'tolerance': self.tolerance,
            },
        }

    @classmethod
    def from_dict(cls, document: dict) -> 'OptimizationConfig':
        try:
            block = document['optimizer']
            return cls(
                objective=block['objective'],
                free_parameters=tuple(block['free_parameters']),
                restarts=int(block['restarts']),
                max_iterations=int(block['max_iterations']),
                seed=int(block['seed']),
                tolerance=float(block.get('tolerance', 1e-10)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f'Malformed optimizer config: {exc}') from exc


def load_config(path: Union[str, Path]) -> OptimizationConfig:
    return OptimizationConfig.from_dict(load_document(path))


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    objective: Objective
    best_settings: QuantumSettings
    best_objective: float
    violated: bool
    iterations_used: int
    restart_index: int
    trace: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'format_version': FORMAT_VERSION,
            'kind': 'optimization',
            'objective': Objective(self.objective).value,
            'best_objective': self.best_objective,
            'violated': self.violated,
            'iterations_used': self.iterations_used,
            'restart_index': self.restart_index,
            'trace': [[iteration, value] for iteration, value in self.trace],
            'settings': settings_to_dict(self.best_settings),
        }

    @classmethod
    def from_dict(cls, document: dict) -> 'OptimizationResult':
        return cls(
            objective=Objective(document['objective']),
            best_settings=settings_from_dict(document['settings']),
            best_objective=document['best_objective'],
            violated=document['violated'],
            iterations_used=document['iterations_used'],
            restart_index=document['restart_index'],
            trace=[(iteration, value) for iteration, value in document['trace']],
        )


def objective_value(objective: Objective, expr: BellExpression, settings: QuantumSettings,
                    complement: Optional[BellExpression] = None) -> Optional[float]:
    """The objective as reported; None where it is undefined."""
    objective = Objective(objective)
    if objective is Objective.TOLERANCE_PAPER and complement is None:
        raise DomainError('tolerance_paper needs a complement expression')
    try:
        if objective is Objective.QUANTUM_VALUE:
            return quantum_value(expr, settings)
        if objective is Objective.VIOLATION:
            return violation_amount(expr, settings, complement)
        if objective is Objective.TOLERANCE:
            return inequality_tolerance(expr, settings)
        return equality_tolerance_paper(expr, complement, settings)
    except DomainError as exc:
        _LOGGER.debug(f'{objective.value} undefined: {exc}')
        return None


class _Search:
    """One objective over one packed parameter vector. The complement must already be verified."""

    def __init__(self, expr: BellExpression, complement: Optional[BellExpression], config: OptimizationConfig,
                 base: QuantumSettings):
        self.expr = expr
        self.complement = complement
        self.config = config
        self.base = base
        self.bounds = local_bounds(expr)
        self.white = white_noise_value(expr)
        self.vector = expr.coefficient_vector()
        self.complement_vector = None if complement is None else complement.coefficient_vector()
        self.state_free = ParameterGroup.STATE in config.free_parameters
        self.best_score = -np.inf
        self.best_x: Optional[np.ndarray] = None

    def encode(self, settings: QuantumSettings) -> np.ndarray:
        parts = []
        for group in self.config.free_parameters:
            if group is ParameterGroup.STATE:
                parts.extend([settings.C.real.ravel(), settings.C.imag.ravel()])
            elif group is ParameterGroup.ALPHA:
                parts.append(np.asarray(settings.alpha))
            else:
                parts.append(np.asarray(settings.beta))
        return np.concatenate(parts)

    def decode(self, x: np.ndarray) -> QuantumSettings:
        d = self.base.dimension
        state, alpha, beta = self.base.C, self.base.alpha, self.base.beta
        offset = 0
        for group in self.config.free_parameters:
            if group is ParameterGroup.STATE:
                size = d * d
                candidate = (x[offset:offset + size] + 1j * x[offset + size:offset + 2 * size]).reshape(d, d)
                offset += 2 * size
                norm = np.linalg.norm(candidate)
                if norm > 0.0:
                    state = candidate / norm
            else:
                phases = tuple(np.mod(x[offset:offset + 2], d))
                offset += 2
                if group is ParameterGroup.ALPHA:
                    alpha = phases
                else:
                    beta = phases
        return QuantumSettings(d, state, alpha, beta, name=f'{self.expr.name}_optimized')

    def values(self, settings: QuantumSettings) -> Tuple[float, Optional[float]]:
        """Expression and complement values from a single probability table."""
        table = probability_table(settings).values
        complement_value = None if self.complement_vector is None else float(self.complement_vector @ table)
        return float(self.vector @ table), complement_value

    def score(self, settings: QuantumSettings) -> float:
        objective = self.config.objective
        value, complement_value = self.values(settings)
        if objective is Objective.QUANTUM_VALUE:
            return value
        try:
            if complement_value is not None and objective is not Objective.TOLERANCE:
                if complement_value >= 0.0:
                    return -complement_value
                if objective is Objective.VIOLATION:
                    return pinned_gap(value, complement_value)
                return pinned_crossing(value, complement_value, self.white)
            gap = bound_gap(value, self.bounds)
            if objective is Objective.VIOLATION or gap <= 0.0:
                return gap
            return bound_crossing(value, self.white, self.bounds)
        except DomainError:
            return 0.0

    def __call__(self, x: np.ndarray) -> float:
        value = self.score(self.decode(x))
        if value > self.best_score:
            self.best_score = value
            self.best_x = np.array(x, copy=True)
        return -value

    def step_state(self, x: np.ndarray):
        """Score the extreme eigenstates at the phases of ``x``; the better one may become the best point."""
        for candidate in extremal_states(self.expr, self.decode(x)):
            self(self.encode(candidate))

    def run(self, start: QuantumSettings) -> Tuple[QuantumSettings, int, List[Tuple[int, float]]]:
        """Local search from ``start``; returns the best settings seen, iterations used and the trace."""
        start_score = self.score(start)
        self.best_score, self.best_x = start_score, None
        trace = [(0, start_score)]
        budget = self.config.max_iterations
        used = 0

        def record(_xk):
            trace.append((len(trace), self.best_score))
            if len(trace) % TRACE_LOG_EVERY == 0:
                _LOGGER.debug(f'iteration {trace[-1][0]}: best {self.best_score:.10g}')

        x0 = self.encode(start)
        while budget > 0:
            before = self.best_score
            if self.state_free:
                self.step_state(x0)
                x0 = x0 if self.best_x is None else self.best_x
            if used >= budget:
                break
            result = minimize(
                self,
                x0,
                method='Nelder-Mead',
                callback=record,
                options={'maxiter': budget - used, 'xatol': 1e-9, 'fatol': self.config.tolerance, 'adaptive': False},
            )
            used += max(int(result.nit), 1)
            x0 = x0 if self.best_x is None else self.best_x
            if self.best_score - before <= self.config.tolerance:
                break
        best = start if self.best_x is None or self.best_score <= start_score else self.decode(self.best_x)
        return best, used, trace


def _dimension(expr: BellExpression) -> int:
    if not expr.scenario.is_uniform():
        raise DomainError(f'Quantum search needs a uniform scenario, got {expr.scenario.label()}')
    return expr.scenario.l1


def _check_inputs(expr: BellExpression, complement: Optional[BellExpression], config: OptimizationConfig):
    if config.objective is Objective.TOLERANCE_PAPER and complement is None:
        raise DomainError('tolerance_paper needs a complement expression')
    if complement is not None and not verify_complement(expr, complement):
        raise DomainError(f'{complement.name!r} is not a complement of {expr.name!r}')


def _finish(expr, complement, config, settings, used, restart_index, trace) -> OptimizationResult:
    value = objective_value(config.objective, expr, settings, complement)
    violated = value is not None and violation_amount(expr, settings, complement) > VIOLATION_ATOL
    if value is None:
        _LOGGER.warning(f'Restart {restart_index}: {config.objective.value} undefined at the best point')
    return OptimizationResult(
        objective=config.objective,
        best_settings=settings,
        best_objective=0.0 if value is None else value,
        violated=violated,
        iterations_used=used,
        restart_index=restart_index,
        trace=trace,
    )


def _starting_point(base: QuantumSettings, config: OptimizationConfig, restart_index: int) -> QuantumSettings:
    d = base.dimension
    rng = np.random.default_rng(config.seed ^ restart_index)
    drawn = random_settings(d, rng, phase_scale=float(d))
    free = config.free_parameters
    return QuantumSettings(
        d,
        drawn.C if ParameterGroup.STATE in free else base.C,
        drawn.alpha if ParameterGroup.ALPHA in free else base.alpha,
        drawn.beta if ParameterGroup.BETA in free else base.beta,
        name=f'restart_{restart_index}',
    )


def _run_restart(expr: BellExpression, complement: Optional[BellExpression], config: OptimizationConfig,
                 base: QuantumSettings, restart_index: int) -> Tuple[float, OptimizationResult]:
    search = _Search(expr, complement, config, base)
    settings, used, trace = search.run(_starting_point(base, config, restart_index))
    score = search.score(settings)
    _LOGGER.info(f'Restart {restart_index}: score {score:.10g} after {used} iterations')
    return score, _finish(expr, complement, config, settings, used, restart_index, trace)


def maximize(expr: BellExpression, complement: Optional[BellExpression], config: OptimizationConfig,
             base: Optional[QuantumSettings] = None, parallel: bool = False) -> OptimizationResult:
    """
    Best of ``config.restarts`` seeded local searches.

    Restart k draws its start from seed XOR k. Groups that are not free are
    taken from ``base`` (maximal entanglement with zero phases by default).
    Ties go to the lowest restart index.
    """
    _check_inputs(expr, complement, config)
    d = _dimension(expr)
    base = base or maximally_entangled(d)
    if base.dimension != d:
        raise DomainError(f'Base settings have dimension {base.dimension}, expression needs {d}')
    jobs = [(expr, complement, config, base, k) for k in range(config.restarts)]
    if parallel and config.restarts > 1:
        with mp.Pool() as pool:
            outcomes = pool.starmap(_run_restart, jobs)
    else:
        outcomes = [_run_restart(*job) for job in jobs]
    _score, best = max(outcomes, key=lambda outcome: (outcome[0], -outcome[1].restart_index))
    _LOGGER.info(f'Best {config.objective.value} {best.best_objective:.10g} from restart {best.restart_index}')
    return best


def refine(expr: BellExpression, start: QuantumSettings, config: OptimizationConfig,
           complement: Optional[BellExpression] = None) -> OptimizationResult:
    """Single local search from ``start``; never worse than the start."""
    if not validate_settings(start):
        raise DomainError(f'Start settings are not normalized: Σ|C|² = {start.norm_squared():.12g}')
    _check_inputs(expr, complement, config)
    if start.dimension != _dimension(expr):
        raise DomainError(f'Start has dimension {start.dimension}, expression needs {expr.scenario.label()}')
    search = _Search(expr, complement, config, start)
    settings, used, trace = search.run(start)
    return _finish(expr, complement, config, settings, used, 0, trace)
