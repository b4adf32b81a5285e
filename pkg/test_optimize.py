"""Tests for the settings search."""

import json

import numpy as np
import pytest

from bell import BellExpression
from errors import DomainError, FormatError
from formats import fixture_path
from optimize import (
    Objective,
    OptimizationConfig,
    OptimizationResult,
    ParameterGroup,
    load_config,
    maximize,
    objective_value,
    refine,
)
from quantum import maximally_entangled, quantum_value, validate_settings
from scenario import Scenario

QUICK = OptimizationConfig(restarts=2, max_iterations=150, seed=3)


@pytest.mark.parametrize('changes', [
    {'restarts': 0},
    {'max_iterations': -1},
    {'seed': -1},
    {'tolerance': 0.0},
    {'free_parameters': ()},
])
def test_config_validation(changes):
    """Out-of-range settings are rejected at construction."""
    with pytest.raises(DomainError):
        OptimizationConfig(**changes)


def test_config_normalizes_groups():
    """Strings become enums and groups come back in canonical order."""
    config = OptimizationConfig(objective='tolerance', free_parameters=('beta', 'state'))
    assert config.objective is Objective.TOLERANCE
    assert config.free_parameters == (ParameterGroup.STATE, ParameterGroup.BETA)


def test_with_overrides_skips_none():
    """Only values actually given replace the defaults."""
    config = QUICK.with_overrides(seed=9, restarts=None)
    assert config.seed == 9
    assert config.restarts == QUICK.restarts


def test_config_fixtures():
    """Bundled search configs load with their seeds."""
    violation = load_config(fixture_path('optimizer_violation'))
    assert violation.objective is Objective.VIOLATION
    assert (violation.restarts, violation.seed, violation.max_iterations) == (20, 1, 4000)
    tolerance = load_config(fixture_path('optimizer_tolerance'))
    assert tolerance.objective is Objective.TOLERANCE_PAPER
    assert (tolerance.restarts, tolerance.seed) == (50, 7)


def test_config_round_trip():
    """to_dict and from_dict agree."""
    config = OptimizationConfig(objective=Objective.QUANTUM_VALUE, free_parameters=(ParameterGroup.ALPHA,), seed=5)
    assert OptimizationConfig.from_dict(config.to_dict()) == config


def test_malformed_config():
    """A missing optimizer block or a bad objective is a format error."""
    with pytest.raises(FormatError):
        OptimizationConfig.from_dict({'format_version': '1'})
    document = QUICK.to_dict()
    document['optimizer']['objective'] = 'fastest'
    with pytest.raises(FormatError):
        OptimizationConfig.from_dict(document)


def test_refine_with_no_budget_returns_start(inequality_i, inequality_settings):
    """Zero iterations gives back the start settings untouched."""
    result = refine(inequality_i, inequality_settings, QUICK.with_overrides(max_iterations=0))
    assert result.best_settings is inequality_settings
    assert result.iterations_used == 0
    assert result.best_objective == pytest.approx(0.91485, abs=1e-4)
    assert result.violated


def test_refine_never_worse(inequality_i, inequality_settings):
    """A short local search does not lose ground."""
    start = quantum_value(inequality_i, inequality_settings)
    result = refine(inequality_i, inequality_settings, QUICK.with_overrides(objective='quantum_value'))
    assert result.best_objective >= start - 1e-12
    assert result.iterations_used <= QUICK.max_iterations


def test_state_step_leaves_a_flat_start(inequality_i, inequality_settings, product_settings):
    """From a product state the eigenstate step reaches at least the published value at the same phases."""
    start = inequality_settings.with_state(product_settings.C)
    assert quantum_value(inequality_i, start) == pytest.approx(-2.0, abs=1e-12)
    result = refine(inequality_i, start, QUICK.with_overrides(max_iterations=1))
    assert result.best_objective >= quantum_value(inequality_i, inequality_settings) - 1e-12
    assert result.violated
    assert validate_settings(result.best_settings)


def test_relaunches_stop_within_budget(inequality_i):
    """Fresh-simplex relaunches share one iteration budget per restart."""
    result = maximize(inequality_i, None, QUICK.with_overrides(restarts=1, max_iterations=300))
    assert 0 < result.iterations_used <= 300


def test_pinned_violation_search_on_local_complement(equality_e, equality_ec, product_settings):
    """Where the complement is nonnegative the pair is not violated."""
    config = QUICK.with_overrides(max_iterations=0)
    result = refine(equality_e, product_settings, config, equality_ec)
    assert quantum_value(equality_ec, product_settings) >= 0.0
    assert result.best_objective == 0.0
    assert not result.violated


def test_refine_rejects_unnormalized(inequality_i):
    """The start must be a valid state of the right dimension."""
    with pytest.raises(DomainError):
        refine(inequality_i, maximally_entangled(3).with_state(np.eye(3)), QUICK)
    with pytest.raises(DomainError):
        refine(inequality_i, maximally_entangled(2), QUICK)


def test_maximize_is_deterministic(inequality_i):
    """The same seed gives the same best point."""
    first = maximize(inequality_i, None, QUICK)
    second = maximize(inequality_i, None, QUICK)
    assert first.best_objective == second.best_objective
    assert first.restart_index == second.restart_index
    np.testing.assert_array_equal(first.best_settings.C, second.best_settings.C)


def test_maximize_result_is_consistent(inequality_i):
    """Best settings are valid and reproduce the reported objective."""
    config = QUICK.with_overrides(objective='quantum_value')
    result = maximize(inequality_i, None, config)
    assert validate_settings(result.best_settings)
    assert all(0.0 <= phase < 3.0 for phase in result.best_settings.alpha + result.best_settings.beta)
    assert result.best_objective == pytest.approx(
        objective_value(config.objective, inequality_i, result.best_settings), abs=1e-12)
    values = [value for _iteration, value in result.trace]
    assert values == sorted(values)


def test_pinned_state_stays_put(inequality_i):
    """Only the free groups move."""
    config = QUICK.with_overrides(free_parameters=(ParameterGroup.ALPHA, ParameterGroup.BETA))
    base = maximally_entangled(3)
    result = maximize(inequality_i, None, config, base=base)
    np.testing.assert_array_equal(result.best_settings.C, base.C)


def test_tolerance_paper_needs_complement(equality_e):
    """The pinned-benchmark objective is meaningless without E_c."""
    with pytest.raises(DomainError):
        maximize(equality_e, None, QUICK.with_overrides(objective='tolerance_paper'))
    with pytest.raises(DomainError):
        objective_value(Objective.TOLERANCE_PAPER, equality_e, maximally_entangled(3))


def test_non_uniform_scenario_is_rejected():
    """Quantum search needs all outcome counts equal."""
    expr = BellExpression(Scenario(2, 2, 3, 3), {(1, 1, 0, 0): 1.0})
    with pytest.raises(DomainError):
        maximize(expr, None, QUICK)


def test_zero_expression_has_nothing_to_find():
    """An identically zero expression is never violated."""
    result = maximize(BellExpression.zero(Scenario(3, 3, 3, 3)), None, QUICK)
    assert result.best_objective == 0.0
    assert not result.violated


def test_objective_value_undefined_is_none(inequality_i, product_settings):
    """Tolerance at a local point has no value."""
    assert objective_value(Objective.TOLERANCE, inequality_i, product_settings) is None
    assert objective_value(Objective.VIOLATION, inequality_i, product_settings) == 0.0


def test_result_round_trip(inequality_i, inequality_settings):
    """Results re-serialize to the same text."""
    result = refine(inequality_i, inequality_settings, QUICK.with_overrides(max_iterations=20))
    text = json.dumps(result.to_dict(), indent=2)
    assert json.dumps(OptimizationResult.from_dict(json.loads(text)).to_dict(), indent=2) == text


@pytest.mark.slow
def test_reaches_inequality_violation(inequality_i):
    """Free search finds δ(I) ≥ 0.9148."""
    result = maximize(inequality_i, None, load_config(fixture_path('optimizer_violation')))
    assert result.best_objective >= 0.9148
    assert result.violated


@pytest.mark.slow
def test_reaches_maximally_entangled_violation(inequality_i):
    """With the state pinned to maximal entanglement, δ(I) ≥ 0.872."""
    config = load_config(fixture_path('optimizer_violation')).with_overrides(
        free_parameters=(ParameterGroup.ALPHA, ParameterGroup.BETA))
    result = maximize(inequality_i, None, config, base=maximally_entangled(3))
    assert result.best_objective >= 0.872


@pytest.mark.slow
def test_reaches_equality_tolerance(equality_e, equality_ec):
    """The pinned-benchmark tolerance search reaches 0.502."""
    result = maximize(equality_e, equality_ec, load_config(fixture_path('optimizer_tolerance')))
    assert result.best_objective >= 0.502


@pytest.mark.slow
def test_refine_from_published_settings(equality_e, equality_ec, equality_settings):
    """Refining the published equality settings keeps the 0.50203 tolerance."""
    config = OptimizationConfig(objective='tolerance_paper', max_iterations=2000)
    result = refine(equality_e, equality_settings, config, equality_ec)
    assert result.best_objective >= 0.50203 - 1e-4


@pytest.mark.slow
def test_parallel_matches_serial(inequality_i):
    """A worker pool changes nothing but wall time."""
    serial = maximize(inequality_i, None, QUICK.with_overrides(restarts=3))
    parallel = maximize(inequality_i, None, QUICK.with_overrides(restarts=3), parallel=True)
    assert parallel.best_objective == serial.best_objective
    assert parallel.restart_index == serial.restart_index
