"""Tests for Bell expressions, local bounds and complements."""

import itertools

import numpy as np
import pytest

from bell import (
    BellExpression,
    LocalBounds,
    cglmp,
    complement_gamma,
    complement_via_normalization,
    gamma_coefficients,
    is_formal,
    lambda_sum,
    local_bounds,
    local_bounds_enumerated,
    random_expression,
    rescaled_to_unit,
    split_outcome,
    verify_complement,
)
from errors import DomainError
from scenario import Party, Scenario, enumerate_strategies, gamma_to_p, random_gamma, strategy_to_p


def test_inequality_bounds(inequality_i):
    """I lies between -6 and 0 on every local model."""
    assert len(inequality_i) == 24
    assert lambda_sum(inequality_i) == -18
    assert local_bounds(inequality_i) == LocalBounds(-6.0, 0.0)
    assert local_bounds_enumerated(inequality_i) == LocalBounds(-6.0, 0.0)
    assert not is_formal(inequality_i)


def test_inequality_gamma_coefficients(inequality_i):
    """51 nonzero γ coefficients, the three minimal ones equal to -6."""
    coefficients = gamma_coefficients(inequality_i)
    assert coefficients.nonzero_count() == 51
    minima = {tuple(int(k) for k in index) for index in np.argwhere(coefficients.values == -6.0)}
    assert minima == {(0, 1, 1, 2), (1, 2, 2, 0), (2, 0, 0, 1)}
    assert coefficients.values.max() == 0.0


def test_equality_pair(equality_e, equality_ec):
    """E and E_c are formal and complementary, with 45 and 36 unit γ's."""
    assert local_bounds(equality_e) == LocalBounds(0.0, 1.0)
    assert local_bounds(equality_ec) == LocalBounds(0.0, 1.0)
    assert is_formal(equality_e)
    assert is_formal(equality_ec)
    assert verify_complement(equality_e, equality_ec)
    assert not verify_complement(equality_e, equality_e)
    assert int(np.sum(gamma_coefficients(equality_e).values == 1.0)) == 45
    assert int(np.sum(gamma_coefficients(equality_ec).values == 1.0)) == 36
    assert (lambda_sum(equality_e), lambda_sum(equality_ec)) == (5, 4)


def test_complement_gamma_matches_complement(equality_e, equality_ec):
    """1 - γ(E) is exactly γ(E_c)."""
    np.testing.assert_array_equal(complement_gamma(equality_e).values, gamma_coefficients(equality_ec).values)


def test_complement_gamma_of_all_ones_is_zero():
    """Σ P_11 has every γ coefficient 1, so its complement is the zero tensor."""
    scenario = Scenario(3, 3, 3, 3)
    ones = BellExpression(scenario, {(1, 1, i, j): 1.0 for i in range(3) for j in range(3)})
    assert not complement_gamma(ones).values.any()


def test_complement_gamma_rejects_non_binary(inequality_i):
    """Coefficients outside {0, 1} have no γ-level complement."""
    with pytest.raises(DomainError):
        complement_gamma(inequality_i)


def test_complement_via_normalization(equality_e, inequality_i):
    """Σ P_11 - expr complements any expression."""
    assert verify_complement(equality_e, complement_via_normalization(equality_e))
    assert verify_complement(inequality_i, complement_via_normalization(inequality_i, block=(2, 2)))
    assert complement_via_normalization(equality_e).name == 'E_c'


def test_verify_complement_scenario_mismatch(equality_e, formal_22):
    """Expressions from different scenarios cannot be compared."""
    with pytest.raises(DomainError):
        verify_complement(equality_e, formal_22)


def test_formal_22_22(formal_22):
    """P_11^11 + P_12^00 + P_21^00 - P_22^00 is formal in the binary scenario."""
    assert local_bounds(formal_22) == LocalBounds(0.0, 1.0)
    assert is_formal(formal_22)


def test_zero_expression_bounds():
    """An expression without terms has bounds (0, 0)."""
    assert local_bounds(BellExpression.zero(Scenario(2, 2, 2, 2))) == LocalBounds(0.0, 0.0)


def test_from_terms_rejects_duplicates_and_bad_keys():
    """Repeated keys are a domain error, out-of-range keys an IndexError."""
    scenario = Scenario(2, 2, 2, 2)
    with pytest.raises(DomainError):
        BellExpression.from_terms(scenario, [(1, 1, 0, 0, 1.0), (1, 1, 0, 0, 2.0)])
    with pytest.raises(IndexError):
        BellExpression.from_terms(scenario, [(1, 1, 2, 0, 1.0)])


def test_linear_plumbing(inequality_i):
    """I - I has no terms; scaling scales the bounds."""
    assert len(inequality_i.added(inequality_i.scaled(-1.0))) == 0
    assert local_bounds(inequality_i.scaled(-0.5)) == LocalBounds(0.0, 3.0)


def test_evaluate_on_a_strategy(inequality_i):
    """Evaluating on a strategy gives its γ coefficient."""
    scenario = inequality_i.scenario
    assert inequality_i.evaluate(strategy_to_p((0, 1, 1, 2), scenario)) == -6.0
    with pytest.raises(DomainError):
        inequality_i.evaluate(strategy_to_p((0, 0, 0, 0), Scenario(2, 2, 2, 2)))


def test_bounds_routes_agree_on_random_expressions(rng):
    """Coefficient extrema equal strategy enumeration across the {2,3} grid."""
    for counts in itertools.product((2, 3), repeat=4):
        scenario = Scenario(*counts)
        for _ in range(20):
            expr = random_expression(scenario, rng)
            by_coefficients, by_enumeration = local_bounds(expr), local_bounds_enumerated(expr)
            assert by_coefficients.lower == pytest.approx(by_enumeration.lower, abs=1e-12)
            assert by_coefficients.upper == pytest.approx(by_enumeration.upper, abs=1e-12)


def test_split_outcome_copies_terms(formal_22):
    """The new outcome takes the last index and inherits the split outcome's terms."""
    lifted = split_outcome(formal_22, Party.ALICE, 1, 1)
    assert lifted.scenario == Scenario(3, 2, 2, 2)
    assert lifted.terms[(1, 1, 2, 1)] == 1.0
    assert lifted.terms[(1, 1, 1, 1)] == 1.0
    assert local_bounds(lifted) == local_bounds(formal_22)
    assert is_formal(lifted)


def test_split_outcome_bob(formal_22):
    """Splitting on Bob's side extends the column."""
    lifted = split_outcome(formal_22, Party.BOB, 2, 0)
    assert lifted.scenario == Scenario(2, 2, 2, 3)
    assert lifted.terms[(1, 2, 0, 2)] == 1.0
    assert lifted.terms[(2, 2, 0, 2)] == -1.0


def test_split_outcome_without_terms_on_that_outcome(formal_22):
    """Nothing touches Alice's second setting, outcome 1: only the scenario grows."""
    lifted = split_outcome(formal_22, Party.ALICE, 2, 1)
    assert lifted.scenario == Scenario(2, 3, 2, 2)
    assert lifted.terms == formal_22.terms


def test_split_outcome_merges_back_on_strategies(formal_22):
    """On every refined strategy the lift equals the original at the merged strategy."""
    for party, setting, outcome in [(Party.ALICE, 1, 1), (Party.ALICE, 2, 0), (Party.BOB, 1, 0), (Party.BOB, 2, 1)]:
        lifted = split_outcome(formal_22, party, setting, outcome)
        slot = (party - 1) * 2 + (setting - 1)
        for strategy in enumerate_strategies(lifted.scenario):
            merged = list(strategy)
            if merged[slot] == 2:
                merged[slot] = outcome
            expected = formal_22.evaluate(strategy_to_p(tuple(merged), formal_22.scenario))
            assert lifted.evaluate(strategy_to_p(strategy, lifted.scenario)) == pytest.approx(expected, abs=1e-12)


def test_gamma_coefficients_pair_with_distributions(rng):
    """Pairing μ − ν with γ equals evaluating the expression on gamma_to_p(γ)."""
    for counts in [(2, 2, 2, 2), (2, 3, 2, 3), (3, 3, 3, 3)]:
        scenario = Scenario(*counts)
        for _ in range(10):
            expr = random_expression(scenario, rng)
            gamma = random_gamma(scenario, rng)
            expected = expr.evaluate(gamma_to_p(gamma))
            assert gamma_coefficients(expr).pair(gamma) == pytest.approx(expected, abs=1e-12)


def test_coefficient_vector_is_shared_and_read_only(inequality_i):
    """The dense form is built once and cannot be changed by callers."""
    vector = inequality_i.coefficient_vector()
    assert vector is inequality_i.coefficient_vector()
    assert vector.shape == (36,)
    with pytest.raises(ValueError, match='read-only'):
        vector[0] = 1.0


def test_split_outcome_invalid(formal_22):
    """Splitting a nonexistent outcome raises IndexError."""
    with pytest.raises(IndexError):
        split_outcome(formal_22, Party.ALICE, 1, 2)


def test_split_preserves_formality_on_random_expressions(rng):
    """Lifting keeps the bounds and formality of random formal expressions."""
    scenario = Scenario(2, 2, 2, 2)
    checked = 0
    while checked < 100:
        try:
            expr = rescaled_to_unit(random_expression(scenario, rng))
        except DomainError:
            continue
        checked += 1
        assert is_formal(expr)
        party, setting, outcome = Party(int(rng.integers(1, 3))), int(rng.integers(1, 3)), int(rng.integers(0, 2))
        lifted = split_outcome(expr, party, setting, outcome)
        assert local_bounds(lifted).lower == pytest.approx(local_bounds(expr).lower, abs=1e-12)
        assert local_bounds(lifted).upper == pytest.approx(local_bounds(expr).upper, abs=1e-12)
        assert is_formal(lifted)


def test_cglmp_bounds():
    """CGLMP(3) lies in [-4, 2]; CGLMP(2) is CHSH in [-2, 2]."""
    assert local_bounds(cglmp(3)) == LocalBounds(-4.0, 2.0)
    assert local_bounds(cglmp(2)) == LocalBounds(-2.0, 2.0)
    assert lambda_sum(cglmp(3)) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        cglmp(1)
