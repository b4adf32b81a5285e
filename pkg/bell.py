"""
Bell expressions as linear forms over joint probabilities.

An expression assigns a real coefficient λ to each P_{ab}^{ij}. Pulling λ back
through the marginal map gives one net coefficient per outcome quadruple, and
because local models are mixtures of deterministic strategies the local bounds
are simply the extreme entries of that coefficient tensor.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from errors import DomainError
from scenario import (
    GammaTensor,
    Party,
    PKey,
    PVector,
    Scenario,
    enumerate_strategies,
    marginal_matrix,
    strategy_to_p,
)

_LOGGER = logging.getLogger(__name__)

COEFFICIENT_ATOL = 1e-12

Term = Tuple[int, int, int, int, float]


@dataclass(frozen=True)
class BellExpression:
    """
    Sparse real coefficients over (a, b, i, j).

    Settings a, b are 1-based; outcomes i, j are 0-based. Zero coefficients are
    dropped on construction.
    """

    scenario: Scenario
    terms: Mapping[PKey, float] = field(default_factory=dict)
    name: str = ''

    def __post_init__(self):
        cleaned: Dict[PKey, float] = {}
        for key, coefficient in self.terms.items():
            key = tuple(int(k) for k in key)
            self.scenario.p_index(*key)
            if coefficient != 0:
                cleaned[key] = float(coefficient)
        ordered = sorted(cleaned.items(), key=lambda item: self.scenario.p_index(*item[0]))
        object.__setattr__(self, 'terms', dict(ordered))
        vector = np.zeros(self.scenario.p_dimension())
        for key, coefficient in ordered:
            vector[self.scenario.p_index(*key)] = coefficient
        vector.flags.writeable = False
        object.__setattr__(self, '_vector', vector)

    @classmethod
    def from_terms(cls, scenario: Scenario, entries: Iterable[Term], name: str = '') -> 'BellExpression':
        """Build from (a, b, i, j, coefficient) rows; a repeated key is an error."""
        terms: Dict[PKey, float] = {}
        for a, b, i, j, coefficient in entries:
            key = (int(a), int(b), int(i), int(j))
            if key in terms:
                raise DomainError(f'Duplicate term P_{a}{b}^{i}{j} in expression {name!r}')
            terms[key] = float(coefficient)
        return cls(scenario, terms, name)

    @classmethod
    def zero(cls, scenario: Scenario, name: str = 'zero') -> 'BellExpression':
        return cls(scenario, {}, name)

    def coefficient_vector(self) -> np.ndarray:
        """Dense λ in canonical layout, built once per expression (read-only)."""
        return self._vector

    def evaluate(self, p: PVector) -> float:
        if p.scenario != self.scenario:
            raise DomainError(f'Expression is for {self.scenario.label()}, probabilities are for {p.scenario.label()}')
        return float(self._vector @ p.values)

    def scaled(self, factor: float) -> 'BellExpression':
        return BellExpression(self.scenario, {key: factor * c for key, c in self.terms.items()}, self.name)

    def added(self, other: 'BellExpression', name: Optional[str] = None) -> 'BellExpression':
        if other.scenario != self.scenario:
            raise DomainError(f'Cannot add {other.scenario.label()} expression to {self.scenario.label()} expression')
        terms = dict(self.terms)
        for key, coefficient in other.terms.items():
            terms[key] = terms.get(key, 0.0) + coefficient
        return BellExpression(self.scenario, terms, self.name if name is None else name)

    def renamed(self, name: str) -> 'BellExpression':
        return BellExpression(self.scenario, self.terms, name)

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True, eq=False)
class GammaCoefficients:
    """Net coefficient μ − ν of every γ after expanding an expression."""

    scenario: Scenario
    values: np.ndarray

    def pair(self, gamma: GammaTensor) -> float:
        if gamma.scenario != self.scenario:
            raise DomainError('Coefficient tensor and gamma tensor belong to different scenarios')
        return float(np.sum(self.values * gamma.values))

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(np.abs(self.values) > COEFFICIENT_ATOL))

    def is_binary(self) -> bool:
        near_zero = np.abs(self.values) <= COEFFICIENT_ATOL
        near_one = np.abs(self.values - 1.0) <= COEFFICIENT_ATOL
        return bool(np.all(near_zero | near_one))


class LocalBounds(NamedTuple):
    """Lower (−d) and upper (c) values of an expression over all local models."""
    lower: float
    upper: float

    @property
    def range(self) -> float:
        return self.upper - self.lower


def gamma_coefficients(expr: BellExpression) -> GammaCoefficients:
    matrix = marginal_matrix(expr.scenario)
    values = (matrix.T @ expr.coefficient_vector()).reshape(expr.scenario.gamma_shape)
    return GammaCoefficients(expr.scenario, values)


def local_bounds(expr: BellExpression) -> LocalBounds:
    """Extremes of the γ coefficient tensor, implicit zeros included."""
    values = gamma_coefficients(expr).values
    return LocalBounds(float(values.min()), float(values.max()))


def local_bounds_enumerated(expr: BellExpression) -> LocalBounds:
    """Same bounds, found by evaluating the expression on every deterministic strategy."""
    vector = expr.coefficient_vector()
    values = [float(vector @ strategy_to_p(s, expr.scenario).values) for s in enumerate_strategies(expr.scenario)]
    return LocalBounds(min(values), max(values))


def is_formal(expr: BellExpression, atol: float = COEFFICIENT_ATOL) -> bool:
    lower, upper = local_bounds(expr)
    return abs(lower) <= atol and abs(upper - 1.0) <= atol


def complement_gamma(expr: BellExpression) -> GammaCoefficients:
    """
    The γ-level complement 1 − coefficients of a 0/1 expression.

    Binary coefficients keep every local value inside [0, 1]; anything else
    (including every non-formal expression with a wider local range) has no
    complement here.
    """
    coefficients = gamma_coefficients(expr)
    if not coefficients.is_binary():
        raise DomainError(f'Expression {expr.name!r} has non-binary gamma coefficients; its complement is undefined')
    return GammaCoefficients(expr.scenario, 1.0 - coefficients.values)


def verify_complement(first: BellExpression, second: BellExpression) -> bool:
    """True when the two expressions sum to one on every local model."""
    if first.scenario != second.scenario:
        raise DomainError(f'Scenario mismatch: {first.scenario.label()} vs {second.scenario.label()}')
    total = gamma_coefficients(first).values + gamma_coefficients(second).values
    return bool(np.allclose(total, 1.0, rtol=0.0, atol=COEFFICIENT_ATOL))


def complement_via_normalization(expr: BellExpression, block: Tuple[int, int] = (1, 1)) -> BellExpression:
    """
    Σ_ij P_{block}^{ij} − expr.

    Normalization makes the block sum equal one for every model, so this is a
    complement of any expression. It is not the shortest such form.
    """
    a, b = block
    rows, cols = expr.scenario.block_shape(a, b)
    ones = BellExpression(expr.scenario, {(a, b, i, j): 1.0 for i in range(rows) for j in range(cols)})
    name = f'{expr.name}_c' if expr.name else 'complement'
    return ones.added(expr.scaled(-1.0), name=name)


def split_outcome(expr: BellExpression, party: Party, setting: int, outcome: int) -> BellExpression:
    """
    Refine one outcome of (party, setting) into two.

    The split outcome keeps its index and the new one takes the last index; every
    term on the split outcome is copied onto the new outcome with the same
    coefficient.
    """
    party = Party(party)
    count = expr.scenario.outcomes(party, setting)
    if not 0 <= outcome < count:
        raise IndexError(f'Outcome {outcome} out of range for {party.name} setting {setting} ({count} outcomes)')
    scenario = expr.scenario.with_outcomes(party, setting, count + 1)
    terms: Dict[PKey, float] = {}
    for (a, b, i, j), coefficient in expr.terms.items():
        terms[(a, b, i, j)] = coefficient
        if party is Party.ALICE and a == setting and i == outcome:
            terms[(a, b, count, j)] = coefficient
        elif party is Party.BOB and b == setting and j == outcome:
            terms[(a, b, i, count)] = coefficient
    _LOGGER.debug(f'Split {party.name} setting {setting} outcome {outcome}: {expr.scenario} -> {scenario}')
    return BellExpression(scenario, terms, expr.name)


def lambda_sum(expr: BellExpression) -> float:
    return float(sum(expr.terms.values()))


def random_expression(scenario: Scenario, rng: np.random.Generator, low: int = -2, high: int = 2,
                      name: str = 'random') -> BellExpression:
    """Independent integer coefficients in [low, high] on every P."""
    coefficients = rng.integers(low, high + 1, size=scenario.p_dimension())
    return BellExpression(scenario, dict(zip(scenario.p_keys(), coefficients.tolist())), name)


def rescaled_to_unit(expr: BellExpression) -> BellExpression:
    """(expr − lower·Σ P_11) / (upper − lower): a formal expression with the same extremal strategies."""
    lower, upper = local_bounds(expr)
    if upper - lower <= COEFFICIENT_ATOL:
        raise DomainError(f'Expression {expr.name!r} is constant on local models and cannot be rescaled')
    rows, cols = expr.scenario.block_shape(1, 1)
    shift = BellExpression(expr.scenario, {(1, 1, i, j): -lower for i in range(rows) for j in range(cols)})
    return expr.added(shift).scaled(1.0 / (upper - lower))


def cglmp(d: int) -> BellExpression:
    """
    The CGLMP expression for ⟨dd|dd⟩ in probability form.

    Relations are taken mod d. Local values lie in [lower, 2]; for d = 2 this is
    CHSH written with probabilities.
    """
    if d < 2:
        raise DomainError(f'CGLMP needs d >= 2, got {d}')
    scenario = Scenario(d, d, d, d)
    terms: Dict[PKey, float] = {}

    def add(a, b, offset, weight):
        # P(outcome_b = outcome_a + offset)
        for i in range(d):
            j = (i + offset) % d
            key = (a, b, i, j)
            terms[key] = terms.get(key, 0.0) + weight

    for k in range(d // 2):
        weight = 1.0 - 2.0 * k / (d - 1)
        add(1, 1, -k, weight)  # A1 = B1 + k
        add(2, 1, k + 1, weight)  # B1 = A2 + k + 1
        add(2, 2, -k, weight)  # A2 = B2 + k
        add(1, 2, k, weight)  # B2 = A1 + k
        add(1, 1, k + 1, -weight)  # A1 = B1 - k - 1
        add(2, 1, -k, -weight)  # B1 = A2 - k
        add(2, 2, k + 1, -weight)  # A2 = B2 - k - 1
        add(1, 2, -k - 1, -weight)  # B2 = A1 - k - 1
    return BellExpression(scenario, terms, f'CGLMP_{d}')
