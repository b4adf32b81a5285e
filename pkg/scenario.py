"""
Measurement scenarios ⟨l1l2|r1r2⟩ and the local-model plumbing around them.

Two parties, two settings each. Alice's settings a=1,2 have l1, l2 outcomes,
Bob's settings b=1,2 have r1, r2 outcomes. A local model is a distribution γ
over the outcome quadruples (i1, i2, j1, j2); the joint probabilities P are its
two-setting marginals.

P-vectors use one canonical layout everywhere: (a, b, i, j) with a-major, then
b, then i, then j.
"""

import functools
import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from errors import DomainError

_LOGGER = logging.getLogger(__name__)

PROBABILITY_ATOL = 1e-12

PKey = Tuple[int, int, int, int]
GammaIndex = Tuple[int, int, int, int]

# Setting pairs in canonical block order.
BLOCKS: Tuple[Tuple[int, int], ...] = ((1, 1), (1, 2), (2, 1), (2, 2))


class Party(IntEnum):
    """The two arms of the experiment."""
    ALICE = 1
    BOB = 2


@dataclass(frozen=True)
class Scenario:
    """Outcome counts of a two-setting bipartite scenario."""

    l1: int
    l2: int
    r1: int
    r2: int

    def __post_init__(self):
        for name in ('l1', 'l2', 'r1', 'r2'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise DomainError(f'Outcome count {name} must be an integer, got {value!r}')
            if value < 2:
                raise DomainError(f'Outcome count {name} must be at least 2, got {value}')
            object.__setattr__(self, name, int(value))

    @property
    def alice(self) -> Tuple[int, int]:
        return (self.l1, self.l2)

    @property
    def bob(self) -> Tuple[int, int]:
        return (self.r1, self.r2)

    def outcomes(self, party: Party, setting: int) -> int:
        """Number of outcomes of ``setting`` (1 or 2) on ``party``'s arm."""
        if setting not in (1, 2):
            raise IndexError(f'Setting must be 1 or 2, got {setting}')
        counts = self.alice if Party(party) is Party.ALICE else self.bob
        return counts[setting - 1]

    def with_outcomes(self, party: Party, setting: int, count: int) -> 'Scenario':
        counts = [self.l1, self.l2, self.r1, self.r2]
        slot = (0 if Party(party) is Party.ALICE else 2) + setting - 1
        counts[slot] = count
        return Scenario(*counts)

    @property
    def gamma_shape(self) -> Tuple[int, int, int, int]:
        return (self.l1, self.l2, self.r1, self.r2)

    def gamma_dimension(self) -> int:
        return self.l1 * self.l2 * self.r1 * self.r2

    def p_dimension(self) -> int:
        return (self.l1 + self.l2) * (self.r1 + self.r2)

    def block_shape(self, a: int, b: int) -> Tuple[int, int]:
        return (self.alice[a - 1], self.bob[b - 1])

    def block_offset(self, a: int, b: int) -> int:
        offset = 0
        for block in BLOCKS:
            if block == (a, b):
                return offset
            rows, cols = self.block_shape(*block)
            offset += rows * cols
        raise IndexError(f'No setting pair ({a}, {b})')

    def p_index(self, a: int, b: int, i: int, j: int) -> int:
        """Flat offset of P_{ab}^{ij} in the canonical layout."""
        if (a, b) not in BLOCKS:
            raise IndexError(f'Setting pair ({a}, {b}) out of range')
        rows, cols = self.block_shape(a, b)
        if not (0 <= i < rows and 0 <= j < cols):
            raise IndexError(f'Outcome pair ({i}, {j}) out of range for settings ({a}, {b}) in {self.label()}')
        return self.block_offset(a, b) + i * cols + j

    def p_keys(self) -> List[PKey]:
        keys = []
        for a, b in BLOCKS:
            rows, cols = self.block_shape(a, b)
            keys.extend((a, b, i, j) for i in range(rows) for j in range(cols))
        return keys

    def is_uniform(self) -> bool:
        return self.l1 == self.l2 == self.r1 == self.r2

    def label(self) -> str:
        return f'⟨{self.l1}{self.l2}|{self.r1}{self.r2}⟩'

    def __str__(self):
        return self.label()


def parse_scenario(text: str) -> Scenario:
    """Parse a ``"l1,l2,r1,r2"`` scenario string."""
    parts = [part.strip() for part in text.split(',')]
    if len(parts) != 4:
        raise DomainError(f'Scenario string must have four comma-separated counts, got {text!r}')
    try:
        counts = [int(part) for part in parts]
    except ValueError as exc:
        raise DomainError(f'Scenario string {text!r} is not a list of integers') from exc
    return Scenario(*counts)


@dataclass(frozen=True, eq=False)
class GammaTensor:
    """
    Values over outcome quadruples (i1, i2, j1, j2).

    Used either as a local-model distribution (nonnegative, summing to one) or
    as a plain coefficient tensor.
    """

    scenario: Scenario
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.scenario.gamma_shape:
            raise DomainError(f'Gamma tensor shape {values.shape} does not match {self.scenario.label()}')
        object.__setattr__(self, 'values', values)

    def is_distribution(self, atol: float = PROBABILITY_ATOL) -> bool:
        return bool(np.all(self.values >= -atol) and abs(self.values.sum() - 1.0) <= atol)

    @classmethod
    def uniform(cls, scenario: Scenario) -> 'GammaTensor':
        return cls(scenario, np.full(scenario.gamma_shape, 1.0 / scenario.gamma_dimension()))


def random_gamma(scenario: Scenario, rng: np.random.Generator) -> GammaTensor:
    """A random local-model distribution."""
    weights = rng.random(scenario.gamma_shape)
    return GammaTensor(scenario, weights / weights.sum())


@dataclass(frozen=True, eq=False)
class PVector:
    """Joint probabilities (or coefficients) P_{ab}^{ij} in canonical layout."""

    scenario: Scenario
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.scenario.p_dimension(),):
            raise DomainError(f'P-vector length {values.shape} does not match {self.scenario.label()}')
        object.__setattr__(self, 'values', values)

    def __getitem__(self, key: PKey) -> float:
        return float(self.values[self.scenario.p_index(*key)])

    def block(self, a: int, b: int) -> np.ndarray:
        rows, cols = self.scenario.block_shape(a, b)
        offset = self.scenario.block_offset(a, b)
        return self.values[offset:offset + rows * cols].reshape(rows, cols)

    def normalization_gap(self) -> float:
        """Largest deviation of a block sum from one."""
        return max(abs(self.block(a, b).sum() - 1.0) for a, b in BLOCKS)

    def signaling_gap(self) -> float:
        """Largest difference between marginals that must agree under no-signaling."""
        gaps = [0.0]
        for a in (1, 2):
            gaps.append(np.max(np.abs(self.block(a, 1).sum(axis=1) - self.block(a, 2).sum(axis=1))))
        for b in (1, 2):
            gaps.append(np.max(np.abs(self.block(1, b).sum(axis=0) - self.block(2, b).sum(axis=0))))
        return float(max(gaps))

    def is_probability(self, atol: float = PROBABILITY_ATOL) -> bool:
        in_range = np.all(self.values >= -atol) and np.all(self.values <= 1.0 + atol)
        return bool(in_range and self.normalization_gap() <= atol)


class DeterministicStrategy(NamedTuple):
    """One fixed outcome per (party, setting): a vertex of the local model."""
    i1: int
    i2: int
    j1: int
    j2: int

    def check(self, scenario: Scenario):
        for outcome, count, name in zip(self, scenario.gamma_shape, self._fields):
            if not 0 <= outcome < count:
                raise IndexError(f'Strategy outcome {name}={outcome} out of range for {scenario.label()}')


def enumerate_strategies(scenario: Scenario) -> List[DeterministicStrategy]:
    """All l1*l2*r1*r2 deterministic strategies in lexicographic (i1, i2, j1, j2) order."""
    ranges = [range(count) for count in scenario.gamma_shape]
    return [DeterministicStrategy(*outcomes) for outcomes in itertools.product(*ranges)]


def strategy_to_gamma(strategy: DeterministicStrategy, scenario: Scenario) -> GammaTensor:
    strategy = DeterministicStrategy(*strategy)
    strategy.check(scenario)
    values = np.zeros(scenario.gamma_shape)
    values[tuple(strategy)] = 1.0
    return GammaTensor(scenario, values)


def gamma_to_p(gamma: GammaTensor) -> PVector:
    """
    Joint probabilities from double joint probabilities.

    P_{ab}^{ij} sums γ over the outcomes of the two settings that were not
    measured, i.e. over i_{a'} and j_{b'}.
    """
    values = gamma.values
    blocks = [
        values.sum(axis=(1, 3)),  # (i1, j1)
        values.sum(axis=(1, 2)),  # (i1, j2)
        values.sum(axis=(0, 3)),  # (i2, j1)
        values.sum(axis=(0, 2)),  # (i2, j2)
    ]
    return PVector(gamma.scenario, np.concatenate([block.ravel() for block in blocks]))


def strategy_to_p(strategy: DeterministicStrategy, scenario: Scenario) -> PVector:
    strategy = DeterministicStrategy(*strategy)
    strategy.check(scenario)
    alice = (strategy.i1, strategy.i2)
    bob = (strategy.j1, strategy.j2)
    values = np.zeros(scenario.p_dimension())
    for a, b in BLOCKS:
        values[scenario.p_index(a, b, alice[a - 1], bob[b - 1])] = 1.0
    return PVector(scenario, values)


@functools.lru_cache(maxsize=32)
def marginal_matrix(scenario: Scenario) -> np.ndarray:
    """
    The linear map γ -> P as a read-only 0/1 matrix.

    Columns follow the C-order ravel of the γ tensor, which is also the order
    of enumerate_strategies, so column k is strategy_to_p of strategy k.
    """
    columns = [strategy_to_p(strategy, scenario).values for strategy in enumerate_strategies(scenario)]
    matrix = np.column_stack(columns)
    matrix.setflags(write=False)
    return matrix


def p_in_gamma_table(scenario: Scenario) -> Dict[PKey, List[GammaIndex]]:
    """Each P entry written out as the list of γ indices it sums."""
    matrix = marginal_matrix(scenario)
    table = {}
    for row, key in enumerate(scenario.p_keys()):
        flat = np.flatnonzero(matrix[row])
        table[key] = [tuple(int(k) for k in np.unravel_index(index, scenario.gamma_shape)) for index in flat]
    return table


def format_p_key(key: PKey) -> str:
    a, b, i, j = key
    return f'P_{a}{b}^{i}{j}'


def format_gamma_index(index: GammaIndex) -> str:
    return 'γ_' + ''.join(str(k) for k in index)


class RowDiscrepancy(NamedTuple):
    duplicates: List[GammaIndex]
    missing: List[GammaIndex]
    extra: List[GammaIndex]

    @property
    def clean(self) -> bool:
        return not (self.duplicates or self.missing or self.extra)


def compare_printed_row(generated: Sequence[GammaIndex], printed: Sequence[GammaIndex]) -> RowDiscrepancy:
    """Diff a hand-transcribed P-in-γ row against the generated one."""
    counts = Counter(tuple(index) for index in printed)
    expected = {tuple(index) for index in generated}
    discrepancy = RowDiscrepancy(
        duplicates=sorted(index for index, count in counts.items() if count > 1),
        missing=sorted(expected - set(counts)),
        extra=sorted(set(counts) - expected),
    )
    if not discrepancy.clean:
        _LOGGER.warning(f'Printed row disagrees with the generated marginal expansion: {discrepancy}')
    return discrepancy
