"""
How many joint probabilities are independent?

Two closed-form counts compete: one subtracts (l1+l2+r1+r2 − 1) constraints
from the number of P's, the other is the Collins–Gisin parameter count. The
numerical routes settle the question for a given scenario: the affine dimension
of the deterministic strategy points, and the rank of the normalization plus
no-signaling constraint system. Neither formula is assumed to be right.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from errors import ResourceError
from formats import FORMAT_VERSION
from scenario import BLOCKS, Scenario, enumerate_strategies, strategy_to_p

_LOGGER = logging.getLogger(__name__)

RANK_RTOL = 1e-9
MAX_STRATEGIES = 10 ** 4


def independent_count_paper(scenario: Scenario) -> int:
    alice = scenario.l1 + scenario.l2
    bob = scenario.r1 + scenario.r2
    return alice * bob - (alice + bob - 1)


def independent_count_literature(scenario: Scenario) -> int:
    alice = (scenario.l1 - 1) + (scenario.l2 - 1)
    bob = (scenario.r1 - 1) + (scenario.r2 - 1)
    return alice * bob + alice + bob


def numeric_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank with a singular-value cutoff relative to the largest singular value."""
    if matrix.size == 0:
        return 0
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    if singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > rtol * singular_values[0]))


def affine_dimension(scenario: Scenario) -> int:
    """Dimension of the affine hull of all deterministic P-vectors."""
    if scenario.gamma_dimension() > MAX_STRATEGIES:
        raise ResourceError(
            f'{scenario.label()} has {scenario.gamma_dimension()} strategies; the limit is {MAX_STRATEGIES}'
        )
    points = np.array([strategy_to_p(strategy, scenario).values for strategy in enumerate_strategies(scenario)])
    return numeric_rank(points[1:] - points[0])


def constraint_matrix(scenario: Scenario) -> np.ndarray:
    """
    Rows of the homogeneous part of the constraint system.

    Four normalization rows (one per setting pair), then one no-signaling row
    per (party, setting, outcome) equating that marginal across the other
    party's two settings.
    """
    rows = []
    size = scenario.p_dimension()
    for a, b in BLOCKS:
        row = np.zeros(size)
        n_i, n_j = scenario.block_shape(a, b)
        for i in range(n_i):
            for j in range(n_j):
                row[scenario.p_index(a, b, i, j)] = 1.0
        rows.append(row)
    for a in (1, 2):
        for i in range(scenario.alice[a - 1]):
            row = np.zeros(size)
            for j in range(scenario.r1):
                row[scenario.p_index(a, 1, i, j)] += 1.0
            for j in range(scenario.r2):
                row[scenario.p_index(a, 2, i, j)] -= 1.0
            rows.append(row)
    for b in (1, 2):
        for j in range(scenario.bob[b - 1]):
            row = np.zeros(size)
            for i in range(scenario.l1):
                row[scenario.p_index(1, b, i, j)] += 1.0
            for i in range(scenario.l2):
                row[scenario.p_index(2, b, i, j)] -= 1.0
            rows.append(row)
    return np.array(rows)


def constraint_rank(scenario: Scenario) -> int:
    return numeric_rank(constraint_matrix(scenario))


@dataclass(frozen=True)
class DimensionReport:
    scenario: Scenario
    paper_count: int
    literature_count: int
    numeric_affine_dimension: int
    constraint_rank: int
    p_dimension: int

    @property
    def supports(self) -> str:
        """Which closed-form count the numeric dimension agrees with."""
        if self.numeric_affine_dimension == self.paper_count:
            return 'paper'
        if self.numeric_affine_dimension == self.literature_count:
            return 'literature'
        return 'neither'

    @property
    def consistent(self) -> bool:
        return self.numeric_affine_dimension + self.constraint_rank == self.p_dimension

    def to_dict(self) -> dict:
        document = {'format_version': FORMAT_VERSION, 'kind': 'dimension'}
        document.update(asdict(self))
        document['scenario'] = {'alice': list(self.scenario.alice), 'bob': list(self.scenario.bob)}
        document['supports'] = self.supports
        return document

    @classmethod
    def from_dict(cls, document: dict) -> 'DimensionReport':
        counts = document['scenario']
        return cls(
            scenario=Scenario(*counts['alice'], *counts['bob']),
            paper_count=int(document['paper_count']),
            literature_count=int(document['literature_count']),
            numeric_affine_dimension=int(document['numeric_affine_dimension']),
            constraint_rank=int(document['constraint_rank']),
            p_dimension=int(document['p_dimension']),
        )


def dimension_report(scenario: Scenario) -> DimensionReport:
    report = DimensionReport(
        scenario=scenario,
        paper_count=independent_count_paper(scenario),
        literature_count=independent_count_literature(scenario),
        numeric_affine_dimension=affine_dimension(scenario),
        constraint_rank=constraint_rank(scenario),
        p_dimension=scenario.p_dimension(),
    )
    if not report.consistent:
        _LOGGER.warning(f'{scenario.label()}: affine dimension and constraint rank do not add up to the P count')
    _LOGGER.info(
        f'{scenario.label()}: numeric dimension {report.numeric_affine_dimension}, '
        f'constraint-subtraction formula {report.paper_count}, literature formula {report.literature_count}'
    )
    return report
