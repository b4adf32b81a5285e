"""
Quantum predictions for the phase-shift + discrete Fourier measurement family.

A pure state Σ C_jk |j>|k> in dimension D is measured by Alice after a phase
shift α_a and a Fourier transform, by Bob after β_b and an inverse Fourier
transform. The joint probability of outcomes (m, n) is

    P_ab^mn = |Σ_jk C_jk exp(2πi/D [(α_a + m) j + (β_b − n) k])|² / D².

White noise is mixed in at the probability level: the identity state gives
every outcome pair probability 1/D².
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from bell import BellExpression, lambda_sum
from errors import DomainError
from scenario import BLOCKS, PVector, Scenario

_LOGGER = logging.getLogger(__name__)

NORMALIZATION_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuantumSettings:
    """State coefficients C (D×D complex) and per-setting phases α, β."""

    dimension: int
    C: np.ndarray
    alpha: Tuple[float, float] = (0.0, 0.0)
    beta: Tuple[float, float] = (0.0, 0.0)
    name: str = ''

    def __post_init__(self):
        if self.dimension < 2:
            raise DomainError(f'Dimension must be at least 2, got {self.dimension}')
        C = np.asarray(self.C, dtype=complex)
        if C.shape != (self.dimension, self.dimension):
            raise DomainError(f'State matrix has shape {C.shape}, expected {(self.dimension, self.dimension)}')
        if len(self.alpha) != 2 or len(self.beta) != 2:
            raise DomainError('alpha and beta must each hold one phase per setting')
        object.__setattr__(self, 'C', C)
        object.__setattr__(self, 'alpha', tuple(float(x) for x in self.alpha))
        object.__setattr__(self, 'beta', tuple(float(x) for x in self.beta))

    @property
    def scenario(self) -> Scenario:
        d = self.dimension
        return Scenario(d, d, d, d)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.C) ** 2))

    def with_phases(self, alpha: Tuple[float, float], beta: Tuple[float, float]) -> 'QuantumSettings':
        return replace(self, alpha=alpha, beta=beta)

    def with_state(self, C: np.ndarray) -> 'QuantumSettings':
        return replace(self, C=C)


@dataclass(frozen=True)
class NoiseModel:
    """White-noise fraction p of a Werner-type mixture."""

    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f'Noise fraction must lie in [0, 1], got {self.p}')


def maximally_entangled(d: int, alpha=(0.0, 0.0), beta=(0.0, 0.0)) -> QuantumSettings:
    return QuantumSettings(d, np.eye(d) / np.sqrt(d), tuple(alpha), tuple(beta), name=f'maximally_entangled_{d}')


def random_settings(d: int, rng: np.random.Generator, phase_scale: float = 1.0) -> QuantumSettings:
    """Normalized complex Gaussian state with phases uniform in [0, phase_scale)."""
    C = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    C /= np.linalg.norm(C)
    alpha = tuple(rng.uniform(0.0, phase_scale, size=2))
    beta = tuple(rng.uniform(0.0, phase_scale, size=2))
    return QuantumSettings(d, C, alpha, beta, name='random')


def validate_settings(settings: QuantumSettings) -> bool:
    """True when Σ|C_jk|² = 1 within 1e-10."""
    return abs(settings.norm_squared() - 1.0) <= NORMALIZATION_ATOL


def _require_valid(settings: QuantumSettings):
    if not validate_settings(settings):
        raise DomainError(f'State is not normalized: Σ|C|² = {settings.norm_squared():.12g}')


def _transforms(settings: QuantumSettings, a: int, b: int) -> Tuple[np.ndarray, np.ndarray]:
    """Alice's and Bob's (outcome × basis index) phase-Fourier matrices."""
    d = settings.dimension
    outcomes = np.arange(d)
    alice = np.exp(2j * np.pi / d * np.outer(settings.alpha[a - 1] + outcomes, outcomes))
    bob = np.exp(2j * np.pi / d * np.outer(settings.beta[b - 1] - outcomes, outcomes))
    return alice, bob


def _block(settings: QuantumSettings, a: int, b: int) -> np.ndarray:
    alice, bob = _transforms(settings, a, b)
    amplitudes = alice @ settings.C @ bob.T
    return np.abs(amplitudes) ** 2 / settings.dimension ** 2


def joint_probability(settings: QuantumSettings, a: int, b: int, m: int, n: int) -> float:
    _require_valid(settings)
    d = settings.dimension
    if (a, b) not in BLOCKS:
        raise IndexError(f'Setting pair ({a}, {b}) out of range')
    if not (0 <= m < d and 0 <= n < d):
        raise IndexError(f'Outcomes ({m}, {n}) out of range for dimension {d}')
    return float(_block(settings, a, b)[m, n])


def probability_table(settings: QuantumSettings, scenario: Optional[Scenario] = None) -> PVector:
    """All 4·D² joint probabilities in canonical layout."""
    _require_valid(settings)
    if scenario is not None and scenario != settings.scenario:
        raise DomainError(f'Settings of dimension {settings.dimension} cannot populate {scenario.label()}')
    blocks = [_block(settings, a, b).ravel() for a, b in BLOCKS]
    return PVector(settings.scenario, np.concatenate(blocks))


def _check_compatible(expr: BellExpression, settings: QuantumSettings):
    if expr.scenario != settings.scenario:
        raise DomainError(
            f'Expression {expr.name!r} is for {expr.scenario.label()} but the state has dimension {settings.dimension}'
        )


def quantum_value(expr: BellExpression, settings: QuantumSettings) -> float:
    _check_compatible(expr, settings)
    return expr.evaluate(probability_table(settings))


def bell_operator(expr: BellExpression, settings: QuantumSettings) -> np.ndarray:
    """
    Hermitian D²×D² operator B of the expression at the settings' phases.

    For every normalized state, vec(C)ᴴ B vec(C) is the quantum value, with
    vec(C) the row-major flattening of C. The state held by ``settings`` is
    not used.
    """
    _check_compatible(expr, settings)
    d = settings.dimension
    size = d * d
    weights = expr.coefficient_vector().reshape(len(BLOCKS), size)
    operator = np.zeros((size, size), dtype=complex)
    for block_weights, (a, b) in zip(weights, BLOCKS):
        if not np.any(block_weights):
            continue
        alice, bob = _transforms(settings, a, b)
        measurement = np.kron(alice, bob) / d
        operator += measurement.conj().T @ (block_weights[:, None] * measurement)
    return operator


def extremal_states(expr: BellExpression, settings: QuantumSettings) -> Tuple[QuantumSettings, QuantumSettings]:
    """The settings' phases with the states of lowest and highest quantum value."""
    d = settings.dimension
    _eigenvalues, eigenvectors = np.linalg.eigh(bell_operator(expr, settings))
    lowest = settings.with_state(eigenvectors[:, 0].reshape(d, d))
    highest = settings.with_state(eigenvectors[:, -1].reshape(d, d))
    return lowest, highest


def white_noise_value(expr: BellExpression) -> float:
    """Value on the uniform table, Σλ / (l·r) for a uniform scenario."""
    d = expr.scenario.l1
    if not expr.scenario.is_uniform():
        raise DomainError(f'White-noise value needs a uniform scenario, got {expr.scenario.label()}')
    return lambda_sum(expr) / d ** 2


def noisy_value(expr: BellExpression, settings: QuantumSettings, noise: NoiseModel) -> float:
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(float(noise))
    value = quantum_value(expr, settings)
    return noise.p * white_noise_value(expr) + (1.0 - noise.p) * value
