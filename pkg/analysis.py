"""
Violation and noise-robustness metrics.

Noise enters affinely, noisy(p) = p·B_white + (1 − p)·B_QM, so every tolerance
here is a closed-form crossing point. Equalities are judged against the local
value pinned by their complement, 1 − |B_QM(complement)|.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Tuple

from bell import BellExpression, LocalBounds, local_bounds, verify_complement
from errors import DomainError, NoViolationError
from formats import FORMAT_VERSION
from quantum import QuantumSettings, quantum_value, white_noise_value

_LOGGER = logging.getLogger(__name__)

# Violation amounts at or below this are rounding on a local point.
VIOLATION_ATOL = 1e-12


class RangeMode(str, Enum):
    INEQUALITY = 'inequality'
    EQUALITY = 'equality'


class ReferenceConstant(NamedTuple):
    """A published value quoted for comparison; never recomputed."""
    name: str
    violation: Optional[float]
    tolerance: Optional[float]
    note: str


REFERENCE_CONSTANTS: Tuple[ReferenceConstant, ...] = (
    ReferenceConstant('maximally_entangled_33_33', 0.87293, 0.30385, 'CGLMP, maximally entangled qutrits'),
    ReferenceConstant('maximally_entangled_55_55', 0.91054, 0.31284, 'CGLMP, maximally entangled five-level systems'),
    ReferenceConstant('infinite_dimension', None, 0.32656, 'infinite dimension; violation factor 1.16164'),
    ReferenceConstant('equality_22_22', None, 0.58579, 'binary equalities; violation factor 1.52241'),
)


def violated_bound(expr: BellExpression, value: float, bounds: Optional[LocalBounds] = None) -> Optional[float]:
    bounds = bounds or local_bounds(expr)
    if value > bounds.upper:
        return bounds.upper
    if value < bounds.lower:
        return bounds.lower
    return None


def _require_complement(e: BellExpression, ec: BellExpression):
    if not verify_complement(e, ec):
        raise DomainError(f'{ec.name!r} is not a complement of {e.name!r}')


def pinned_local_value(ec: BellExpression, s: QuantumSettings) -> float:
    """The local value of an equality fixed by its complement: 1 − |B_QM(ec)|."""
    return 1.0 - abs(quantum_value(ec, s))


def bound_gap(value: float, bounds: LocalBounds) -> float:
    """Signed distance outside the local bounds; negative inside them."""
    return max(value - bounds.upper, bounds.lower - value)


def pinned_gap(value: float, complement_value: float) -> float:
    """
    |value − (1 − |complement_value|)|, or 0 when the complement is not negative.

    A nonnegative complement value means the pair is locally consistent: the
    pinned value is then exactly 1 − complement_value = value.
    """
    if complement_value >= 0.0:
        return 0.0
    return abs(value - (1.0 - abs(complement_value)))


def pinned_crossing(value: float, complement_value: float, white: float, name: str = '') -> float:
    """Noise fraction taking ``value`` down to the noiseless pinned benchmark."""
    if complement_value >= 0.0:
        raise NoViolationError(f'Complement {name!r} has quantum value {complement_value:.6g} >= 0')
    return _crossing(value, white, 1.0 - abs(complement_value))


def violation_amount(expr: BellExpression, s: QuantumSettings, complement: Optional[BellExpression] = None) -> float:
    """
    Distance of the quantum value from the local prediction.

    Without a complement this is how far the value lies outside the local
    bounds (0 inside them). With one, the local value is pinned by the
    complement; a nonnegative complement value is no violation.
    """
    value = quantum_value(expr, s)
    if complement is not None:
        _require_complement(expr, complement)
        return pinned_gap(value, quantum_value(complement, s))
    return max(0.0, bound_gap(value, local_bounds(expr)))


def violation_range(expr: BellExpression, mode: RangeMode = RangeMode.INEQUALITY,
                    complement: Optional[BellExpression] = None, s: Optional[QuantumSettings] = None) -> float:
    mode = RangeMode(mode)
    if mode is RangeMode.INEQUALITY:
        return local_bounds(expr).range
    if complement is None or s is None:
        raise DomainError('Equality range needs both a complement and settings')
    _require_complement(expr, complement)
    return pinned_local_value(complement, s)


def violation_factor(delta: float, range_: float) -> float:
    """η = (δ + R) / R."""
    if range_ <= 0:
        raise DomainError(f'Violation factor needs a positive range, got {range_}')
    return (delta + range_) / range_


def _crossing(value: float, white: float, target: float) -> float:
    """p in [0, 1] where p·white + (1 − p)·value = target, or 1 if there is none."""
    denominator = value - white
    if denominator == 0.0:
        raise DomainError('White-noise value equals the quantum value; the noisy value never moves')
    p = (value - target) / denominator
    if not 0.0 <= p <= 1.0:
        _LOGGER.debug(f'Crossing at p={p:.6g} lies outside [0, 1]; reporting 1')
        return 1.0
    return p


def bound_crossing(value: float, white: float, bounds: LocalBounds, name: str = '') -> float:
    """Noise fraction taking ``value`` back to the local bound it violates."""
    if value > bounds.upper:
        return _crossing(value, white, bounds.upper)
    if value < bounds.lower:
        return _crossing(value, white, bounds.lower)
    raise NoViolationError(f'{name or "Expression"} is not violated: quantum value {value:.6g}')


def inequality_tolerance(expr: BellExpression, s: QuantumSettings) -> float:
    """White-noise fraction at which the noisy value reaches the violated local bound."""
    return bound_crossing(quantum_value(expr, s), white_noise_value(expr), local_bounds(expr), expr.name)


def equality_tolerance_paper(e: BellExpression, ec: BellExpression, s: QuantumSettings) -> float:
    """
    Noise fraction at which noisy(e) falls to the noiseless pinned value.

    The benchmark 1 − |B_QM(ec)| stays at its p = 0 value while noise acts on e.
    Because noisy(e) + noisy(ec) = 1, the same p makes noisy(ec) = +|B_QM(ec)|.
    """
    _require_complement(e, ec)
    return pinned_crossing(quantum_value(e, s), quantum_value(ec, s), white_noise_value(e), ec.name)


def equality_tolerance_strict(ec: BellExpression, s: QuantumSettings) -> float:
    """Noise fraction at which the noisy complement stops being negative."""
    value = quantum_value(ec, s)
    if value > 0.0:
        raise NoViolationError(f'Complement {ec.name!r} has positive quantum value {value:.6g}; no violation')
    if value == 0.0:
        return 0.0
    white = white_noise_value(ec)
    if white <= 0.0:
        return 1.0
    return _crossing(value, white, 0.0)


@dataclass(frozen=True)
class Tolerances:
    inequality: Optional[float] = None
    equality_paper: Optional[float] = None
    equality_strict: Optional[float] = None


@dataclass(frozen=True)
class AnalysisReport:
    name: str
    quantum_value: float
    bounds: LocalBounds
    violated_bound: Optional[float]
    violation_amount: float
    violation_range: float
    violation_factor: Optional[float]
    tolerances: Tolerances = field(default_factory=Tolerances)
    kind: str = RangeMode.INEQUALITY.value
    complement_name: Optional[str] = None
    complement_value: Optional[float] = None
    settings_name: str = ''

    @property
    def violated(self) -> bool:
        return self.violation_amount > VIOLATION_ATOL

    def to_dict(self) -> dict:
        return {
            'format_version': FORMAT_VERSION,
            'kind': 'analysis',
            'mode': self.kind,
            'name': self.name,
            'settings_name': self.settings_name,
            'quantum_value': self.quantum_value,
            'bounds': [self.bounds.lower, self.bounds.upper],
            'violated_bound': self.violated_bound,
            'violation_amount': self.violation_amount,
            'violation_range': self.violation_range,
            'violation_factor': self.violation_factor,
            'tolerances': asdict(self.tolerances),
            'complement_name': self.complement_name,
            'complement_value': self.complement_value,
        }

    @classmethod
    def from_dict(cls, document: dict) -> 'AnalysisReport':
        lower, upper = document['bounds']
        return cls(
            name=document['name'],
            quantum_value=document['quantum_value'],
            bounds=LocalBounds(lower, upper),
            violated_bound=document['violated_bound'],
            violation_amount=document['violation_amount'],
            violation_range=document['violation_range'],
            violation_factor=document['violation_factor'],
            tolerances=Tolerances(**document['tolerances']),
            kind=document['mode'],
            complement_name=document.get('complement_name'),
            complement_value=document.get('complement_value'),
            settings_name=document.get('settings_name', ''),
        )


def _optional(compute, *args) -> Optional[float]:
    try:
        return compute(*args)
    except DomainError as exc:
        _LOGGER.info(f'{compute.__name__} undefined here: {exc}')
        return None


def analyze_inequality(expr: BellExpression, s: QuantumSettings) -> AnalysisReport:
    value = quantum_value(expr, s)
    bounds = local_bounds(expr)
    delta = violation_amount(expr, s)
    range_ = bounds.range
    return AnalysisReport(
        name=expr.name,
        quantum_value=value,
        bounds=bounds,
        violated_bound=violated_bound(expr, value, bounds),
        violation_amount=delta,
        violation_range=range_,
        violation_factor=_optional(violation_factor, delta, range_),
        tolerances=Tolerances(inequality=_optional(inequality_tolerance, expr, s)),
        settings_name=s.name,
    )


def analyze_equality(e: BellExpression, ec: BellExpression, s: QuantumSettings) -> AnalysisReport:
    _require_complement(e, ec)
    value = quantum_value(e, s)
    complement_value = quantum_value(ec, s)
    delta = violation_amount(e, s, ec)
    range_ = violation_range(e, RangeMode.EQUALITY, ec, s)
    report = AnalysisReport(
        name=e.name,
        quantum_value=value,
        bounds=local_bounds(e),
        violated_bound=range_,
        violation_amount=delta,
        violation_range=range_,
        violation_factor=_optional(violation_factor, delta, range_),
        tolerances=Tolerances(
            inequality=_optional(inequality_tolerance, e, s),
            equality_paper=_optional(equality_tolerance_paper, e, ec, s),
            equality_strict=_optional(equality_tolerance_strict, ec, s),
        ),
        kind=RangeMode.EQUALITY.value,
        complement_name=ec.name,
        complement_value=complement_value,
        settings_name=s.name,
    )
    _LOGGER.info(f'{e.name}/{ec.name}: delta={delta:.6g} R={range_:.6g}')
    return report
