"""
Versioned JSON documents: expressions, settings, optimizer configs and reports.

Every document carries ``"format_version": "1"``. Expressions index settings
1-based and outcomes 0-based; state matrices are stored as [re, im] pairs.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from bell import BellExpression
from errors import FormatError
from quantum import NoiseModel, QuantumSettings
from scenario import Scenario

_LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = '1'
FIXTURES_DIR = Path(__file__).resolve().parent / 'fixtures'

PathLike = Union[str, Path]

_MALFORMED = (KeyError, TypeError, ValueError, IndexError)


def fixture_path(name: str) -> Path:
    return FIXTURES_DIR / f'{name}.json'


def dumps_document(document: dict) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False) + '\n'


def load_document(path: PathLike) -> dict:
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f'{path}: not valid JSON ({exc})') from exc
    if not isinstance(document, dict):
        raise FormatError(f'{path}: top level must be an object')
    version = document.get('format_version')
    if version != FORMAT_VERSION:
        raise FormatError(f'{path}: unsupported format_version {version!r} (expected {FORMAT_VERSION!r})')
    return document


def save_document(document: dict, path: PathLike):
    with open(Path(path), 'w', encoding='utf-8') as f:
        f.write(dumps_document(document))
    _LOGGER.info(f'Wrote {document.get("kind", "document")} to {path}')


def expression_to_dict(expr: BellExpression, provenance: Optional[str] = None) -> dict:
    document = {
        'format_version': FORMAT_VERSION,
        'kind': 'expression',
        'name': expr.name,
        'scenario': {'alice': list(expr.scenario.alice), 'bob': list(expr.scenario.bob)},
        'terms': [{'a': a, 'b': b, 'i': i, 'j': j, 'c': c} for (a, b, i, j), c in expr.terms.items()],
    }
    if provenance:
        document['provenance'] = provenance
    return document


def expression_from_dict(document: dict) -> BellExpression:
    try:
        counts = document['scenario']
        scenario = Scenario(*counts['alice'], *counts['bob'])
        rows = [(t['a'], t['b'], t['i'], t['j'], t['c']) for t in document['terms']]
        return BellExpression.from_terms(scenario, rows, name=document.get('name', ''))
    except _MALFORMED as exc:
        raise FormatError(f'Malformed expression document: {exc}') from exc


def load_expression(path: PathLike) -> BellExpression:
    expr = expression_from_dict(load_document(path))
    if not expr.name:
        expr = expr.renamed(Path(path).stem)
    return expr


def save_expression(expr: BellExpression, path: PathLike, provenance: Optional[str] = None):
    save_document(expression_to_dict(expr, provenance), path)


def settings_to_dict(settings: QuantumSettings, noise: Optional[NoiseModel] = None,
                     provenance: Optional[str] = None) -> dict:
    document = {
        'format_version': FORMAT_VERSION,
        'kind': 'settings',
        'name': settings.name,
        'dimension': settings.dimension,
        'C': [[[float(z.real), float(z.imag)] for z in row] for row in settings.C],
        'alpha': list(settings.alpha),
        'beta': list(settings.beta),
    }
    if noise is not None:
        document['noise_p'] = noise.p
    if provenance:
        document['provenance'] = provenance
    return document


def settings_from_dict(document: dict) -> QuantumSettings:
    try:
        pairs = np.asarray(document['C'], dtype=float)
        if pairs.ndim != 3 or pairs.shape[-1] != 2:
            raise ValueError('C must be a D×D array of [re, im] pairs')
        return QuantumSettings(
            dimension=int(document['dimension']),
            C=pairs[..., 0] + 1j * pairs[..., 1],
            alpha=tuple(document['alpha']),
            beta=tuple(document['beta']),
            name=document.get('name', ''),
        )
    except _MALFORMED as exc:
        raise FormatError(f'Malformed settings document: {exc}') from exc


def noise_from_dict(document: dict) -> Optional[NoiseModel]:
    if document.get('noise_p') is None:
        return None
    try:
        return NoiseModel(float(document['noise_p']))
    except _MALFORMED as exc:
        raise FormatError(f'Malformed noise_p: {exc}') from exc


def load_settings(path: PathLike) -> QuantumSettings:
    return settings_from_dict(load_document(path))


def save_settings(settings: QuantumSettings, path: PathLike, noise: Optional[NoiseModel] = None,
                  provenance: Optional[str] = None):
    save_document(settings_to_dict(settings, noise, provenance), path)
