"""Shared pytest fixtures: the bundled expressions and settings."""

import numpy as np
import pytest

from formats import fixture_path, load_expression, load_settings
from quantum import QuantumSettings


@pytest.fixture(scope='session')
def inequality_i():
    return load_expression(fixture_path('inequality_I'))


@pytest.fixture(scope='session')
def equality_e():
    return load_expression(fixture_path('equality_E'))


@pytest.fixture(scope='session')
def equality_ec():
    return load_expression(fixture_path('equality_E_c'))


@pytest.fixture(scope='session')
def formal_22():
    return load_expression(fixture_path('formal_22_22'))


@pytest.fixture(scope='session')
def inequality_settings():
    return load_settings(fixture_path('settings_inequality'))


@pytest.fixture(scope='session')
def equality_settings():
    return load_settings(fixture_path('settings_equality'))


@pytest.fixture
def product_settings():
    """|00> with zero phases: a local point."""
    state = np.zeros((3, 3))
    state[0, 0] = 1.0
    return QuantumSettings(3, state, name='product')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
