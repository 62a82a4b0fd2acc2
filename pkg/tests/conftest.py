"""Shared fixtures: the cubic-unit preset action and its perturbations."""

import numpy as np
import pytest

from cartanlab.perturbation import TorusDiffeo, TrigPolynomial, make_conjugated_action
from cartanlab.presets import B_MATRIX, C_MATRIX, DEFAULT_MODES
from cartanlab.torus import build_cartan_action


@pytest.fixture(scope="session")
def base_action():
    return build_cartan_action([C_MATRIX, B_MATRIX])


@pytest.fixture(scope="session")
def displacement():
    return TrigPolynomial.from_modes(DEFAULT_MODES, 3)


@pytest.fixture(scope="session")
def diffeo(displacement):
    return TorusDiffeo.from_displacement(displacement, 0.05)


@pytest.fixture(scope="session")
def diffeo_zero(displacement):
    return TorusDiffeo.from_displacement(displacement, 0.0)


@pytest.fixture(scope="session")
def conj_action(diffeo, base_action):
    return make_conjugated_action(diffeo, base_action)


@pytest.fixture(scope="session")
def linear_action(diffeo_zero, base_action):
    return make_conjugated_action(diffeo_zero, base_action)


@pytest.fixture(scope="session")
def random_points():
    return np.random.default_rng(42).random((100, 3))
