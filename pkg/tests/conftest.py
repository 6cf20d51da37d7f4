"""Fixtures compartilhadas pelos testes."""

import pytest

from ddrg_lab.invariance import AdmissibleSet

from . import helpers


@pytest.fixture
def lag_plant() -> helpers.LagPlant:
    return helpers.LagPlant(a=0.5)


@pytest.fixture
def scalar_dictionary():
    return helpers.scalar_dictionary()


@pytest.fixture
def planar_dictionary():
    return helpers.planar_dictionary()


@pytest.fixture
def lag_admissible(scalar_dictionary) -> AdmissibleSet:
    return AdmissibleSet(tuple(helpers.unit_set(scalar_dictionary, r) for r in (-0.5, 0.0, 0.5)))
