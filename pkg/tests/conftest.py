from pathlib import Path

import pytest

from src.lattice import DiscriminantForm, discriminant_form, validate_lattice
from tests.lattices import A1_GRAM, A2_GRAM, EXAMPLE_GRAM, HYPERBOLIC_GRAM

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def example_df() -> DiscriminantForm:
    return discriminant_form(validate_lattice(EXAMPLE_GRAM))


@pytest.fixture(scope="session")
def a1_df() -> DiscriminantForm:
    return discriminant_form(validate_lattice(A1_GRAM))


@pytest.fixture(scope="session")
def a2_df() -> DiscriminantForm:
    return discriminant_form(validate_lattice(A2_GRAM))


@pytest.fixture(scope="session")
def trivial_df() -> DiscriminantForm:
    return discriminant_form(validate_lattice(HYPERBOLIC_GRAM))
