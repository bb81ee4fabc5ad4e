import pytest

from crasp_forge import zoo


@pytest.fixture(scope="session")
def parity():
    return zoo.parity_program()


@pytest.fixture(scope="session")
def machines():
    return {name: zoo.load_fixture(name) for name in zoo.fixture_names()}
