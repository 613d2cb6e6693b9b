import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)
