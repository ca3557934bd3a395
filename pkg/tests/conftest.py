import pytest

from crashquery.geo import generate_fixture
from crashquery.geo.kernels import warmup
from crashquery.registry import default_registry


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    warmup()


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def fixture_seed1(registry):
    dataset, places = generate_fixture(1, registry=registry)
    return dataset, places


@pytest.fixture(scope="session")
def dataset(fixture_seed1):
    return fixture_seed1[0]


@pytest.fixture(scope="session")
def places(fixture_seed1):
    return fixture_seed1[1]
