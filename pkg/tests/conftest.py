import pytest

from fracmv.bump import normalize
from fracmv.fraclap import Params
from fracmv.kernel import build_table

# Kernel tables are by far the most expensive fixture (seconds for n=1,
# tens of seconds for n=2), so they are built once per session and shared.

_TABLE_CACHE = {}
_PROFILE_CACHE = {}


@pytest.fixture(scope="session")
def get_table():
    def _get(n, a):
        key = (n, float(a))
        if key not in _TABLE_CACHE:
            _TABLE_CACHE[key] = build_table(Params.from_a(n, float(a)))
        return _TABLE_CACHE[key]

    return _get


@pytest.fixture(scope="session")
def get_profile():
    def _get(n, a):
        key = (n, float(a))
        if key not in _PROFILE_CACHE:
            _PROFILE_CACHE[key] = normalize(n, float(a))
        return _PROFILE_CACHE[key]

    return _get


@pytest.fixture(scope="session")
def table_n1_a0(get_table):
    return get_table(1, 0.0)
