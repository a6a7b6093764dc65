from __future__ import annotations

import pytest

from frameql.packs import builtin_names, load_builtin


@pytest.fixture(scope="session")
def packs():
    """All built-in language packs, loaded once."""
    return {name: load_builtin(name) for name in builtin_names()}


@pytest.fixture(scope="session")
def sqlpp_pack(packs):
    return packs["sqlpp"]


@pytest.fixture(scope="session")
def sql_pack(packs):
    return packs["sql"]


@pytest.fixture(scope="session")
def cypher_pack(packs):
    return packs["cypher"]


@pytest.fixture(scope="session")
def mongo_pack(packs):
    return packs["mongo"]
