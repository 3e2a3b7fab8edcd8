from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def reactor_source() -> str:
    return (FIXTURES / "reactor.h").read_text()


@pytest.fixture(scope="session")
def reactor_registry(reactor_source):
    from archpp.accumulator import accumulate
    from archpp.normalizer import normalize

    return accumulate(normalize(reactor_source, filename="reactor.h"))


@pytest.fixture(scope="session")
def reactor_info(reactor_registry):
    return reactor_registry["Reactor"]
