import pathlib

import pytest

import olympus
from olympus import load_platform, parse_module, reassign_channels, sanitize

DATA = pathlib.Path(olympus.__file__).parent / "data"


@pytest.fixture(scope="session")
def u280():
    return load_platform(DATA / "u280.toml")


@pytest.fixture(scope="session")
def matmul_text():
    return (DATA / "matmul.mlir").read_text()


@pytest.fixture
def matmul_module(matmul_text):
    """One matmul kernel on channels a, b, c; no PC nodes yet."""
    return parse_module(matmul_text)


@pytest.fixture
def matmul_sanitized(matmul_module):
    """Same graph with PC nodes (all id 0) and width-one layouts."""
    return sanitize(matmul_module)


@pytest.fixture
def matmul_distinct(matmul_sanitized, u280):
    """Sanitized matmul with channels spread over HBM ids 0, 1, 2."""
    return reassign_channels(matmul_sanitized, u280)


@pytest.fixture(scope="session")
def pipeline4_text():
    return (DATA / "pipeline4.mlir").read_text()


@pytest.fixture(scope="session")
def pipeline4_lifetimes():
    return DATA / "pipeline4.lifetimes"
