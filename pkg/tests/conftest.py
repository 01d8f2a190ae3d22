import pytest

from radixrope import RopeParams


@pytest.fixture
def llama2():
    return RopeParams(10000.0, 128, 4096)


@pytest.fixture
def llama3():
    return RopeParams(500000.0, 128, 8192)
