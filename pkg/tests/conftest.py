import pytest

from algca.algebra import cyclic_group
from algca.ca import build_ca
from algca.factor import decompose
from algca.fixtures import load_fixture
from algca.tmc import build_shift, full_shift


@pytest.fixture(scope="session")
def full2():
    return full_shift([0, 1])


@pytest.fixture(scope="session")
def golden():
    return build_shift([0, 1], [(0, 0), (0, 1), (1, 0)])


@pytest.fixture(scope="session")
def z2():
    return cyclic_group(2)


@pytest.fixture(scope="session")
def xor_ca(full2, z2):
    return build_ca(full2, z2)


@pytest.fixture(scope="session")
def latin12():
    return load_fixture("paper-latin-12")


@pytest.fixture(scope="session")
def table8():
    return load_fixture("paper-table-8")


@pytest.fixture(scope="session")
def ca8(table8):
    return build_ca(full_shift(table8.symbols), table8)


@pytest.fixture(scope="session")
def cert8(ca8):
    return decompose(ca8)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
