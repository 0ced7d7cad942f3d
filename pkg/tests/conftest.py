import pytest

from bloofi import BitVector, BloofiTree, BloomFilter, HashFamily

FIG1_LEAVES = {
    1: "10000000",
    2: "01000000",
    3: "00100000",
    4: "00010000",
    5: "00001000",
    6: "00000010",
}


def pytest_addoption(parser):
    parser.addoption("--full", action="store_true", help="also run heavy reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full"):
        return
    skip = pytest.mark.skip(reason="heavy; run with --full")
    for item in items:
        if "heavy" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def mod8():
    """Single hash h(x) = x mod 8 over 8-bit filters."""
    return HashFamily(1, 8, (1,))


def bits_filter(family, s):
    return BloomFilter(family, BitVector.from_string(s))


def fig1_tree(family, **kw):
    leaves = [(i, bits_filter(family, s)) for i, s in FIG1_LEAVES.items()]
    return BloofiTree.from_layout([leaves[:4], leaves[4:]], family, order=2, **kw)
