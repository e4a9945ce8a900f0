import numpy as np
import pytest

import weierlab as w


@pytest.fixture(scope="session")
def p33():
    return w.make_params(3, 0.3)


@pytest.fixture(scope="session")
def graph33(p33):
    from weierlab.boxdim import sample_graph
    return sample_graph(p33, 42, 2.0 ** -14, 1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = []
    for mod in list(sys.modules.values()):
        lines += getattr(mod, "ACCEPTANCE_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines), key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
