import math

import numpy as np
import pytest

from lkcand.instance import Instance, Metric

# Five cities A..E = 0..4 where an alpha k=1 search gets stuck; A-D-C-B-E is optimal, A-D-B-C-E the start tour.
FIVE_COORDS = [(0.0, 0.0), (0.0, 0.9), (0.1, 1.1), (0.7, 0.0), (-0.7, 0.0)]
A, B, C, D, E = range(5)
FIVE_START = [A, D, B, C, E]
FIVE_OPT = [A, D, C, B, E]


def hyp(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def cycle_len(coords, order):
    return sum(hyp(coords[order[k]], coords[order[(k + 1) % len(order)]]) for k in range(len(order)))


@pytest.fixture
def five_city():
    return Instance("five_city", np.array(FIVE_COORDS), Metric.EUC_2D_EXACT)


@pytest.fixture
def square():
    return Instance("square", np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))


def square_text(side=10):
    return (
        "NAME : sq\nTYPE : TSP\nDIMENSION : 4\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n"
        f"1 0 0\n2 {side} 0\n3 {side} {side}\n4 0 {side}\nEOF\n"
    )


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])
