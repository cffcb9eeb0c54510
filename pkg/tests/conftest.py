import sys

import numpy as np
import pytest

from macpp.geometry import unit_square
from macpp.model import ModelGraph
from macpp.patterns import MultitypePattern
from macpp.simulate import get_scenario, simulate_pattern


@pytest.fixture
def parent_child():
    return ModelGraph(("A", "B"), {"A": "parent", "B": "offspring"}, {"B": "A"})


@pytest.fixture
def scenario_pattern():
    """One scenario-1 dataset (fixed seed) and its graph."""
    s = get_scenario(1)
    return simulate_pattern(s.graph(), s.params(), s.window(), 2024), s.graph()


def empty_pattern(graph):
    return MultitypePattern.from_groups(unit_square(), {}, taxa=graph.taxa)


class FixedRng:
    """Stand-in generator returning preset normal and uniform draws."""

    def __init__(self, normal=0.0, uniform=0.5):
        self.normal, self.uniform = normal, uniform

    def standard_normal(self, size=None):
        return self.normal if size is None else np.full(size, self.normal)

    def random(self, size=None):
        return self.uniform


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: int(k[2:])):
        terminalreporter.write_line(results[key])
