import textwrap

import pytest

from wayfinding import engine
from wayfinding.benchmark import benchmark_text
from wayfinding.params import ModelParams
from wayfinding.scenario import parse_scenario

ACCEPTANCE_LINES: list[str] = []


def grid(text: str, legend: str = ""):
    body = textwrap.dedent(text).strip("\n")
    return parse_scenario("[grid]\n" + body + "\n[legend]\n" + textwrap.dedent(legend))


@pytest.fixture(scope="session")
def benchmark_scenario():
    return parse_scenario(benchmark_text())


@pytest.fixture(scope="session")
def benchmark_world(benchmark_scenario):
    return engine.init(benchmark_scenario, ModelParams(), seed=0)


@pytest.fixture
def two_rooms():
    return grid(
        """
        #########
        #S......#
        #.......#
        ####a####
        #.......#
        #......1#
        #########
        """
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
