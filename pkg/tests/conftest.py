import sys
import time
from functools import lru_cache

import pytest

from coxflat.flatsolve import solve_flat
from coxflat.groups import group_spec
from coxflat.potential import potential_from_frame
from coxflat.saito import eta_table, metric_table


class Run:
    def __init__(self, name):
        start = time.perf_counter()
        self.g = group_spec(name)
        self.metric = metric_table(self.g)
        self.eta = eta_table(self.metric)
        self.frame = solve_flat(self.g, self.eta)
        self.potential = potential_from_frame(self.g, self.frame, self.metric)
        self.seconds = time.perf_counter() - start


@lru_cache(maxsize=None)
def pipeline(name):
    return Run(name)


@pytest.fixture(scope="session")
def run():
    return pipeline


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(lines):
        terminalreporter.write_line(lines[k])
