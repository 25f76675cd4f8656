import numpy as np
import pytest

from asynppg.functions import QuadraticSmooth, ZeroProx
from asynppg.problem import AgentObjective, assemble_problem
from asynppg.problems import gen_lasso, market_instance


@pytest.fixture(scope="session")
def market():
    return market_instance()


@pytest.fixture(scope="session")
def lasso0():
    return gen_lasso(0)


def quad_agent(q, c=0.0):
    return AgentObjective(QuadraticSmooth([[q]], [c]), ZeroProx())


@pytest.fixture
def consensus_pair():
    """Two scalar agents 0.5(x-a)^2, 0.5(x-b)^2 coupled by x1 = x2."""
    def make(a, b):
        agents = [quad_agent(1.0, -a), quad_agent(1.0, -b)]
        return assemble_problem(agents, np.array([[1.0, -1.0]]))
    return make


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
