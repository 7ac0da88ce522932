import numpy as np
import pytest
from hypothesis import settings

from dressing_chain import ChainParams, ChainState, solve

from oracles import SAMPLE_MU, SAMPLE_SIGMA

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sample():
    params, state = ChainParams(SAMPLE_MU), ChainState(SAMPLE_SIGMA)
    return params, state, solve(params, state)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def _record(number, ok, detail):
        lines[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
