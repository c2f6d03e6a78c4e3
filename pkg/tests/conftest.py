import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "opxlab",
    max_examples=int(os.environ.get("OPXLAB_EXAMPLES", "25")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("opxlab")


@pytest.fixture(autouse=True)
def _clean_precision_env(monkeypatch):
    # tests assume the documented 120-digit default
    monkeypatch.delenv("OPXLAB_PRECISION", raising=False)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Lines recorded here are printed in the terminal summary."""
    return request.config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_ACCEPTANCE]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
