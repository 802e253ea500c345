import re
from importlib import resources

import pytest
from hypothesis import settings

from qlink.config import load_link, load_receiver, load_trace_config

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def data_path(name):
    return str(resources.files("qlink") / "data" / name)


@pytest.fixture
def integrated_receiver():
    return load_receiver(data_path("integrated_receiver.yaml"))


@pytest.fixture
def squeezed_link():
    return load_link(data_path("squeezed_link.yaml"))


@pytest.fixture
def measured_trace_config():
    return load_trace_config(data_path("measured_trace.yaml"))


def _criterion_key(line):
    m = re.search(r"criterion (\d+)(\w*)", line)
    return (int(m.group(1)), m.group(2)) if m else (0, line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)
