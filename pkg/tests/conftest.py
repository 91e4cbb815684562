import json

import pytest

from bugreplay.device import SimulatedApp, SimulatedDevice
from bugreplay.exemplars import ExemplarCorpus

import helpers


@pytest.fixture(scope="session")
def corpus():
    return ExemplarCorpus.builtin()


@pytest.fixture(params=helpers.SCENARIO_BUILDERS, ids=lambda b: b.__name__)
def scenario(request):
    return request.param()


def make_device(spec):
    return SimulatedDevice(SimulatedApp.from_dict(spec))


@pytest.fixture
def write_json(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path
    return write


# one line per acceptance criterion, echoed after the test run so the
# verdicts survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
