import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from toricnc.cli import standard_workspace_text  # noqa: E402
from toricnc.dsl import parse_workspace  # noqa: E402

settings.register_profile("repo", deadline=None, derandomize=True)
settings.load_profile("repo")

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def ws():
    return parse_workspace(standard_workspace_text())


@pytest.fixture(scope="session")
def deformation(ws):
    return ws.deformation


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, title = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {title}")
