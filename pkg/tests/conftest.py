"""Shared fixtures plus the end-of-run acceptance checklist printer."""

import pytest

from wecs_sim import AeroParams, MachineParams

_criterion_lines = []


def record_criterion(line):
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance checklist")
    for line in _criterion_lines:
        terminalreporter.write_line(line)


@pytest.fixture
def table_machine():
    return MachineParams(R=0.42, L=1e-3, phi_f=0.11, p=8, V_dc=50.0, I_max=20.0)


@pytest.fixture
def table_aero():
    return AeroParams()
