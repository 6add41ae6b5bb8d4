"""Scenario runner, checks and reports."""

from .report import Report, emit_report, run_scenario
from .scenario import Scenario, n3_fixture, scalar_fixture
