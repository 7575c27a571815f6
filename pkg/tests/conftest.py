"""Shared, cached eigen-solves so that several test modules reuse one campaign."""

import functools
import math

import pytest

from trispec.fem import solve_run
from trispec.metrics import metrics_for_run

A_3060 = 1.0 / math.sqrt(3.0)


@functools.lru_cache(maxsize=None)
def cached_run(a, ndiv, order=2, count=50):
    return solve_run(a, ndiv, order, count)


@functools.lru_cache(maxsize=None)
def cached_metrics(a, ndiv, order=2, count=50):
    return tuple(metrics_for_run(cached_run(a, ndiv, order, count)))


@pytest.fixture(scope="session")
def run_a1_32():
    return cached_run(1.0, 32, 2, 50)


@pytest.fixture(scope="session")
def run_a099_64():
    return cached_run(0.99, 64, 2, 300)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
