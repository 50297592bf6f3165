from __future__ import annotations

import numpy as np
import pytest

from catseg.domain import CategoricalSequence, encode


def random_onehot(rng: np.random.Generator, r: int, n: int) -> np.ndarray:
    return encode(CategoricalSequence(rng.integers(1, r + 1, size=n), r))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    details = "; ".join(v for k, v in item.user_properties if k == "detail")
    status = "PASS" if report.passed else "FAIL"
    _CRITERIA[number] = (f"{status} criterion {number:>2} {title}", details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        line, details = _CRITERIA[number]
        terminalreporter.write_line(f"{line}" + (f" ({details})" if details else ""))
