import time

import pytest

_ACCEPTANCE: list[str] = []


class Criterion:
    """Records one acceptance line, checks the runtime budget, then asserts."""

    def __init__(self):
        self.start = time.perf_counter()

    def __call__(self, number: int, title: str, ok: bool, detail: str, budget_s: float):
        elapsed = time.perf_counter() - self.start
        ok = bool(ok) and elapsed < budget_s
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.1f}s / {budget_s:.0f}s]"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def criterion():
    return Criterion()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = item.name
    if rep.when == "call" and rep.failed and name.startswith("test_criterion_"):
        number = int(name.split("_")[2])
        if not any(line.startswith(f"criterion {number:>2} ") for line in _ACCEPTANCE):
            _ACCEPTANCE.append(f"criterion {number:>2} FAIL  {name}: {call.excinfo.typename}")
