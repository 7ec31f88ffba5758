import pytest

_CRITERIA: dict[str, tuple[str, bool]] = {}


@pytest.fixture
def criterion(request):
    """Record one named criterion; it is marked PASS only if the test body completes."""
    def record(key: str, title: str):
        _CRITERIA[key] = (title, False)
        request.node._criterion = key
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    key = getattr(item, "_criterion", None)
    if key and rep.when == "call":
        title, _ = _CRITERIA[key]
        _CRITERIA[key] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=int):
        title, ok = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {title}")
