import pytest

_acceptance: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        label = item.get_closest_marker("acceptance").args[0]
        detail = getattr(item, "acceptance_detail", "")
        _acceptance.append((label, "PASS" if rep.passed else "FAIL", detail))


@pytest.fixture
def detail(request):
    """Let an acceptance test attach a one-line measurement to its PASS/FAIL line."""

    def record(text: str) -> None:
        request.node.acceptance_detail = text

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, text in sorted(_acceptance):
        terminalreporter.write_line(f"{verdict} {label}" + (f"  {text}" if text else ""))
