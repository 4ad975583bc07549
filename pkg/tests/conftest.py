import pytest

# filled by tests/test_acceptance.py: (criterion number, passed, detail)
ACCEPTANCE_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: long-running acceptance criteria (deselect with -m 'not acceptance')")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"CRITERION {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def report(capsys):
    """``report(num, passed, detail)`` prints a PASS/FAIL line immediately and in the final summary."""

    def _report(num, passed, detail):
        passed = bool(passed)
        ACCEPTANCE_RESULTS.append((num, passed, detail))
        with capsys.disabled():
            print(f"\nCRITERION {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return _report
