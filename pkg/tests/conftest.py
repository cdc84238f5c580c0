import pytest

# one (criterion, status, detail) row per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {title} -- {detail}")


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion and print it."""

    def record(key, title, passed, detail):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE[key] = (status, title, detail)
        print(f"[{status}] criterion {key}: {title} -- {detail}")
        return passed

    def skip(key, title, reason):
        ACCEPTANCE[key] = ("SKIP", title, reason)
        pytest.skip(reason)

    record.skip = skip
    return record
