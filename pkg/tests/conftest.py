import pytest

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    store = request.config.stash[_VERDICTS]

    def record(number: int, ok: bool, detail: str):
        store.setdefault(number, []).append((bool(ok), detail))
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        parts = store[number]
        ok = all(p[0] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: " + "; ".join(p[1] for p in parts))
