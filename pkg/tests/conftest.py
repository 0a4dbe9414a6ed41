import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns ``report(num, passed, detail, elapsed, limit)``."""
    lines = request.config.stash[_LINES]

    def report(num, passed, detail, elapsed, limit):
        in_time = elapsed < limit
        ok = passed and in_time
        line = (f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}  "
                f"[{elapsed:.1f} s, limit {limit:g} s]")
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
