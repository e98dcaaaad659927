import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


class AcceptanceLog:
    def __init__(self, store: dict):
        self.store = store

    def record(self, number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        self.store[number] = line
        print(line)
        assert ok, line


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request) -> AcceptanceLog:
    return AcceptanceLog(request.config.stash[_ACCEPTANCE])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
