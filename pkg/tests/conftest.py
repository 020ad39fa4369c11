import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


class AcceptanceLog:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, number: int, name: str, passed: bool, detail: str = ""):
        _RESULTS.append((number, name, bool(passed), detail))
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {name} {detail}".rstrip())


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_RESULTS):
        line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
    failed = sum(not r[2] for r in _RESULTS)
    terminalreporter.write_line(f"{len(_RESULTS) - failed}/{len(_RESULTS)} criteria passed")
