import contextlib

import pytest

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Context manager that records and prints a PASS/FAIL line for one acceptance criterion."""

    @contextlib.contextmanager
    def check(number: int, title: str):
        try:
            yield
        except BaseException as exc:
            line = f"criterion {number}: FAIL  {title} ({type(exc).__name__})"
            _VERDICTS[number] = line
            with capsys.disabled():
                print("\n" + line)
            raise
        line = f"criterion {number}: PASS  {title}"
        _VERDICTS[number] = line
        with capsys.disabled():
            print("\n" + line)

    return check


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number])
