import pytest

from harmonic_mortar.geometry import AnnulusGeometry

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def geom():
    return AnnulusGeometry()


@pytest.fixture
def report(request, capsys):
    """``report(number, ok, detail)`` prints one verdict line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
