import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Callable ``report(k, ok, detail)`` that prints and stores one line per criterion."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def report(k: int, ok: bool, detail: str):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[k] = line
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
