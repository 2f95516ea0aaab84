import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, part, ok, detail)`` for the end-of-run criterion table."""
    table = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(criterion: int, part: str, ok: bool, detail: str = "") -> bool:
        table.setdefault(criterion, []).append((part, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(table):
        parts = table[criterion]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{part}: {'ok' if ok else 'FAILED'} ({d})" for part, ok, d in parts)
        terminalreporter.write_line(f"criterion {criterion:>2}: {status}  {detail}")
