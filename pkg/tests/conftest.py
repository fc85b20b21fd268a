import pytest

GATE_LINES: list = []


@pytest.fixture
def gate():
    """Record one ``[acceptance N] PASS/FAIL`` line; returns the verdict.

    Lines are printed immediately (visible under ``-s``) and repeated in the
    terminal summary so a plain ``pytest`` run shows the gate outcome too.
    """

    def _gate(num: int, description: str, ok: bool, detail: str = "") -> bool:
        line = f"[acceptance {num}] {'PASS' if ok else 'FAIL'} — {description}"
        if detail:
            line += f" ({detail})"
        print(line, flush=True)
        GATE_LINES.append(line)
        return ok

    return _gate


def pytest_terminal_summary(terminalreporter):
    if GATE_LINES:
        terminalreporter.section("acceptance gate")
        for line in GATE_LINES:
            terminalreporter.write_line(line)
