from __future__ import annotations

import pytest

# criterion number -> list of (part label, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


class Criterion:
    def __init__(self, number: int):
        self.number = number
        ACCEPTANCE.setdefault(number, [])

    def record(self, label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE[self.number].append((label, bool(passed), detail))
        return bool(passed)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = bool(parts) and all(p for _, p, _ in parts)
        detail = "; ".join(f"{label}: {'ok' if p else 'FAIL'} ({d})" if d else f"{label}: {'ok' if p else 'FAIL'}"
                           for label, p, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} | {detail}")
