import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from degenwave.assembly import assemble  # noqa: E402
from degenwave.coeff import left_coefficient, right_coefficient  # noqa: E402
from degenwave.mesh import build_coupled_mesh  # noqa: E402


@functools.lru_cache(maxsize=None)
def make_operator(n, mu_a, mu_b, gamma=1.0, grading=None):
    mesh = build_coupled_mesh(n, mu_a, mu_b, grading)
    return assemble(mesh, right_coefficient(mu_a), left_coefficient(mu_b), gamma)


@pytest.fixture
def op():
    return make_operator


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line; all lines are repeated in the terminal summary."""

    def record(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
