import numpy as np
import pytest


def rand_herm(gen, n):
    g = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    return (g + g.conj().T) / 2


def rand_state(gen, n):
    g = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    m = g @ g.conj().T
    return m / np.trace(m).real


@pytest.fixture
def gen():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
