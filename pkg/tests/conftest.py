import numpy as np
import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20190812)


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(criterion: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def random_state(space, rng):
    from walkbench.state import WalkState

    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return WalkState(space, v / np.linalg.norm(v))


def random_q_params(rng):
    return rng.uniform(0, 1), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
