import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pathwise import CadlagPath  # noqa: E402

DATA = Path(__file__).parent / "data"


def random_step_path(rng: np.random.Generator, n: int, dim: int = 1, horizon: float = 1.0) -> CadlagPath:
    """Irregular grid with jumps, flat stretches and ordinary moves."""
    gaps = rng.uniform(0.2, 1.0, n)
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    times *= horizon / times[-1]
    times[-1] = horizon
    inc = rng.normal(size=(n, dim)) / np.sqrt(n)
    inc[rng.random(n) < 0.15] = 0.0
    big = rng.random(n) < 0.05
    inc[big] *= 8.0
    return CadlagPath(times, np.vstack([rng.normal(size=(1, dim)), np.cumsum(inc, axis=0) + 0.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def fixture_path() -> CadlagPath:
    return CadlagPath.from_csv(DATA / "fixture_path.csv")


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
