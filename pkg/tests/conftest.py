import numpy as np
import pytest

from modmor.lti import InterconnectedSystem, StateSpaceModel

ACCEPTANCE_LINES: list[str] = []


def random_stable_model(rng: np.random.Generator, n: int, m: int, p: int,
                        min_decay: float = 0.1, with_d: bool = True) -> StateSpaceModel:
    """Random stable model with eigenvalues shifted left of ``-min_decay``."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real) + min_decay + rng.uniform(0.0, 1.0)
    A = A - shift * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m)) if with_d else np.zeros((p, m))
    return StateSpaceModel(A, B, C, D)


def random_interconnection(rng: np.random.Generator, k: int = 2, max_states: int = 3,
                           max_io: int = 2, coupling: float = 0.3) -> InterconnectedSystem:
    """Small random interconnection with one external input and output."""
    subs = []
    for _ in range(k):
        n = int(rng.integers(1, max_states + 1))
        m = int(rng.integers(1, max_io + 1))
        p = int(rng.integers(1, max_io + 1))
        subs.append(random_stable_model(rng, n, m, p, min_decay=0.5))
    mb, pb = sum(g.m for g in subs), sum(g.p for g in subs)
    return InterconnectedSystem(subs, coupling * rng.standard_normal((mb, pb)),
                                rng.standard_normal((mb, 1)), rng.standard_normal((1, pb)),
                                rng.standard_normal((1, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
