import numpy as np
import pytest
from hypothesis import settings, strategies as st

from censorkit import ModelSpec
from censorkit.oracle import default_spec

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")

vols = st.floats(0.05, 1.5)
loads = st.floats(0.3, 2.5)
sizes = st.floats(0.2, 5.0)
rates = st.floats(0.0, 6.0)


@st.composite
def specs(draw, m=None, max_m=4, equal_alpha=False):
    m = draw(st.integers(1, max_m)) if m is None else m
    a = draw(loads)
    alpha = (a,) * m if equal_alpha else tuple(draw(loads) for _ in range(m))
    return ModelSpec(m, draw(vols), tuple(draw(vols) for _ in range(m)), alpha,
                     tuple(draw(sizes) for _ in range(m)), tuple(draw(rates) for _ in range(m)),
                     x0=draw(st.floats(0.5, 2.0)))


def random_single_specs(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        brk = np.sort(rng.uniform(0.05, 0.95, rng.integers(0, 3)))
        breaks = [0.0, *brk, 1.0]
        lam = {"breaks": breaks, "rates": list(rng.uniform(0.0, 5.0, len(breaks) - 1))}
        out.append(ModelSpec(1, rng.uniform(0.1, 1.0), (rng.uniform(0.1, 1.0),),
                             (rng.uniform(0.5, 2.0),), (rng.uniform(0.5, 2.0),), (lam,)))
    return out


@pytest.fixture
def ref1():
    return default_spec(1)


@pytest.fixture
def ref2():
    return default_spec(2)


# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    def record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
