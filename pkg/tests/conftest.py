import numpy as np
import pytest

from fuzzy_eix.granule import Bounds, Granule


def box(c, il, iu, ol, ou, support=1, gid=0, tally=None):
    """Build a granule from scalars (1-D) or sequences."""
    v = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (c, il, iu, ol, ou)]
    return Granule(v[0], Bounds(v[1], v[2]), Bounds(v[3], v[4]),
                   support=support, gid=gid, label_tally=tally or {})


@pytest.fixture
def g_1d():
    """c=0.5, inner [0.4, 0.6], outer [0.3, 0.7]."""
    return box(0.5, 0.4, 0.6, 0.3, 0.7)


def random_granule(rng, n, eps, positive=True):
    """A valid granule with random center/half-widths."""
    c = rng.uniform(0.15, 0.85, n) if positive else rng.uniform(0.0, 1.0, n)
    hin = rng.uniform(eps / 2, 0.1, n)
    hout = hin + rng.uniform(eps / 2, 0.1, n)
    return Granule(c, Bounds(c - hin, c + hin), Bounds(c - hout, c + hout),
                   support=int(rng.integers(1, 20)))


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(name, passed, detail)."""
    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
