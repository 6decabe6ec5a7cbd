import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tcemu import _backend  # noqa: E402


@pytest.fixture(params=_backend.available())
def backend(request):
    return _backend.load(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_half(rng, shape, lo=-1.0, hi=1.0):
    from tcemu.half import to_half

    return to_half(rng.uniform(lo, hi, shape).astype(np.float32))


_ACCEPTANCE = []


@pytest.fixture
def criterion(capsys):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def check(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line, flush=True)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
