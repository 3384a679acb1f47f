import math

import pytest
from hypothesis import strategies as st

from supertube.core import LatticeVector, PhysicalParams
from supertube.potential import PotentialSpec, limit_table, v0_limit

# V0 of the shipped default potential (tophat A=40, a=0.5) in the default box
DEFAULT_V0 = 40 * 4 * math.pi / 3 * 0.5**3 / 20.0

_acceptance = {}


@pytest.fixture
def params():
    return PhysicalParams()


@pytest.fixture
def default_v0(params):
    return v0_limit(PotentialSpec(), params)


@pytest.fixture
def default_table(params, default_v0):
    return limit_table(default_v0, params)


def lattice_vectors(lo=-6, hi=6, transverse=False, nonzero=False):
    c = st.integers(lo, hi)
    s = st.builds(LatticeVector, st.just(0) if transverse else c, c, c)
    return s.filter(lambda n: not n.is_zero) if nonzero else s


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    if "acceptance" not in report.keywords:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda s: int(s.split("_")[2])):
        verdict = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
