import re

import pytest

from dhgrad.field_ops import Grid3, gaussian_field
from dhgrad.inversion import construct_inversion
from dhgrad.kernels import FAMILIES, KernelSpec, make_kernel
from dhgrad.radial_fourier import radial_ft

_CRITERIA: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
    _CRITERIA.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda s: int(re.search(r"criterion\s+(\d+)", s).group(1))
    for line in sorted(_CRITERIA, key=key):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_specs():
    return {f: KernelSpec.default(f) for f in FAMILIES}


@pytest.fixture(scope="session")
def profiles(default_specs):
    return {f: make_kernel(s) for f, s in default_specs.items()}


@pytest.fixture(scope="session")
def spectra(profiles):
    return {f: radial_ft(p, xi_min=1e-3, xi_max=1e3, n=2048) for f, p in profiles.items()}


@pytest.fixture(scope="session")
def inversions(profiles):
    return {f: construct_inversion(p)[0] for f, p in profiles.items()}


@pytest.fixture(scope="session")
def grid64():
    return Grid3(64, 16.0)


@pytest.fixture(scope="session")
def unit_gaussian(grid64):
    return gaussian_field(grid64)
