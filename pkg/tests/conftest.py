import numpy as np
import pytest

from planar_kernels.geometry import annulus, circular_domain, unit_disc
from planar_kernels.green import GreenEvaluator

ACCEPTANCE_LINES: dict[str, str] = {}


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"acceptance {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def disc():
    return unit_disc()


@pytest.fixture(scope="session")
def ann():
    return annulus(0.5)


@pytest.fixture(scope="session")
def two_holes():
    return circular_domain([(0.4 + 0.1j, 0.15), (-0.35 - 0.2j, 0.2)])


@pytest.fixture(scope="session")
def ev_disc(disc):
    return GreenEvaluator(disc)


@pytest.fixture(scope="session")
def ev_ann(ann):
    return GreenEvaluator(ann)


@pytest.fixture(scope="session")
def ev_holes(two_holes):
    return GreenEvaluator(two_holes)


def random_interior(domain, n, margin=0.05, seed=0):
    from planar_kernels.geometry import boundary_distance

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = complex(*rng.uniform(-1, 1, 2))
        if abs(z) < 1 and boundary_distance(domain, z) > margin:
            out.append(z)
    return np.array(out)


@pytest.fixture(scope="session")
def eng_disc(ev_disc):
    from planar_kernels.verify import KernelEngine

    return KernelEngine(ev_disc)


@pytest.fixture(scope="session")
def eng_ann(ev_ann):
    from planar_kernels.verify import KernelEngine

    return KernelEngine(ev_ann)
