import numpy as np
import pytest

from irkfsi.fluid import FluidParams
from irkfsi.mesh import BenchmarkGeometry, generate_benchmark, parse_mesh
from irkfsi.problem import build_problem
from irkfsi.solid import SolidParams

TWO_TRIANGLES = """\
fsimesh 1
NODES 4
0 0
1 0
0 1
1 1
TRIANGLES 2
0 1 2 0
1 3 2 1
FACETS 5
0 1 2
2 0 2
1 3 4
3 2 4
1 2 5
"""

TINY_BEAM = dict(length=1.0, height=0.5, beam_x0=0.25, beam_width=0.25, beam_height=0.25)


@pytest.fixture(scope="session")
def two_triangles():
    return parse_mesh(TWO_TRIANGLES)


@pytest.fixture(scope="session")
def tiny_mesh():
    return generate_benchmark(BenchmarkGeometry("vertical_beam", 0.25, TINY_BEAM))


@pytest.fixture(scope="session")
def tiny_problem(tiny_mesh):
    """190 unknowns per stage; small enough for dense oracles."""
    return build_problem(tiny_mesh, FluidParams(mu=0.05, t_ramp=0.5), SolidParams(E=50.0))


@pytest.fixture(scope="session")
def beam_mesh():
    return generate_benchmark(BenchmarkGeometry("vertical_beam", 0.2))


@pytest.fixture(scope="session")
def beam_problem(beam_mesh):
    return build_problem(beam_mesh, FluidParams(), SolidParams(), probe=(0.6, 0.5))


@pytest.fixture(scope="session")
def box_problem():
    mesh = generate_benchmark(BenchmarkGeometry("box_isolated", 0.5))
    return build_problem(mesh, FluidParams(u_inf=0.0, mu=0.1), SolidParams(E=10.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one line per acceptance criterion for the terminal summary."""
    def report(number: int, title: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
