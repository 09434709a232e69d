import itertools
from pathlib import Path

import numpy as np
import pytest

from routequbo.network import RoadNetwork, Scenario, Segment, Vehicle, load_scenario
from routequbo.qubo import compile_plan
from routequbo.routes import generate_routes

DATA = Path(__file__).resolve().parents[1] / "src" / "routequbo" / "data"
BUNDLED = ("fig1_n3", "fig1", "fig1_n5")

_acceptance_lines: list[str] = []


@pytest.fixture
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def bundled(name):
    return load_scenario(DATA / f"{name}.json")


@pytest.fixture(params=BUNDLED)
def bundled_name(request):
    return request.param


@pytest.fixture(scope="session")
def fig1():
    return bundled("fig1")


@pytest.fixture(scope="session")
def fig1_plan(fig1):
    return generate_routes(fig1)


@pytest.fixture(scope="session")
def fig1_problem(fig1_plan):
    return compile_plan(fig1_plan, "weighted", "auto")


def chain_network(length, weight=1.0):
    nodes = [f"n{i}" for i in range(length + 1)]
    segs = [Segment(i, nodes[i], nodes[i + 1], weight) for i in range(length)]
    return RoadNetwork(tuple(nodes), tuple(segs))


def chain_scenario(length, k, n_vehicles=1):
    net = chain_network(length)
    vehicles = tuple(Vehicle(i, net.nodes[0], net.nodes[-1]) for i in range(n_vehicles))
    return Scenario(net, vehicles, k)


# -- independent oracles ------------------------------------------------------

def direct_cost(plan, bits, mode="weighted"):
    """Sum over segments of the squared coefficient sum, walking routes rather than the incidence map."""
    per_segment = {}
    k = plan.k
    for i, per_vehicle in enumerate(plan.routes):
        for j, route in enumerate(per_vehicle):
            if bits[i * k + j]:
                c = route.weight if mode == "weighted" else 1.0
                for m in route.segments:
                    per_segment[m] = per_segment.get(m, 0.0) + c
    return sum(v * v for v in per_segment.values())


def direct_penalty(bits, n, k):
    return sum((sum(bits[i * k:(i + 1) * k]) - 1) ** 2 for i in range(n))


def dense_energy(problem, bits):
    x = np.asarray(bits, dtype=float)
    return float(x @ problem.to_dense() @ x) + problem.offset


def all_bits(n):
    return itertools.product((0, 1), repeat=n)


def is_one_hot(bits, n, k):
    return all(sum(bits[i * k:(i + 1) * k]) == 1 for i in range(n))
