import itertools
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from routequbo.network import RoadNetwork, Segment
from routequbo.qubo import (
    QuboProblem,
    assemble,
    auto_penalty,
    build_constraint_terms,
    build_cost_terms,
    compile_plan,
    energies,
    energy,
    format_qubo,
    ising_energy,
    parse_qubo,
    to_ising,
    var_map_json,
    write_qubo,
)
from routequbo.routes import CandidateRoute, RoutePlan, build_incidence, make_plan

from conftest import all_bits, dense_energy, direct_cost, direct_penalty, is_one_hot


def plan_from_routes(route_lists, n_segments):
    """Plan over a star of independent unit segments; routes are arbitrary segment subsets.

    The QUBO only sees incidence and route weights, so connectivity is irrelevant here.
    """
    nodes = tuple(f"v{m}" for m in range(n_segments + 1))
    net = RoadNetwork(nodes, tuple(Segment(m, "v0", f"v{m + 1}", 1.0) for m in range(n_segments)))
    return make_plan(net, route_lists)


def plan_with_weights(route_segments, weights, n_segments):
    """Plan whose route weights are set directly; one vehicle per (segments, weight) row."""
    nodes = tuple(f"v{m}" for m in range(n_segments + 1))
    net = RoadNetwork(nodes, tuple(Segment(m, "v0", f"v{m + 1}", 1.0) for m in range(n_segments)))
    routes = tuple(
        tuple(CandidateRoute(i, j, tuple(segs), float(w)) for j, (segs, w) in enumerate(zip(rs, ws)))
        for i, (rs, ws) in enumerate(zip(route_segments, weights))
    )
    flat = [r for rs in routes for r in rs]
    return RoutePlan(net, routes, build_incidence(flat, net))


def test_two_routes_one_segment():
    plan = plan_with_weights([[[0]], [[0]]], [[2.0], [3.0]], 1)
    cost = build_cost_terms(plan, "weighted")
    assert dict(cost.coefficients) == {(0, 0): 4.0, (1, 1): 9.0, (0, 1): 12.0}
    assert cost.offset == 0
    assert energy(cost, [1, 1]) == 25 == (2 + 3) ** 2


def test_unused_segment_contributes_nothing():
    a = plan_with_weights([[[0]], [[0]]], [[2.0], [3.0]], 1)
    b = plan_with_weights([[[0]], [[0]]], [[2.0], [3.0]], 4)
    assert build_cost_terms(a).coefficients == build_cost_terms(b).coefficients


def test_fig1_density_mode_matches_counter(fig1_plan):
    cost = build_cost_terms(fig1_plan, "density")
    for bits in all_bits(12):
        assert energy(cost, bits) == direct_cost(fig1_plan, bits, "density")


def test_constraint_shape():
    c = build_constraint_terms(4, 3)
    assert c.n_vars == 12
    assert c.to_dense().shape == (12, 12)
    assert c.offset == 4
    dense = c.to_dense()
    assert np.all(np.tril(dense, -1) == 0)
    # nothing couples different vehicles
    for (a, b) in c.coefficients:
        assert a // 3 == b // 3


def test_constraint_single_vehicle_values():
    c = build_constraint_terms(1, 3)
    assert energy(c, [1, 0, 0]) == 0
    assert energy(c, [1, 1, 0]) == 1
    assert energy(c, [0, 0, 0]) == 1
    assert energy(c, [1, 1, 1]) == 4


@pytest.mark.parametrize("n,k", [(0, 3), (2, 0)])
def test_constraint_needs_positive_sizes(n, k):
    with pytest.raises(ValueError):
        build_constraint_terms(n, k)


def test_assemble_identity_scaling():
    con = build_constraint_terms(2, 3)
    zero = QuboProblem(6, {}, 0.0, con.var_map)
    out = assemble(zero, con, 1.0)
    assert out.coefficients == con.coefficients
    assert out.offset == 2
    assert out.penalty == 1.0


@pytest.mark.parametrize("K", [0, -1.0])
def test_assemble_rejects_non_positive_k(fig1_plan, K):
    with pytest.raises(ValueError):
        assemble(build_cost_terms(fig1_plan), build_constraint_terms(4, 3), K)


def test_assemble_rejects_mismatched_parts(fig1_plan):
    with pytest.raises(ValueError):
        assemble(build_cost_terms(fig1_plan), build_constraint_terms(3, 3), 2.0)


def test_feasible_energy_is_cost_for_any_k(fig1_plan):
    cost = build_cost_terms(fig1_plan)
    con = build_constraint_terms(4, 3)
    for K in (1.0, 7.5, 1e4):
        q = assemble(cost, con, K)
        for choice in itertools.product(range(3), repeat=4):
            bits = [0] * 12
            for i, j in enumerate(choice):
                bits[i * 3 + j] = 1
            assert energy(q, bits) == energy(cost, bits)


def test_auto_penalty_examples():
    empty = RoutePlan(RoadNetwork(("A",), ()), (), build_incidence([]))
    assert auto_penalty(empty) == 1.0
    two = plan_with_weights([[[0]], [[0]]], [[1.0], [1.0]], 1)
    assert auto_penalty(two, "weighted") == 5.0
    assert auto_penalty(two, "density") == 5.0


def test_auto_k_separates_infeasible_states(fig1_plan):
    q = compile_plan(fig1_plan, "weighted", "auto")
    X = np.array(list(all_bits(12)))
    e = energies(q, X)
    feasible = np.array([is_one_hot(b, 4, 3) for b in X])
    assert feasible.sum() == 81
    assert e[~feasible].min() > e[feasible].min()
    # ground state is feasible
    assert feasible[np.argmin(e)]


def test_energy_examples(fig1_problem):
    assert energy(fig1_problem, [0] * 12) == fig1_problem.offset
    diag = QuboProblem(3, {(0, 0): -2.0, (1, 1): 5.0, (2, 2): 1.5}, 0.25, [(0, 0), (0, 1), (0, 2)])
    assert energy(diag, [0, 1, 0]) == 5.25
    with pytest.raises(ValueError):
        energy(diag, [0, 1])


def test_energy_matches_dense_oracle(fig1_problem):
    rng = np.random.default_rng(11)
    for bits in rng.integers(0, 2, size=(200, 12)):
        assert energy(fig1_problem, bits.tolist()) == pytest.approx(dense_energy(fig1_problem, bits), abs=1e-9)


def test_batch_energies_agree(fig1_problem):
    X = np.array(list(all_bits(12)))
    batch = energies(fig1_problem, X)
    scalar = np.array([energy(fig1_problem, row.tolist()) for row in X])
    assert np.array_equal(batch, scalar)


def test_upper_triangle_enforced():
    with pytest.raises(ValueError):
        QuboProblem(2, {(1, 0): 1.0}, 0.0, [(0, 0), (0, 1)])
    with pytest.raises(ValueError):
        QuboProblem(2, {}, 0.0, [(0, 0), (0, 0)])


def test_ising_single_variable():
    q = QuboProblem(1, {(0, 0): 3.0}, 0.5, [(0, 0)])
    h, J, c = to_ising(q)
    assert h.tolist() == [1.5]
    assert J == {}
    assert c == 0.5 + 1.5


def test_ising_zero_matrix():
    h, J, c = to_ising(QuboProblem(3, {}, 2.0, [(0, 0), (0, 1), (0, 2)]))
    assert h.tolist() == [0, 0, 0] and J == {} and c == 2.0


def test_ising_fig1_exhaustive(fig1_problem):
    h, J, c = to_ising(fig1_problem)
    for bits in all_bits(12):
        spins = [2 * b - 1 for b in bits]
        e_q = energy(fig1_problem, bits)
        assert ising_energy(h, J, c, spins) == pytest.approx(e_q, rel=1e-9, abs=1e-9)


# -- text export --------------------------------------------------------------

def test_format_qubo_exact():
    q = QuboProblem(3, {(0, 0): -1.0, (0, 2): 2.0, (1, 1): 1 / 3, (0, 1): 123456789012.0}, 4.0, [(0, 0), (0, 1), (1, 0)])
    assert format_qubo(q) == (
        "p qubo 3 4 4\n"
        "0 0 -1\n"
        "0 1 1.23456789e+11\n"
        "0 2 2\n"
        "1 1 0.333333333\n"
    )


def test_export_file_and_sidecar(tmp_path, fig1_problem):
    path, sidecar = write_qubo(fig1_problem, tmp_path / "fig1.txt")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[-1] == ""
    lines = lines[:-1]
    assert all(line == line.rstrip() for line in lines)
    head = lines[0].split()
    assert head[:3] == ["p", "qubo", "12"]
    assert int(head[3]) == fig1_problem.n_nonzero == len(lines) - 1
    keys = [tuple(map(int, line.split()[:2])) for line in lines[1:]]
    assert keys == sorted(keys)
    assert all(a <= b for a, b in keys)
    parsed = parse_qubo(raw.decode(), fig1_problem.var_map)
    assert parsed.coefficients == fig1_problem.coefficients
    assert parsed.offset == fig1_problem.offset
    mapping = json.loads(sidecar.read_text())
    assert mapping["4"] == {"vehicle": 1, "option": 1}
    assert len(mapping) == 12
    assert sidecar.read_text() == var_map_json(fig1_problem)


# -- properties over random plans -----------------------------------------------

@st.composite
def random_plans(draw, max_vars=9):
    n = draw(st.integers(1, 3))
    k = draw(st.integers(1, 3))
    if n * k > max_vars:
        k = max(1, max_vars // n)
    n_segments = draw(st.integers(1, 6))
    seg_lists = st.lists(st.integers(0, n_segments - 1), min_size=1, max_size=n_segments, unique=True)
    routes = [[draw(seg_lists) for _ in range(k)] for _ in range(n)]
    weights = [[draw(st.floats(1, 20, allow_nan=False)) for _ in range(k)] for _ in range(n)]
    return plan_with_weights(routes, weights, n_segments)


@settings(max_examples=60, deadline=None)
@given(random_plans(), st.sampled_from(["weighted", "density"]))
def test_expansion_identity(plan, mode):
    cost = build_cost_terms(plan, mode)
    for bits in all_bits(cost.n_vars):
        expected = direct_cost(plan, bits, mode)
        assert energy(cost, bits) == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(random_plans(), st.sampled_from(["weighted", "density"]), st.floats(0.1, 100))
def test_builders_stay_upper_triangular(plan, mode, K):
    q = compile_plan(plan, mode, K)
    assert all(a <= b for a, b in q.coefficients)
    assert np.all(np.tril(q.to_dense(), -1) == 0)
    assert q.var_map == tuple((i, j) for i in range(plan.n_vehicles) for j in range(plan.k))


@settings(max_examples=60, deadline=None)
@given(random_plans(), st.floats(0.5, 50))
def test_feasibility_decoupling(plan, K):
    q1 = compile_plan(plan, "weighted", K)
    q2 = compile_plan(plan, "weighted", 2 * K)
    n, k = plan.n_vehicles, plan.k
    for choice in itertools.product(range(k), repeat=n):
        bits = [0] * (n * k)
        for i, j in enumerate(choice):
            bits[i * k + j] = 1
        assert energy(q1, bits) == pytest.approx(energy(q2, bits), rel=1e-12, abs=1e-9)


@given(st.integers(1, 3), st.integers(1, 4))
def test_penalty_positivity(n, k):
    con = build_constraint_terms(n, k)
    for bits in all_bits(n * k):
        e = energy(con, bits)
        assert e == direct_penalty(bits, n, k)
        if not is_one_hot(bits, n, k):
            assert e >= 1


@settings(max_examples=40, deadline=None)
@given(random_plans())
def test_unit_weights_make_modes_coincide(plan):
    unit = replace(
        plan,
        routes=tuple(tuple(replace(r, weight=1.0) for r in rs) for rs in plan.routes),
    )
    assert build_cost_terms(unit, "weighted").coefficients == build_cost_terms(unit, "density").coefficients


@settings(max_examples=40, deadline=None)
@given(random_plans(max_vars=8), st.floats(0.5, 100))
def test_ising_equivalence_property(plan, K):
    q = compile_plan(plan, "weighted", K)
    h, J, c = to_ising(q)
    for bits in all_bits(q.n_vars):
        spins = [2 * b - 1 for b in bits]
        assert ising_energy(h, J, c, spins) == pytest.approx(energy(q, bits), rel=1e-9, abs=1e-9)


def test_plan_from_routes_helper():
    plan = plan_from_routes([[[0, 1]], [[1]]], 2)
    assert plan.route(0, 0).weight == 2.0
    assert plan.incidence[1] == {(0, 0), (1, 0)}
