"""Congestion-aware vehicle routing compiled to QUBO and solved classically."""

from .analysis import (
    Assignment,
    ComparisonReport,
    NoValidSolutionError,
    compare_models,
    decode,
    density_report,
    encode,
    energy_cost_curve,
    select_solution,
)
from .network import (
    RoadNetwork,
    Scenario,
    ScenarioError,
    Segment,
    Vehicle,
    load_scenario,
    validate_route,
)
from .qubo import (
    QuboProblem,
    assemble,
    auto_penalty,
    build_constraint_terms,
    build_cost_terms,
    compile_plan,
    energy,
    to_ising,
)
from .routes import CandidateRoute, RoutePlan, build_incidence, generate_routes, route_weight
from .samplers import AnnealParams, SampleSet, solve_annealing, solve_exhaustive, solve_valid_enumeration

__version__ = "0.1.0"
