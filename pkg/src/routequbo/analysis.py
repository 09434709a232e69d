"""Decoding samples into route assignments, picking a solution, and reporting."""

from __future__ import annotations

import csv
import io
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .network import Scenario
from .qubo import QuboProblem, compile_plan, energy, route_coefficient
from .routes import RoutePlan, generate_routes
from .samplers import AnnealParams, SampleRecord, SampleSet, run_sampler

CONGESTION_THRESHOLD = 3


class NoValidSolutionError(RuntimeError):
    """No sample assigns exactly one route to every vehicle."""


@dataclass(frozen=True)
class Assignment:
    choices: Mapping[int, int]
    bits: tuple[int, ...]
    energy: float
    valid: bool
    total_cost: float | None = None
    segment_density: Mapping[int, int] | None = None
    segment_load: Mapping[int, float] | None = None
    occurrences: int = 1

    def to_dict(self, plan: RoutePlan | None = None) -> dict:
        out = {
            "valid": self.valid,
            "bits": "".join(map(str, self.bits)),
            "energy": self.energy,
            "occurrences": self.occurrences,
            "total_cost": self.total_cost,
            "choices": {str(i): j for i, j in sorted(self.choices.items())},
        }
        if plan is not None:
            out["routes"] = {
                str(i): list(plan.route(i, j).segments) for i, j in sorted(self.choices.items())
            }
        return out


def segment_metrics(choices: Mapping[int, int], plan: RoutePlan, mode: str = "weighted"):
    """(cost, density, load) of a complete route choice.

    Cost is the sum over segments of the squared sum of route coefficients.
    """
    density = {s.id: 0 for s in plan.network.segments}
    load = {s.id: 0.0 for s in plan.network.segments}
    coef_sum = {s.id: 0.0 for s in plan.network.segments}
    for i, j in choices.items():
        r = plan.route(i, j)
        c = route_coefficient(r.weight, mode)
        for m in r.segments:
            density[m] += 1
            load[m] += r.weight
            coef_sum[m] += c
    cost = sum(v * v for v in coef_sum.values())
    return cost, density, load


def encode(choices: Mapping[int, int], plan: RoutePlan) -> tuple[int, ...]:
    bits = [0] * (plan.n_vehicles * plan.k)
    for i, j in choices.items():
        bits[i * plan.k + j] = 1
    return tuple(bits)


def decode(sample: SampleRecord, plan: RoutePlan, problem: QuboProblem) -> Assignment:
    bits = tuple(int(b) for b in sample.bits)
    if len(bits) != problem.n_vars:
        raise ValueError(f"sample has {len(bits)} bits, problem has {problem.n_vars} variables")
    active: dict[int, list[int]] = {i: [] for i in range(plan.n_vehicles)}
    for a, b in enumerate(bits):
        if b:
            i, j = problem.var_map[a]
            active[i].append(j)
    choices = {i: js[0] for i, js in active.items() if len(js) == 1}
    valid = len(choices) == plan.n_vehicles
    if not valid:
        return Assignment(choices, bits, sample.energy, False, occurrences=sample.occurrences)
    cost, density, load = segment_metrics(choices, plan, problem.cost_mode or "weighted")
    return Assignment(choices, bits, sample.energy, True, cost, density, load, sample.occurrences)


def select_solution(samples: SampleSet, plan: RoutePlan, problem: QuboProblem) -> Assignment:
    """Lowest-energy complete assignment; ties go to the most frequent, then to the lowest bit string."""
    if not len(samples):
        raise ValueError("empty sample set")
    # records are already ordered by (energy, -occurrences, bits)
    for rec in samples.records:
        a = decode(rec, plan, problem)
        if a.valid:
            return a
    raise NoValidSolutionError(
        "no sample assigns exactly one route per vehicle; raise num_reads or the penalty K"
    )


def energy_cost_curve(samples: SampleSet, plan: RoutePlan, problem: QuboProblem, include_invalid: bool = False):
    """(energy, cost, valid) per record, sorted by energy. Invalid rows carry cost None."""
    rows = []
    for rec in samples.records:
        a = decode(rec, plan, problem)
        if a.valid or include_invalid:
            rows.append((a.energy, a.total_cost, a.valid))
    rows.sort(key=lambda r: r[0])
    return rows


@dataclass(frozen=True)
class DensityRow:
    segment: int
    weight: float
    density: int
    load: float
    flag: bool


def density_report(assignment: Assignment, plan: RoutePlan, threshold: int = CONGESTION_THRESHOLD) -> list[DensityRow]:
    if not assignment.valid:
        raise ValueError("density report needs a valid assignment")
    return [
        DensityRow(
            s.id,
            s.weight,
            assignment.segment_density[s.id],
            assignment.segment_load[s.id],
            assignment.segment_density[s.id] >= threshold,
        )
        for s in plan.network.segments
    ]


# -- model comparison -----------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    model: str
    cost: float
    improvement_pct: float
    max_density: float
    mean_density: float
    energy: float | None = None
    choices: Mapping[int, int] | None = None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    note: str = "all costs evaluated with the weighted cost function"

    def row(self, model: str) -> ComparisonRow:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)

    @property
    def density_ratio(self) -> float | None:
        """Mean segment density of the weighted model relative to the density model."""
        base = self.row("density").mean_density
        return None if base == 0 else self.row("weighted").mean_density / base


def improvement_pct(baseline_cost: float, model_cost: float) -> float:
    if baseline_cost == 0:
        return 0.0
    return 100.0 * (baseline_cost - model_cost) / baseline_cost


def random_baseline(plan: RoutePlan, draws: int = 1000, seed=0):
    """Mean weighted cost, max density and mean density over uniform random route choices."""
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, plan.k, size=(draws, plan.n_vehicles))
    costs, maxes, means = [], [], []
    for row in picks:
        cost, density, _ = segment_metrics(dict(enumerate(row.tolist())), plan, "weighted")
        costs.append(cost)
        vals = list(density.values())
        maxes.append(max(vals))
        means.append(sum(vals) / len(vals))
    return float(np.mean(costs)), float(np.mean(maxes)), float(np.mean(means)), costs


Sampler = Callable[[QuboProblem, RoutePlan, int], SampleSet]


def _sampler_fn(sampler, params: AnnealParams | None) -> Sampler:
    if callable(sampler):
        return sampler

    def run(problem, plan, seed):
        p = params or AnnealParams()
        p = AnnealParams(p.num_reads, p.sweeps, p.initial_temperature, p.final_temperature, seed)
        return run_sampler(sampler, problem, plan, p)

    return run


def compare_models(
    scenario: Scenario,
    sampler="exhaustive",
    seeds: Sequence[int] = (0,),
    params: AnnealParams | None = None,
    draws: int = 1000,
    plan: RoutePlan | None = None,
) -> ComparisonReport:
    """Random route choice vs. the density-only and weighted QUBO models.

    Each solver row keeps the cheapest valid solution over ``seeds``; the
    random baseline draws from a generator seeded with the whole seed list.
    """
    plan = plan or generate_routes(scenario)
    run = _sampler_fn(sampler, params)
    base_cost, base_max, base_mean, _ = random_baseline(plan, draws, list(seeds))
    rows = [ComparisonRow("random", base_cost, 0.0, base_max, base_mean)]
    for mode in ("density", "weighted"):
        problem = compile_plan(plan, mode, scenario.penalty)
        best = None
        for seed in seeds:
            chosen = select_solution(run(problem, plan, seed), plan, problem)
            cost, density, _ = segment_metrics(chosen.choices, plan, "weighted")
            if best is None or cost < best[0]:
                best = (cost, density, chosen)
        cost, density, chosen = best
        vals = list(density.values())
        rows.append(
            ComparisonRow(
                mode,
                cost,
                improvement_pct(base_cost, cost),
                float(max(vals)),
                sum(vals) / len(vals),
                chosen.energy,
                dict(chosen.choices),
            )
        )
    return ComparisonReport(tuple(rows))


def valid_rate_by_reads(
    problem: QuboProblem,
    plan: RoutePlan,
    read_counts: Sequence[int] = (50, 100, 500),
    seeds: Sequence[int] = tuple(range(20)),
    sweeps: int = 1000,
    target: float | None = None,
) -> dict[int, dict[str, float]]:
    """Per read count: share of seeded runs yielding a valid solution, and an optimal one.

    ``target`` is the known optimum energy; without it the optimal share is omitted.
    """
    out = {}
    for reads in read_counts:
        valid = optimal = 0
        for seed in seeds:
            ss = run_sampler("anneal", problem, plan, AnnealParams(reads, sweeps, seed=seed))
            try:
                a = select_solution(ss, plan, problem)
            except NoValidSolutionError:
                continue
            valid += 1
            if target is not None and abs(a.energy - target) <= 1e-9 * max(1.0, abs(target)):
                optimal += 1
        row = {"valid_rate": valid / len(seeds)}
        if target is not None:
            row["optimal_rate"] = optimal / len(seeds)
        out[reads] = row
    return out


# -- CSV writers ----------------------------------------------------------------

def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def energy_cost_csv(curve) -> str:
    return _csv(("energy", "cost", "valid"), [(_num(e), _num(c), int(v)) for e, c, v in curve])


def density_csv(rows: Sequence[DensityRow]) -> str:
    return _csv(
        ("segment", "weight", "density", "load", "flag"),
        [(r.segment, _num(r.weight), r.density, _num(r.load), int(r.flag)) for r in rows],
    )


def comparison_csv(report: ComparisonReport) -> str:
    return _csv(
        ("model", "cost", "improvement_pct", "max_density", "mean_density"),
        [(r.model, _num(r.cost), _num(r.improvement_pct), _num(r.max_density), _num(r.mean_density)) for r in report.rows],
    )


def problem_energy_matches_cost(a: Assignment, problem: QuboProblem, tol: float = 1e-9) -> bool:
    e = energy(problem, a.bits)
    return abs(e - a.total_cost) <= tol * max(1.0, abs(a.total_cost))
