"""Command line entry point: ``routequbo build|solve|compare``.

Exit codes: 0 success, 1 bad input, 2 no valid solution.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import analysis
from .analysis import NoValidSolutionError
from .network import ScenarioError, load_scenario
from .qubo import compile_plan, write_qubo
from .routes import InfeasibleRoutesError, generate_routes
from .samplers import SAMPLERS, AnnealParams, ProblemTooLargeError, run_sampler

EXIT_OK, EXIT_INPUT, EXIT_NO_SOLUTION = 0, 1, 2

BUNDLED = ("fig1", "fig1_n3", "fig1_n5")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: str
    mode: str | None
    penalty: str | float | None
    sampler: str
    anneal: AnnealParams
    out: Path
    seed: int


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("routequbo") / "data" / f"{name}.json"))


def resolve_scenario(arg: str) -> Path:
    path = Path(arg)
    if not path.exists():
        stem = arg[:-5] if arg.endswith(".json") else arg
        if stem in BUNDLED and "/" not in arg:
            return bundled_scenario_path(stem)
    return path


def _penalty(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"penalty must be 'auto' or a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("penalty must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="routequbo", description="Congestion-aware vehicle routing as a QUBO.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("build", "compile a scenario and write the QUBO file"),
        ("solve", "compile, sample and decode a scenario"),
        ("compare", "compare random, density and weighted models"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON path, or a bundled name (fig1, fig1_n3, fig1_n5)")
        p.add_argument("--mode", choices=("weighted", "density"), default=None, help="override the scenario cost mode")
        p.add_argument("--penalty", type=_penalty, default=None, help="'auto' or a positive number")
        p.add_argument("--sampler", choices=SAMPLERS, default="anneal")
        p.add_argument("--num-reads", type=int, default=50)
        p.add_argument("--sweeps", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory (created if missing)")
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    try:
        params = AnnealParams(num_reads=ns.num_reads, sweeps=ns.sweeps, seed=ns.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return RunConfig(ns.command, ns.scenario, ns.mode, ns.penalty, ns.sampler, params, Path(ns.out), ns.seed)


def _prepare(cfg: RunConfig):
    path = resolve_scenario(cfg.scenario)
    scenario = load_scenario(path).with_overrides(cfg.mode, cfg.penalty)
    plan = generate_routes(scenario)
    problem = compile_plan(plan, scenario.cost_mode, scenario.penalty)
    cfg.out.mkdir(parents=True, exist_ok=True)
    return scenario, plan, problem


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_build(cfg: RunConfig) -> int:
    _, _, problem = _prepare(cfg)
    qubo_path, sidecar = write_qubo(problem, cfg.out / "qubo.txt")
    print(f"N={problem.n_vars} nonzero={problem.n_nonzero} K={problem.penalty:.9g} offset={problem.offset:.9g}")
    print(f"wrote {qubo_path} and {sidecar}")
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    _, plan, problem = _prepare(cfg)
    samples = run_sampler(cfg.sampler, problem, plan, cfg.anneal)
    _write(cfg.out / "samples.json", samples.to_json())
    _write(
        cfg.out / "energy_cost.csv",
        analysis.energy_cost_csv(analysis.energy_cost_curve(samples, plan, problem, include_invalid=True)),
    )
    chosen = analysis.select_solution(samples, plan, problem)
    _write(cfg.out / "assignment.json", json.dumps(chosen.to_dict(plan), indent=2) + "\n")
    rows = analysis.density_report(chosen, plan)
    _write(cfg.out / "density.csv", analysis.density_csv(rows))
    print(f"sampler={samples.sampler} records={len(samples)} best_energy={samples.first.energy:.9g}")
    notation = ", ".join(f"C{i + 1}=Q{i + 1}{j + 1}" for i, j in sorted(chosen.choices.items()))
    print(f"chosen: {notation}  energy={chosen.energy:.9g} cost={chosen.total_cost:.9g}")
    flagged = [r.segment for r in rows if r.flag]
    if flagged:
        print(f"congested segments (density >= {analysis.CONGESTION_THRESHOLD}): {flagged}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    scenario, plan, _ = _prepare(cfg)
    report = analysis.compare_models(scenario, cfg.sampler, seeds=[cfg.seed], params=cfg.anneal, plan=plan)
    _write(cfg.out / "comparison.csv", analysis.comparison_csv(report))
    print(f"{'model':<10}{'cost':>14}{'improve %':>12}{'max dens':>10}{'mean dens':>11}")
    for r in report.rows:
        print(f"{r.model:<10}{r.cost:>14.6g}{r.improvement_pct:>12.3f}{r.max_density:>10.3g}{r.mean_density:>11.4f}")
    print(f"({report.note})")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "solve": cmd_solve, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg)
    except NoValidSolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (ScenarioError, InfeasibleRoutesError, ProblemTooLargeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
