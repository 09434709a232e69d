"""QUBO compilation of a route plan, energy evaluation and Ising conversion.

Variable ``i * k + j`` is 1 when vehicle ``i`` takes its option ``j``.
Coefficients are kept sparse and upper-triangular: ``{(a, b): value}`` with
``a <= b``; diagonal entries are the linear terms (``x**2 == x``).

The assembled objective is

    sum over segments m of (sum of c_ij * x_ij over routes crossing m) ** 2
      + K * sum over vehicles i of (sum_j x_ij - 1) ** 2

with ``c_ij`` the route weight (weighted mode) or 1 (density mode). The
``+1`` of each expanded constraint square is carried in ``offset``.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .routes import RoutePlan


@dataclass(frozen=True)
class QuboProblem:
    n_vars: int
    coefficients: Mapping[tuple[int, int], float]
    offset: float
    var_map: tuple[tuple[int, int], ...]
    penalty: float | None = None
    cost_mode: str | None = None

    def __post_init__(self):
        coeffs = {}
        for (a, b), v in sorted(dict(self.coefficients).items()):
            if not (0 <= a <= b < self.n_vars):
                raise ValueError(f"coefficient ({a}, {b}) outside upper triangle of a {self.n_vars}-variable problem")
            if v != 0:
                coeffs[(a, b)] = float(v)
        object.__setattr__(self, "coefficients", MappingProxyType(coeffs))
        object.__setattr__(self, "var_map", tuple(tuple(p) for p in self.var_map))
        if len(self.var_map) != self.n_vars or len(set(self.var_map)) != self.n_vars:
            raise ValueError("var_map must be a bijection onto the variable indices")

    @property
    def n_nonzero(self) -> int:
        return len(self.coefficients)

    def index_of(self, vehicle: int, option: int) -> int:
        return self.var_map.index((vehicle, option))

    def to_dense(self) -> np.ndarray:
        """Upper-triangular ``N x N`` array of the coefficients (offset excluded)."""
        q = np.zeros((self.n_vars, self.n_vars))
        for (a, b), v in self.coefficients.items():
            q[a, b] = v
        return q


def _canonical_var_map(n: int, k: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(k))


def _add(coeffs: dict, a: int, b: int, value: float) -> None:
    key = (a, b) if a <= b else (b, a)
    coeffs[key] = coeffs.get(key, 0.0) + value


def route_coefficient(weight: float, mode: str) -> float:
    if mode == "weighted":
        return weight
    if mode == "density":
        return 1.0
    raise ValueError(f"unknown cost mode {mode!r}")


def build_cost_terms(plan: RoutePlan, mode: str = "weighted") -> QuboProblem:
    n, k = plan.n_vehicles, plan.k
    var_map = _canonical_var_map(n, k)
    coeffs: dict[tuple[int, int], float] = {}
    for seg_id, members in plan.incidence.items():
        ordered = sorted(members)
        c = {m: route_coefficient(plan.route(*m).weight, mode) for m in ordered}
        for i, j in ordered:
            a = i * k + j
            _add(coeffs, a, a, c[(i, j)] ** 2)
        for p, q in combinations(ordered, 2):
            _add(coeffs, p[0] * k + p[1], q[0] * k + q[1], 2.0 * c[p] * c[q])
    return QuboProblem(n * k, coeffs, 0.0, var_map, cost_mode=mode)


def build_constraint_terms(n: int, k: int) -> QuboProblem:
    """One-hot penalty per vehicle, unscaled: each block expands (sum_j x_ij - 1)**2."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    coeffs: dict[tuple[int, int], float] = {}
    for i in range(n):
        block = range(i * k, (i + 1) * k)
        for a in block:
            coeffs[(a, a)] = -1.0
        for a, b in combinations(block, 2):
            coeffs[(a, b)] = 2.0
    return QuboProblem(n * k, coeffs, float(n), _canonical_var_map(n, k))


def assemble(cost: QuboProblem, constraint: QuboProblem, K: float) -> QuboProblem:
    if not K > 0:
        raise ValueError(f"penalty K must be positive, got {K!r}")
    if cost.n_vars != constraint.n_vars or cost.var_map != constraint.var_map:
        raise ValueError("cost and constraint parts disagree on variables")
    coeffs = dict(cost.coefficients)
    for (a, b), v in constraint.coefficients.items():
        coeffs[(a, b)] = coeffs.get((a, b), 0.0) + K * v
    return QuboProblem(
        cost.n_vars,
        coeffs,
        cost.offset + K * constraint.offset,
        cost.var_map,
        penalty=float(K),
        cost_mode=cost.cost_mode,
    )


def max_cost_bound(plan: RoutePlan, mode: str = "weighted") -> float:
    """Cost energy with every route selected at once; no assignment costs more."""
    total = 0.0
    for members in plan.incidence.values():
        s = sum(route_coefficient(plan.route(*m).weight, mode) for m in members)
        total += s * s
    return total


def auto_penalty(plan: RoutePlan, mode: str = "weighted") -> float:
    # A broken constraint costs at least K (integer penalty >= 1) while the
    # cost part spans at most [0, U], so K = 1 + U keeps every optimum feasible.
    return 1.0 + max_cost_bound(plan, mode)


def compile_plan(plan: RoutePlan, mode: str = "weighted", penalty="auto") -> QuboProblem:
    cost = build_cost_terms(plan, mode)
    constraint = build_constraint_terms(plan.n_vehicles, plan.k)
    K = auto_penalty(plan, mode) if penalty == "auto" else float(penalty)
    return assemble(cost, constraint, K)


def _check_bits(problem: QuboProblem, x) -> None:
    if len(x) != problem.n_vars:
        raise ValueError(f"assignment has length {len(x)}, problem has {problem.n_vars} variables")


def energy(problem: QuboProblem, x: Sequence[int]) -> float:
    _check_bits(problem, x)
    total = 0.0
    for (a, b), v in problem.coefficients.items():
        if x[a] and x[b]:
            total += v
    return total + problem.offset


def energies(problem: QuboProblem, X) -> np.ndarray:
    """Energies of the rows of a 2-D 0/1 array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != problem.n_vars:
        raise ValueError(f"expected shape (m, {problem.n_vars}), got {X.shape}")
    q = problem.to_dense()
    return np.einsum("ra,ab,rb->r", X, q, X) + problem.offset


def to_ising(problem: QuboProblem) -> tuple[np.ndarray, dict[tuple[int, int], float], float]:
    """Fields, couplings and constant of the equivalent spin model under ``x = (1 + s) / 2``."""
    h = np.zeros(problem.n_vars)
    J: dict[tuple[int, int], float] = {}
    const = problem.offset
    for (a, b), v in problem.coefficients.items():
        if a == b:
            h[a] += v / 2
            const += v / 2
        else:
            J[(a, b)] = J.get((a, b), 0.0) + v / 4
            h[a] += v / 4
            h[b] += v / 4
            const += v / 4
    return h, J, const


def ising_energy(h, J: Mapping[tuple[int, int], float], offset: float, s: Sequence[int]) -> float:
    total = offset + float(np.dot(h, s))
    for (a, b), v in J.items():
        total += v * s[a] * s[b]
    return total


# -- text export ----------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.9g}"


def format_qubo(problem: QuboProblem) -> str:
    lines = [f"p qubo {problem.n_vars} {problem.n_nonzero} {_fmt(problem.offset)}"]
    for (a, b), v in sorted(problem.coefficients.items()):
        lines.append(f"{a} {b} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_qubo(text: str, var_map=None) -> QuboProblem:
    lines = text.splitlines()
    head = lines[0].split()
    if head[:2] != ["p", "qubo"] or len(head) != 5:
        raise ValueError(f"bad header line: {lines[0]!r}")
    n, count, offset = int(head[2]), int(head[3]), float(head[4])
    coeffs = {}
    for line in lines[1:]:
        a, b, v = line.split()
        coeffs[(int(a), int(b))] = float(v)
    if len(coeffs) != count:
        raise ValueError(f"header announces {count} entries, found {len(coeffs)}")
    if var_map is None:
        var_map = tuple((a, 0) for a in range(n))
    return QuboProblem(n, coeffs, offset, var_map)


def var_map_json(problem: QuboProblem) -> str:
    body = {str(a): {"vehicle": i, "option": j} for a, (i, j) in enumerate(problem.var_map)}
    return json.dumps(body, indent=2) + "\n"


def write_qubo(problem: QuboProblem, path) -> tuple[Path, Path]:
    """Write ``path`` and a ``<stem>.varmap.json`` sidecar next to it."""
    path = Path(path)
    sidecar = path.with_name(path.stem + ".varmap.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_qubo(problem))
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(var_map_json(problem))
    return path, sidecar
