"""Samplers for QuboProblem: two exact enumerators and simulated annealing."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .qubo import QuboProblem, energies, energy
from .routes import RoutePlan

EXHAUSTIVE_MAX_VARS = 24
ENUMERATION_MAX_STATES = 10**7
ENUMERATION_MAX_RECORDS = 10_000
EXTRA_LEVELS = 9
_CHUNK = 1 << 16


class ProblemTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    bits: tuple[int, ...]
    energy: float
    occurrences: int = 1

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))


def _record_key(r: SampleRecord):
    return (r.energy, -r.occurrences, r.bits)


@dataclass(frozen=True)
class SampleSet:
    records: tuple[SampleRecord, ...]
    sampler: str
    num_reads: int
    seed: int | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(sorted(self.records, key=_record_key)))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def first(self) -> SampleRecord:
        return self.records[0]

    @classmethod
    def from_bits(cls, problem: QuboProblem, bits, sampler: str, seed=None, info=None) -> "SampleSet":
        """Deduplicate raw sample rows, counting occurrences and recomputing energies."""
        counts = Counter(tuple(int(b) for b in row) for row in np.asarray(bits))
        records = [SampleRecord(b, energy(problem, b), c) for b, c in counts.items()]
        return cls(tuple(records), sampler, int(sum(counts.values())), seed, dict(info or {}))

    def to_dict(self) -> dict:
        return {
            "sampler": self.sampler,
            "num_reads": self.num_reads,
            "seed": self.seed,
            "records": [
                {"bits": r.bitstring, "energy": r.energy, "occurrences": r.occurrences} for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        records = tuple(
            SampleRecord(tuple(int(c) for c in r["bits"]), float(r["energy"]), int(r["occurrences"]))
            for r in data["records"]
        )
        return cls(records, data["sampler"], int(data["num_reads"]), data.get("seed"))


def _index_bits(indices: np.ndarray, n: int) -> np.ndarray:
    # variable 0 is the most significant bit, so index order is lexicographic bit order
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(np.int8)


def solve_exhaustive(problem: QuboProblem) -> SampleSet:
    """Every minimum-energy assignment plus one representative of each of the next nine levels."""
    n = problem.n_vars
    if n > EXHAUSTIVE_MAX_VARS:
        raise ProblemTooLargeError(f"exhaustive search capped at {EXHAUSTIVE_MAX_VARS} variables, got {n}")
    total = 1 << n
    ground_level = None
    ground: list[int] = []
    levels: dict[float, int] = {}  # rounded energy -> first (lexicographically least) index
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        e = np.round(energies(problem, _index_bits(idx, n)), 9)
        lo = e.min()
        if ground_level is None or lo < ground_level:
            ground_level, ground = lo, []
        if lo == ground_level:
            ground.extend(idx[e == lo].tolist())
        uniq, first = np.unique(e, return_index=True)
        for level, pos in zip(uniq[: EXTRA_LEVELS + 1], first[: EXTRA_LEVELS + 1]):
            levels.setdefault(float(level), int(idx[pos]))
        levels = dict(sorted(levels.items())[: EXTRA_LEVELS + 1])
    chosen = list(ground)
    chosen += [i for lvl, i in sorted(levels.items()) if lvl != ground_level][:EXTRA_LEVELS]
    bits = _index_bits(np.array(chosen, dtype=np.int64), n)
    records = [SampleRecord(tuple(int(b) for b in row), energy(problem, row.tolist()), 1) for row in bits]
    return SampleSet(tuple(records), "exhaustive", len(records), None)


def one_hot_bits(choices: np.ndarray, k: int) -> np.ndarray:
    """Rows of per-vehicle option indices -> rows of one-hot bits."""
    choices = np.asarray(choices)
    m, n = choices.shape
    bits = np.zeros((m, n * k), dtype=np.int8)
    cols = choices + np.arange(n) * k
    bits[np.arange(m)[:, None], cols] = 1
    return bits


def solve_valid_enumeration(problem: QuboProblem, plan: RoutePlan) -> SampleSet:
    """Rank all k**n one-hot-per-vehicle assignments (best 10,000 kept)."""
    n, k = plan.n_vehicles, plan.k
    if n * k != problem.n_vars:
        raise ValueError("plan and problem disagree on the number of variables")
    total = k**n
    if total > ENUMERATION_MAX_STATES:
        raise ProblemTooLargeError(f"feasible enumeration capped at {ENUMERATION_MAX_STATES} states, got {total}")
    kept_e = []
    kept_idx = []
    radix = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        choices = (idx[:, None] // radix) % k
        e = energies(problem, one_hot_bits(choices, k))
        kept_e.append(e)
        kept_idx.append(idx)
    e = np.concatenate(kept_e)
    idx = np.concatenate(kept_idx)
    if len(e) > ENUMERATION_MAX_RECORDS:
        cut = np.partition(e, ENUMERATION_MAX_RECORDS - 1)[ENUMERATION_MAX_RECORDS - 1]
        keep = e <= cut
        e, idx = e[keep], idx[keep]
    choices = (idx[:, None] // radix) % k
    bits = one_hot_bits(choices, k)
    records = [SampleRecord(tuple(int(b) for b in row), energy(problem, row.tolist()), 1) for row in bits]
    records.sort(key=_record_key)
    records = records[:ENUMERATION_MAX_RECORDS]
    return SampleSet(tuple(records), "enumerate", len(records), None, {"enumerated": total})


# -- simulated annealing --------------------------------------------------------

@dataclass(frozen=True)
class AnnealParams:
    num_reads: int = 50
    sweeps: int = 1000
    initial_temperature: float | None = None
    final_temperature: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        t0, t1 = self.initial_temperature, self.final_temperature
        for t in (t0, t1):
            if t is not None and not t > 0:
                raise ValueError("temperatures must be positive")
        if t0 is not None and t1 is not None and not t0 > t1:
            raise ValueError("initial temperature must exceed final temperature")


def _couplings(problem: QuboProblem):
    """Diagonal plus symmetric neighbour lists in CSR form (indptr, indices, data)."""
    n = problem.n_vars
    diag = np.zeros(n)
    nbrs: list[dict[int, float]] = [{} for _ in range(n)]
    for (a, b), v in problem.coefficients.items():
        if a == b:
            diag[a] += v
        else:
            nbrs[a][b] = nbrs[a].get(b, 0.0) + v
            nbrs[b][a] = nbrs[b].get(a, 0.0) + v
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(d) for d in nbrs])
    indices = np.array([b for d in nbrs for b in sorted(d)], dtype=np.int64)
    data = np.array([d[b] for d in nbrs for b in sorted(d)], dtype=float)
    return diag, indptr, indices, data


@njit(cache=True)
def _local_fields(x, diag, indptr, indices, data):
    # field[a] = diag[a] + sum_b J[a, b] x[b]; flipping a changes energy by (1 - 2 x[a]) * field[a]
    n = x.shape[0]
    f = diag.copy()
    for a in range(n):
        for p in range(indptr[a], indptr[a + 1]):
            f[a] += data[p] * x[indices[p]]
    return f


@njit(cache=True)
def _anneal_chain(x, uniforms, betas, diag, indptr, indices, data):
    n = x.shape[0]
    field = _local_fields(x, diag, indptr, indices, data)
    for s in range(betas.shape[0]):
        beta = betas[s]
        for a in range(n):
            step = 1.0 - 2.0 * x[a]
            dE = step * field[a]
            if dE <= 0.0 or uniforms[s, a] < np.exp(-beta * dE):
                x[a] += step
                for p in range(indptr[a], indptr[a + 1]):
                    field[indices[p]] += step * data[p]
    return x


def auto_temperatures(problem: QuboProblem, seed: int = 0, probes: int = 64) -> tuple[float, float]:
    """Hot end: largest single-flip |dE| seen from random states. Cold end: 1% of the smallest |Q| entry."""
    mags = [abs(v) for v in problem.coefficients.values() if v != 0]
    if not mags:
        return 1.0, 0.01
    cold = 0.01 * min(mags)
    coupling = _couplings(problem)
    rng = np.random.default_rng([seed, 1])
    x = rng.integers(0, 2, size=(probes, problem.n_vars)).astype(float)
    hot = max(float(np.abs(_local_fields(row, *coupling)).max()) for row in x)
    if hot <= cold:
        hot = 100.0 * cold
    return hot, cold


def temperature_schedule(t_hot: float, t_cold: float, sweeps: int) -> np.ndarray:
    if sweeps == 1:
        return np.array([t_cold])
    return np.geomspace(t_hot, t_cold, sweeps)


def solve_annealing(problem: QuboProblem, params: AnnealParams | None = None) -> SampleSet:
    """Single-flip Metropolis annealing, one independent chain per read.

    Read ``r`` draws its start state and acceptance numbers from its own
    generator seeded with ``seed + r``, so a read's outcome does not depend
    on ``num_reads``.
    """
    params = params or AnnealParams()
    n = problem.n_vars
    if n < 1:
        raise ValueError("problem has no variables")
    t_hot, t_cold = auto_temperatures(problem, params.seed)
    if params.initial_temperature is not None:
        t_hot = params.initial_temperature
    if params.final_temperature is not None:
        t_cold = params.final_temperature
    if not t_hot > t_cold:
        raise ValueError(f"initial temperature {t_hot} must exceed final temperature {t_cold}")
    betas = 1.0 / temperature_schedule(t_hot, t_cold, params.sweeps)

    coupling = _couplings(problem)
    out = np.empty((params.num_reads, n), dtype=np.int8)
    for r in range(params.num_reads):
        rng = np.random.default_rng(params.seed + r)
        x = rng.integers(0, 2, size=n).astype(float)
        uniforms = rng.random((params.sweeps, n))
        out[r] = _anneal_chain(x, uniforms, betas, *coupling)

    info = {"initial_temperature": t_hot, "final_temperature": t_cold, "sweeps": params.sweeps}
    return SampleSet.from_bits(problem, out, "anneal", params.seed, info)


SAMPLERS = ("anneal", "exhaustive", "enumerate")


def run_sampler(name: str, problem: QuboProblem, plan: RoutePlan | None = None, params: AnnealParams | None = None):
    if name == "anneal":
        return solve_annealing(problem, params)
    if name == "exhaustive":
        return solve_exhaustive(problem)
    if name == "enumerate":
        if plan is None:
            raise ValueError("the enumerate sampler needs the route plan")
        return solve_valid_enumeration(problem, plan)
    raise ValueError(f"unknown sampler {name!r}; choose from {SAMPLERS}")
