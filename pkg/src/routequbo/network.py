"""Road networks, vehicles and routing scenarios.

Scenarios are read from a small JSON format::

    {
      "nodes": ["A", "C", ...],
      "segments": [{"id": 0, "from": "A", "to": "C", "weight": 1.0}, ...],
      "vehicles": [{"id": 0, "origin": "A", "destination": "B"}, ...],
      "k": 3,
      "routes": {"0": [[0, 2, 4], ...]},      # optional
      "cost_mode": "weighted",                # or "density"
      "penalty": "auto"                       # or a positive number
    }

Segments are directed and their ids are dense 0-based integers, so they can
be used as array indices. Everything here is immutable once loaded.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Union

COST_MODES = ("weighted", "density")

Penalty = Union[str, float]


class ScenarioError(ValueError):
    """Base class for problems with a scenario file."""


class ScenarioParseError(ScenarioError):
    """The file could not be read or is not valid JSON."""


class ScenarioValidationError(ScenarioError):
    """The scenario parsed but violates an invariant."""


@dataclass(frozen=True)
class Segment:
    id: int
    from_node: str
    to_node: str
    weight: float

    def __post_init__(self):
        if not (self.weight >= 1):
            raise ScenarioValidationError(f"segment {self.id} weight {self.weight} < 1")


@dataclass(frozen=True)
class Vehicle:
    id: int
    origin: str
    destination: str


@dataclass(frozen=True)
class RoadNetwork:
    nodes: tuple[str, ...]
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "segments", tuple(self.segments))
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ScenarioValidationError("duplicate node identifiers")
        for pos, seg in enumerate(self.segments):
            if seg.id != pos:
                raise ScenarioValidationError(
                    f"segment ids must be dense and ordered: position {pos} has id {seg.id}"
                )
            for end in (seg.from_node, seg.to_node):
                if end not in known:
                    raise ScenarioValidationError(f"segment {seg.id} references unknown node {end!r}")

    @cached_property
    def outgoing(self) -> Mapping[str, tuple[Segment, ...]]:
        out: dict[str, list[Segment]] = {n: [] for n in self.nodes}
        for seg in self.segments:
            out[seg.from_node].append(seg)
        return MappingProxyType({n: tuple(s) for n, s in out.items()})

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(s.weight for s in self.segments)

    def has_segment(self, seg_id) -> bool:
        return isinstance(seg_id, int) and not isinstance(seg_id, bool) and 0 <= seg_id < len(self.segments)


@dataclass(frozen=True)
class Scenario:
    network: RoadNetwork
    vehicles: tuple[Vehicle, ...]
    k: int
    explicit_routes: Mapping[int, tuple[tuple[int, ...], ...]] = field(default_factory=dict)
    cost_mode: str = "weighted"
    penalty: Penalty = "auto"

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        routes = {int(v): tuple(tuple(r) for r in rs) for v, rs in dict(self.explicit_routes).items()}
        object.__setattr__(self, "explicit_routes", MappingProxyType(routes))
        _validate_scenario(self)

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    def with_overrides(self, cost_mode: str | None = None, penalty: Penalty | None = None) -> "Scenario":
        return Scenario(
            network=self.network,
            vehicles=self.vehicles,
            k=self.k,
            explicit_routes=self.explicit_routes,
            cost_mode=self.cost_mode if cost_mode is None else cost_mode,
            penalty=self.penalty if penalty is None else penalty,
        )


def validate_route(network: RoadNetwork, route: Sequence[int], origin: str, destination: str) -> bool:
    """True iff ``route`` is a directed origin->destination walk using each segment at most once."""
    if not route:
        return False
    if any(not network.has_segment(s) for s in route):
        return False
    if len(set(route)) != len(route):
        return False
    here = origin
    for seg_id in route:
        seg = network.segments[seg_id]
        if seg.from_node != here:
            return False
        here = seg.to_node
    return here == destination


def _validate_scenario(sc: Scenario) -> None:
    net = sc.network
    known = set(net.nodes)
    if isinstance(sc.k, bool) or not isinstance(sc.k, int) or sc.k < 1:
        raise ScenarioValidationError(f"k must be an integer >= 1, got {sc.k!r}")
    if sc.cost_mode not in COST_MODES:
        raise ScenarioValidationError(f"cost_mode must be one of {COST_MODES}, got {sc.cost_mode!r}")
    if sc.penalty != "auto":
        if isinstance(sc.penalty, bool) or not isinstance(sc.penalty, (int, float)):
            raise ScenarioValidationError(f"penalty must be 'auto' or a number, got {sc.penalty!r}")
        if not (math.isfinite(sc.penalty) and sc.penalty > 0):
            raise ScenarioValidationError(f"penalty must be positive, got {sc.penalty!r}")
    for pos, v in enumerate(sc.vehicles):
        if v.id != pos:
            raise ScenarioValidationError(f"vehicle ids must be dense and ordered: position {pos} has id {v.id}")
        for end in (v.origin, v.destination):
            if end not in known:
                raise ScenarioValidationError(f"vehicle {v.id} references unknown node {end!r}")
        if v.origin == v.destination:
            raise ScenarioValidationError(f"vehicle {v.id} origin equals destination {v.origin!r}")
    for vid, routes in sc.explicit_routes.items():
        if not 0 <= vid < len(sc.vehicles):
            raise ScenarioValidationError(f"routes given for unknown vehicle {vid}")
        if len(routes) != sc.k:
            raise ScenarioValidationError(f"vehicle {vid} has {len(routes)} explicit routes, expected k={sc.k}")
        veh = sc.vehicles[vid]
        seen = set()
        for j, route in enumerate(routes):
            for s in route:
                if not net.has_segment(s):
                    raise ScenarioValidationError(f"vehicle {vid} route {j} references unknown segment {s!r}")
            if not validate_route(net, route, veh.origin, veh.destination):
                raise ScenarioValidationError(
                    f"vehicle {vid} route {j} is not a path from {veh.origin!r} to {veh.destination!r}"
                )
            key = frozenset(route)
            if key in seen:
                raise ScenarioValidationError(f"vehicle {vid} route {j} duplicates an earlier route")
            seen.add(key)


# -- JSON (de)serialisation --------------------------------------------------

_TOP_KEYS = {"nodes", "segments", "vehicles", "k", "routes", "cost_mode", "penalty"}
_REQUIRED = ("nodes", "segments", "vehicles", "k")


def _check_keys(obj, allowed: Iterable[str], required: Iterable[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioValidationError(f"{where} must be an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioValidationError(f"{where}: unknown key {unknown[0]!r}")
    for key in required:
        if key not in obj:
            raise ScenarioValidationError(f"{where}: missing key {key!r}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioValidationError(f"{where} must be an integer, got {value!r}")
    return value


def _as_str(value, where: str) -> str:
    if not isinstance(value, str):
        raise ScenarioValidationError(f"{where} must be a string, got {value!r}")
    return value


def scenario_from_dict(data) -> Scenario:
    _check_keys(data, _TOP_KEYS, _REQUIRED, "scenario")
    if not isinstance(data["nodes"], list):
        raise ScenarioValidationError("nodes must be an array")
    nodes = tuple(_as_str(n, "node") for n in data["nodes"])

    segments = []
    for pos, raw in enumerate(_as_list(data["segments"], "segments")):
        _check_keys(raw, {"id", "from", "to", "weight"}, ("id", "from", "to", "weight"), f"segment at {pos}")
        seg_id = _as_int(raw["id"], f"segment at {pos} id")
        weight = raw["weight"]
        if isinstance(weight, bool) or not isinstance(weight, (int, float)):
            raise ScenarioValidationError(f"segment {seg_id} weight must be a number")
        segments.append(
            Segment(seg_id, _as_str(raw["from"], "from"), _as_str(raw["to"], "to"), float(weight))
        )
    network = RoadNetwork(nodes, tuple(segments))

    vehicles = []
    for pos, raw in enumerate(_as_list(data["vehicles"], "vehicles")):
        _check_keys(raw, {"id", "origin", "destination"}, ("id", "origin", "destination"), f"vehicle at {pos}")
        vehicles.append(
            Vehicle(
                _as_int(raw["id"], f"vehicle at {pos} id"),
                _as_str(raw["origin"], "origin"),
                _as_str(raw["destination"], "destination"),
            )
        )

    routes: dict[int, tuple[tuple[int, ...], ...]] = {}
    raw_routes = data.get("routes", {})
    if not isinstance(raw_routes, dict):
        raise ScenarioValidationError("routes must be an object")
    for key, paths in raw_routes.items():
        try:
            vid = int(key)
        except ValueError:
            raise ScenarioValidationError(f"routes key {key!r} is not a vehicle id") from None
        routes[vid] = tuple(
            tuple(_as_int(s, f"vehicle {vid} route segment") for s in _as_list(p, f"vehicle {vid} route"))
            for p in _as_list(paths, f"vehicle {vid} routes")
        )

    penalty = data.get("penalty", "auto")
    if isinstance(penalty, int) and not isinstance(penalty, bool):
        penalty = float(penalty)

    return Scenario(
        network=network,
        vehicles=tuple(vehicles),
        k=_as_int(data["k"], "k"),
        explicit_routes=routes,
        cost_mode=data.get("cost_mode", "weighted"),
        penalty=penalty,
    )


def _as_list(value, where: str) -> list:
    if not isinstance(value, list):
        raise ScenarioValidationError(f"{where} must be an array")
    return value


def scenario_to_dict(sc: Scenario) -> dict:
    out = {
        "nodes": list(sc.network.nodes),
        "segments": [
            {"id": s.id, "from": s.from_node, "to": s.to_node, "weight": s.weight} for s in sc.network.segments
        ],
        "vehicles": [{"id": v.id, "origin": v.origin, "destination": v.destination} for v in sc.vehicles],
        "k": sc.k,
        "cost_mode": sc.cost_mode,
        "penalty": sc.penalty,
    }
    if sc.explicit_routes:
        out["routes"] = {
            str(vid): [list(r) for r in rs] for vid, rs in sorted(sc.explicit_routes.items())
        }
    return out


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"malformed scenario {path}: {exc}") from exc
    return scenario_from_dict(data)


def dump_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n", encoding="utf-8")
