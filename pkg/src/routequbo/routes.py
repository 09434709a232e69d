"""Candidate routes per vehicle and the segment -> route incidence map."""

from __future__ import annotations

import heapq
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType

from .network import RoadNetwork, Scenario


class InfeasibleRoutesError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateRoute:
    vehicle: int
    option: int
    segments: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class RoutePlan:
    network: RoadNetwork
    routes: tuple[tuple[CandidateRoute, ...], ...]
    incidence: Mapping[int, frozenset[tuple[int, int]]]

    @property
    def n_vehicles(self) -> int:
        return len(self.routes)

    @property
    def k(self) -> int:
        return len(self.routes[0]) if self.routes else 0

    def route(self, i: int, j: int) -> CandidateRoute:
        return self.routes[i][j]

    def all_routes(self) -> list[CandidateRoute]:
        """Routes in canonical variable order (vehicle-major)."""
        return [r for per_vehicle in self.routes for r in per_vehicle]


def route_weight(route: Sequence[int], network: RoadNetwork) -> float:
    total = 0.0
    for seg_id in route:
        if not network.has_segment(seg_id):
            raise KeyError(f"unknown segment id {seg_id!r}")
        total += network.segments[seg_id].weight
    return total


def build_incidence(routes, network: RoadNetwork | None = None) -> Mapping[int, frozenset[tuple[int, int]]]:
    """Map each segment id to the set of (vehicle, option) pairs whose route crosses it.

    With ``network`` given, every segment of the network gets an entry,
    empty when no route uses it.
    """
    members: dict[int, set[tuple[int, int]]] = {}
    if network is not None:
        members = {s.id: set() for s in network.segments}
    for r in routes:
        for seg_id in r.segments:
            members.setdefault(seg_id, set()).add((r.vehicle, r.option))
    return MappingProxyType({m: frozenset(v) for m, v in sorted(members.items())})


def make_plan(network: RoadNetwork, paths: Sequence[Sequence[Sequence[int]]]) -> RoutePlan:
    """Wrap per-vehicle segment lists into a RoutePlan, computing weights and incidence."""
    routes = tuple(
        tuple(
            CandidateRoute(i, j, tuple(p), route_weight(p, network))
            for j, p in enumerate(per_vehicle)
        )
        for i, per_vehicle in enumerate(paths)
    )
    if len({len(rs) for rs in routes}) > 1:
        raise ValueError("every vehicle needs the same number of candidate routes")
    flat = [r for rs in routes for r in rs]
    return RoutePlan(network, routes, build_incidence(flat, network))


def generate_routes(scenario: Scenario) -> RoutePlan:
    net = scenario.network
    paths = []
    for veh in scenario.vehicles:
        explicit = scenario.explicit_routes.get(veh.id)
        if explicit is not None:
            paths.append([list(p) for p in explicit])
            continue
        found = k_shortest_paths(net, veh.origin, veh.destination, scenario.k)
        if len(found) < scenario.k:
            raise InfeasibleRoutesError(
                f"vehicle {veh.id}: only {len(found)} distinct paths from "
                f"{veh.origin!r} to {veh.destination!r}, need k={scenario.k}"
            )
        paths.append(found)
    return make_plan(net, paths)


def _path_key(network: RoadNetwork, path: Sequence[int]) -> tuple[float, tuple[int, ...]]:
    return route_weight(path, network), tuple(path)


def _shortest_path(network, source, target, banned_segments, banned_nodes):
    """Lexicographically-least (weight, segment ids) path, or None.

    Positive weights mean no path is a prefix of another path to the same
    node, so the first time a node is popped its label is final under the
    combined key as well as under plain weight.
    """
    heap = [(0.0, (), source)]
    done = set()
    while heap:
        cost, path, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            return list(path)
        for seg in network.outgoing[node]:
            nxt = seg.to_node
            if seg.id in banned_segments or nxt in banned_nodes or nxt in done:
                continue
            heapq.heappush(heap, (cost + seg.weight, path + (seg.id,), nxt))
    return None


def k_shortest_paths(network: RoadNetwork, origin: str, destination: str, k: int) -> list[list[int]]:
    """Up to ``k`` loopless origin->destination paths, ascending by (weight, segment ids).

    Yen's algorithm. Paths never revisit a node, so they never repeat a segment.
    """
    if origin == destination or k < 1:
        return []
    first = _shortest_path(network, origin, destination, frozenset(), frozenset())
    if first is None:
        return []
    accepted = [first]
    candidates: list[tuple[float, tuple[int, ...]]] = []
    queued = {tuple(first)}
    segs = network.segments
    while len(accepted) < k:
        last = accepted[-1]
        nodes_on_last = [origin] + [segs[s].to_node for s in last]
        for idx in range(len(last)):
            spur_node = nodes_on_last[idx]
            root = last[:idx]
            banned_segments = {p[idx] for p in accepted if len(p) > idx and p[:idx] == root}
            banned_nodes = frozenset(nodes_on_last[:idx])
            spur = _shortest_path(network, spur_node, destination, banned_segments, banned_nodes)
            if spur is None:
                continue
            full = tuple(root + spur)
            if full not in queued:
                queued.add(full)
                heapq.heappush(candidates, _path_key(network, full))
        if not candidates:
            break
        _, best = heapq.heappop(candidates)
        accepted.append(list(best))
    return accepted


def total_route_length(plan: RoutePlan) -> int:
    return sum(len(r.segments) for r in plan.all_routes())


def plan_is_consistent(plan: RoutePlan) -> bool:
    """Incidence equals the inverse of route membership and weights are exact sums."""
    rebuilt = build_incidence(plan.all_routes(), plan.network)
    if dict(rebuilt) != dict(plan.incidence):
        return False
    return all(r.weight == route_weight(r.segments, plan.network) for r in plan.all_routes())
