"""Simulation substrate: clock, airport layout graph, parking and travel times."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import networkx as nx

TICK_SECONDS = 5
TICKS_PER_MINUTE = 60 // TICK_SECONDS

NODE_KINDS = frozenset({
    "taxi_entry", "taxi_exit", "taxi_waypoint", "parking_civilian", "parking_military",
    "oc_office", "gse_parking", "drop_off_civilian", "drop_off_military", "ground_tower",
    "movcon_post", "mil_coord_post", "road",
})

LAYOUT_VERSION = 1


class InvalidParameter(ValueError):
    pass


class LayoutError(ValueError):
    pass


@dataclass
class SimClock:
    tick: int = 0
    tick_duration: int = TICK_SECONDS

    def advance(self, n: int = 1) -> None:
        if n < 0:
            raise InvalidParameter("clock cannot run backwards")
        self.tick += n

    @property
    def seconds(self) -> int:
        return self.tick * self.tick_duration


def travel_ticks(distance: float, speed_kmh: float, tick_seconds: int = TICK_SECONDS) -> int:
    """Whole ticks needed to cover `distance` metres at `speed_kmh`, rounded up."""
    if speed_kmh <= 0:
        raise InvalidParameter(f"speed must be positive, got {speed_kmh}")
    if distance < 0:
        raise InvalidParameter(f"distance must be non-negative, got {distance}")
    seconds = distance / (speed_kmh * 1000.0 / 3600.0)
    # guard against 12.000000001-style float noise before the ceiling
    return math.ceil(round(seconds / tick_seconds, 9))


def duration_ticks(seconds: float, tick_seconds: int = TICK_SECONDS) -> int:
    return math.ceil(round(seconds / tick_seconds, 9))


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float
    kind: str


@dataclass
class LayoutGraph:
    nodes: dict[str, Node]
    edges: list[tuple[str, str, float]]
    taxi_routes: dict[tuple[str, str], list[str]]
    _dist: dict[str, dict[str, float]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.validate()
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for a, b, w in self.edges:
            g.add_edge(a, b, weight=w)
        self._dist = {k: dict(v) for k, v in nx.all_pairs_dijkstra_path_length(g)}
        self._edge_len = {}
        for a, b, w in self.edges:
            self._edge_len[(a, b)] = w
            self._edge_len[(b, a)] = w

    def validate(self) -> None:
        for n in self.nodes.values():
            if n.kind not in NODE_KINDS:
                raise LayoutError(f"node {n.id}: unknown kind {n.kind!r}")
        for a, b, w in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise LayoutError(f"edge {a}-{b} references unknown node")
            if w <= 0:
                raise LayoutError(f"edge {a}-{b} has non-positive length {w}")
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((a, b) for a, b, _ in self.edges)
        if not nx.is_connected(g):
            raise LayoutError("layout graph is not connected")
        entry, exit_ = self.node_of_kind("taxi_entry"), self.node_of_kind("taxi_exit")
        for spot in self.parking_nodes():
            if (entry, spot) not in self.taxi_routes:
                raise LayoutError(f"no taxi route {entry} -> {spot}")
            if (spot, exit_) not in self.taxi_routes:
                raise LayoutError(f"no taxi route {spot} -> {exit_}")
        for (a, b), seq in self.taxi_routes.items():
            if seq[0] != a or seq[-1] != b:
                raise LayoutError(f"route {a}->{b} does not start/end at its endpoints")
            for u, v in zip(seq, seq[1:]):
                if not g.has_edge(u, v):
                    raise LayoutError(f"route {a}->{b} uses missing edge {u}-{v}")

    def node_of_kind(self, kind: str) -> str:
        found = sorted(n.id for n in self.nodes.values() if n.kind == kind)
        if not found:
            raise LayoutError(f"layout has no {kind} node")
        return found[0]

    def parking_nodes(self, kind: Optional[str] = None) -> list[str]:
        kinds = {"civilian": ("parking_civilian",), "military": ("parking_military",),
                 None: ("parking_civilian", "parking_military")}[kind]
        return sorted(n.id for n in self.nodes.values() if n.kind in kinds)

    def distance(self, a: str, b: str) -> float:
        return self._dist[a][b]

    def route_length(self, a: str, b: str) -> float:
        seq = self.taxi_routes[(a, b)]
        return sum(self._edge_len[(u, v)] for u, v in zip(seq, seq[1:]))

    @property
    def entry(self) -> str:
        return self.node_of_kind("taxi_entry")

    @property
    def exit(self) -> str:
        return self.node_of_kind("taxi_exit")


def layout_from_dict(doc: dict) -> LayoutGraph:
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise LayoutError(f"unsupported layout_version {doc.get('layout_version')!r}")
    nodes = {n["id"]: Node(n["id"], float(n["x"]), float(n["y"]), n["kind"]) for n in doc["nodes"]}
    edges = [(e["a"], e["b"], float(e["length"])) for e in doc["edges"]]
    routes = {(r["from"], r["to"]): list(r["nodes"]) for r in doc["routes"]}
    return LayoutGraph(nodes, edges, routes)


def load_layout(path: Optional[str | Path] = None) -> LayoutGraph:
    if path is None:
        text = resources.files("reliefsim.data").joinpath("layout_default.json").read_text()
    else:
        text = Path(path).read_text()
    return layout_from_dict(json.loads(text))


@dataclass
class ParkingSpot:
    node: str
    kind: str  # "civilian" | "military"
    occupant: Optional[str] = None


class ParkingRegistry:
    def __init__(self, layout: LayoutGraph):
        self.spots: dict[str, ParkingSpot] = {}
        for node in layout.parking_nodes("civilian"):
            self.spots[node] = ParkingSpot(node, "civilian")
        for node in layout.parking_nodes("military"):
            self.spots[node] = ParkingSpot(node, "military")
        self._held: dict[str, str] = {}

    def free(self, kind: str) -> list[str]:
        return [s.node for s in self.spots.values() if s.kind == kind and s.occupant is None]

    def occupy(self, node: str, aircraft_id: str) -> None:
        spot = self.spots[node]
        if spot.occupant is not None:
            raise ValueError(f"spot {node} already occupied by {spot.occupant}")
        if aircraft_id in self._held:
            raise ValueError(f"{aircraft_id} already holds spot {self._held[aircraft_id]}")
        spot.occupant = aircraft_id
        self._held[aircraft_id] = node

    def release(self, aircraft_id: str) -> None:
        node = self._held.pop(aircraft_id)
        self.spots[node].occupant = None

    def spot_of(self, aircraft_id: str) -> Optional[str]:
        return self._held.get(aircraft_id)


def assign_parking(ac_kind: str, registry: ParkingRegistry, oc_office_node: str,
                   layout: LayoutGraph) -> Optional[str]:
    """Nearest free stand of the aircraft's own kind, else of the other kind, else None."""
    other = "military" if ac_kind == "civilian" else "civilian"
    for kind in (ac_kind, other):
        free = registry.free(kind)
        if free:
            return min(free, key=lambda n: (layout.distance(oc_office_node, n), n))
    return None
