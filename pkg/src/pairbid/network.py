"""RAN substrate: topology, routing, CU/DU placement and power accounting.

Placement is a first-fit heuristic. Slices are placed one at a time in the
order given; each takes the DU node with the lowest added power that admits a
complete RU -> DU -> CU -> GW chain, then the cheapest CU node for that DU.
Because earlier slices are never revisited, placing ``B + [x]`` is the same as
placing ``B`` and then ``x``; :class:`Placer` exploits this for incremental
feasibility checks.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .exceptions import ConfigError, PreconditionError
from .model import NodeId, SliceSpec

EPS = 1e-9
Edge = tuple[NodeId, NodeId]
Path = tuple[NodeId, ...]


def edge_key(u: NodeId, v: NodeId) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class NodeSpec:
    id: NodeId
    cores: int = 8
    clock_ghz: float = 3.7
    compute_capacity: float = 537.6  # GFLOPS
    p_idle: float = 130.0  # W
    p_max: float = 870.0  # W
    roles: frozenset = frozenset({"RU", "DU", "CU"})

    def __post_init__(self):
        if not self.compute_capacity > 0:
            raise ConfigError(f"node {self.id}: compute capacity must be > 0")
        if not 0 <= self.p_idle <= self.p_max:
            raise ConfigError(f"node {self.id}: need 0 <= p_idle <= p_max")


@dataclass(frozen=True)
class LinkSpec:
    u: NodeId
    v: NodeId
    capacity: float = 100.0  # Gbps
    transponder_power: float = 110.4  # W
    propagation_delay_ms: float = 0.05

    def __post_init__(self):
        if self.u == self.v:
            raise ConfigError(f"self-loop on node {self.u}")
        if not self.capacity > 0:
            raise ConfigError(f"link {self.key}: capacity must be > 0")
        if self.propagation_delay_ms < 0 or self.transponder_power < 0:
            raise ConfigError(f"link {self.key}: delay and power must be >= 0")

    @property
    def key(self) -> Edge:
        return edge_key(self.u, self.v)


@dataclass(frozen=True)
class PowerParams:
    """Per-slice x-haul interface power (W)."""

    p_fronthaul: float = 18.2
    p_midhaul: float = 10.0
    p_backhaul: float = 1.0

    def __post_init__(self):
        if min(self.p_fronthaul, self.p_midhaul, self.p_backhaul) < 0:
            raise ConfigError("interface powers must be >= 0")

    @property
    def per_slice(self) -> float:
        return self.p_fronthaul + self.p_midhaul + self.p_backhaul


def default_edges(n_nodes: int) -> list[Edge]:
    """Ring over all nodes plus two chords across it (when they fit)."""
    if n_nodes == 2:
        return [(0, 1)]
    edges = [edge_key(i, (i + 1) % n_nodes) for i in range(n_nodes)]
    half = n_nodes // 2
    for a in (0, 2):
        b = a + half
        if b < n_nodes and abs(b - a) > 1 and edge_key(a, b) not in edges:
            edges.append(edge_key(a, b))
    return edges


@dataclass(frozen=True)
class GraphConfig:
    n_nodes: int = 10
    edges: tuple[Edge, ...] | None = None
    gateway: NodeId = 0
    node: Mapping = field(default_factory=dict)
    link: Mapping = field(default_factory=dict)
    node_overrides: Mapping[NodeId, Mapping] = field(default_factory=dict)
    link_overrides: Mapping[Edge, Mapping] = field(default_factory=dict)
    power: PowerParams = PowerParams()
    kappa: float = 20.0  # GFLOPS per Gbps, split evenly DU/CU
    switching_delay_ms: float = 0.1
    electricity_cost: float = 0.25  # currency per kWh


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    gateway: NodeId
    power: PowerParams = PowerParams()
    electricity_cost: float = 0.25
    kappa: float = 20.0
    switching_delay_ms: float = 0.1

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate node ids")
        if self.gateway not in ids:
            raise ConfigError(f"gateway {self.gateway} is not a node")
        if len(ids) < 2:
            raise ConfigError("need at least two nodes to separate the gateway")
        keys = [l.key for l in self.links]
        if len(set(keys)) != len(keys):
            raise ConfigError("duplicate links")
        for u, v in keys:
            if u not in self.node_map or v not in self.node_map:
                raise ConfigError(f"link ({u}, {v}) references an unknown node")
        if not self.kappa > 0 or self.switching_delay_ms < 0 or self.electricity_cost < 0:
            raise ConfigError("kappa must be > 0; delay and EC must be >= 0")
        if len(_bfs_dist(self.adjacency, ids[0], None)) != len(ids):
            raise ConfigError("graph is not connected")

    @cached_property
    def node_map(self) -> dict[NodeId, NodeSpec]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link_map(self) -> dict[Edge, LinkSpec]:
        return {l.key: l for l in self.links}

    @cached_property
    def adjacency(self) -> dict[NodeId, tuple[NodeId, ...]]:
        adj: dict[NodeId, list] = {n.id: [] for n in self.nodes}
        for l in self.links:
            adj[l.u].append(l.v)
            adj[l.v].append(l.u)
        return {k: tuple(sorted(v)) for k, v in adj.items()}

    @cached_property
    def _paths(self) -> dict[tuple[NodeId, NodeId], Path | None]:
        return {}

    def path(self, src: NodeId, dst: NodeId) -> Path | None:
        """Cached unconstrained :func:`shortest_path`."""
        key = (src, dst)
        if key not in self._paths:
            self._paths[key] = shortest_path(self, src, dst)
        return self._paths[key]

    def path_latency(self, path: Path) -> float:
        hops = len(path) - 1
        prop = sum(self.link_map[edge_key(a, b)].propagation_delay_ms
                   for a, b in zip(path, path[1:]))
        return prop + hops * self.switching_delay_ms


def build_graph(config: GraphConfig | None = None) -> NetworkGraph:
    """Materialise a :class:`NetworkGraph` from a config.

    Defaults reproduce the evaluation hardware: 537.6 GFLOPS nodes drawing
    130-870 W, and 100 Gbit/s links with 110.4 W transponders.
    """
    config = config or GraphConfig()
    if config.n_nodes < 2:
        raise ConfigError("need at least two nodes to separate the gateway")
    edges = config.edges if config.edges is not None else default_edges(config.n_nodes)
    node_ids = range(config.n_nodes)
    try:
        nodes = []
        for i in node_ids:
            kw = {**config.node, **config.node_overrides.get(i, {})}
            roles = set(kw.pop("roles", {"RU", "DU", "CU"}))
            if i == config.gateway:
                roles.add("GW")
            nodes.append(NodeSpec(id=i, roles=frozenset(roles), **kw))
        links = []
        for u, v in edges:
            kw = {**config.link, **config.link_overrides.get(edge_key(u, v), {})}
            links.append(LinkSpec(u=u, v=v, **kw))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return NetworkGraph(
        nodes=tuple(nodes),
        links=tuple(links),
        gateway=config.gateway,
        power=config.power,
        electricity_cost=config.electricity_cost,
        kappa=config.kappa,
        switching_delay_ms=config.switching_delay_ms,
    )


def _bfs_dist(adj, root, usable) -> dict[NodeId, int]:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in dist and (usable is None or usable(a, b)):
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def shortest_path(graph: NetworkGraph, src: NodeId, dst: NodeId, usable=None) -> Path | None:
    """Minimum-hop path from ``src`` to ``dst``.

    Among equal-hop paths the lexicographically smallest node sequence wins.
    ``usable(a, b)`` optionally filters links. Returns None if unreachable.
    """
    adj = graph.adjacency
    if src not in adj or dst not in adj:
        raise KeyError(f"unknown node in ({src}, {dst})")
    if src == dst:
        return (src,)
    # distances to dst, then walk forward taking the smallest admissible hop
    dist = _bfs_dist(adj, dst, None if usable is None else (lambda a, b: usable(b, a)))
    if src not in dist:
        return None
    path = [src]
    cur = src
    while cur != dst:
        cur = next(b for b in adj[cur]
                   if dist.get(b) == dist[cur] - 1 and (usable is None or usable(cur, b)))
        path.append(cur)
    return tuple(path)


@dataclass(frozen=True)
class PlacementResult:
    """Outcome of placing a list of bundles.

    Slice keys are positions in the flattened bundle order. ``routes`` holds
    the (fronthaul, midhaul, backhaul) node paths of each slice.
    """

    feasible: bool
    du_assignment: Mapping[int, NodeId]
    cu_assignment: Mapping[int, NodeId]
    routes: Mapping[int, tuple[Path, Path, Path]]
    p_net: float
    p_node: float
    node_load: Mapping[NodeId, float] = field(default_factory=dict)
    link_load: Mapping[Edge, float] = field(default_factory=dict)

    @property
    def power(self) -> float:
        return self.p_net + self.p_node


class Placer:
    """Incremental first-fit placement state."""

    def __init__(self, graph: NetworkGraph):
        self.graph = graph
        self.node_load: dict[NodeId, float] = {}
        self.link_load: dict[Edge, float] = {}
        self.specs: list[SliceSpec] = []
        self.du: list[NodeId] = []
        self.cu: list[NodeId] = []
        self.routes: list[tuple[Path, Path, Path]] = []

    def copy(self) -> "Placer":
        other = Placer.__new__(Placer)
        other.graph = self.graph
        other.node_load = dict(self.node_load)
        other.link_load = dict(self.link_load)
        other.specs = list(self.specs)
        other.du = list(self.du)
        other.cu = list(self.cu)
        other.routes = list(self.routes)
        return other

    def __len__(self):
        return len(self.du)

    # -- power -------------------------------------------------------------
    @property
    def p_node(self) -> float:
        total = 0.0
        for nid in sorted(self.node_load):
            load = self.node_load[nid]
            if load > 0:
                n = self.graph.node_map[nid]
                total += n.p_idle + (n.p_max - n.p_idle) * load / n.compute_capacity
        return total

    @property
    def p_net(self) -> float:
        links = self.graph.link_map
        total = len(self.du) * self.graph.power.per_slice
        for key in sorted(self.link_load):
            if self.link_load[key] > 0:
                total += links[key].transponder_power
        return total

    def _node_added(self, nid, gflops, node_load) -> float:
        n = self.graph.node_map[nid]
        dyn = (n.p_max - n.p_idle) * gflops / n.compute_capacity
        return dyn if node_load.get(nid, 0.0) > 0 else n.p_idle + dyn

    def _links_added(self, path: Path, link_load) -> float:
        links = self.graph.link_map
        return sum(links[k].transponder_power
                   for k in {edge_key(a, b) for a, b in zip(path, path[1:])}
                   if link_load.get(k, 0.0) <= 0)

    def _route(self, src, dst, traffic, link_load) -> Path | None:
        g = self.graph
        links = g.link_map

        def fits(a, b):
            k = edge_key(a, b)
            return link_load.get(k, 0.0) + traffic <= links[k].capacity + EPS

        path = g.path(src, dst)
        if path is None:
            return None
        if all(fits(a, b) for a, b in zip(path, path[1:])):
            return path
        return shortest_path(g, src, dst, fits)

    @staticmethod
    def _load_path(path: Path, traffic, link_load) -> dict:
        out = dict(link_load)
        for a, b in zip(path, path[1:]):
            k = edge_key(a, b)
            out[k] = out.get(k, 0.0) + traffic
        return out

    # -- placement -----------------------------------------------------------
    def place(self, spec: SliceSpec) -> bool:
        """Place one slice; mutate state and return True on success."""
        g = self.graph
        half = g.kappa * spec.traffic / 2.0
        candidates = []
        for n in g.nodes:
            if "DU" not in n.roles:
                continue
            if self.node_load.get(n.id, 0.0) + half > n.compute_capacity + EPS:
                continue
            fh = self._route(spec.origin, n.id, spec.traffic, self.link_load)
            if fh is None:
                continue
            added = self._node_added(n.id, half, self.node_load) + self._links_added(fh, self.link_load)
            candidates.append((added, n.id, fh))
        candidates.sort(key=lambda c: (c[0], c[1]))

        for _, du, fh in candidates:
            fh_lat = g.path_latency(fh)
            if fh_lat > spec.max_latency_ms + EPS:
                continue
            nl = dict(self.node_load)
            nl[du] = nl.get(du, 0.0) + half
            ll = self._load_path(fh, spec.traffic, self.link_load)
            best = None
            for n in g.nodes:
                if "CU" not in n.roles or nl.get(n.id, 0.0) + half > n.compute_capacity + EPS:
                    continue
                mh = self._route(du, n.id, spec.traffic, ll)
                if mh is None:
                    continue
                ll2 = self._load_path(mh, spec.traffic, ll)
                bh = self._route(n.id, g.gateway, spec.traffic, ll2)
                if bh is None:
                    continue
                if fh_lat + g.path_latency(mh) + g.path_latency(bh) > spec.max_latency_ms + EPS:
                    continue
                added = (self._node_added(n.id, half, nl)
                         + self._links_added(mh, ll)
                         + self._links_added(bh, ll2))
                key = (added, n.id)
                if best is None or key < best[0]:
                    best = (key, n.id, mh, bh, ll2)
            if best is None:
                continue
            _, cu, mh, bh, ll2 = best
            nl[cu] = nl.get(cu, 0.0) + half
            self.node_load = nl
            self.link_load = self._load_path(bh, spec.traffic, ll2)
            self.specs.append(spec)
            self.du.append(du)
            self.cu.append(cu)
            self.routes.append((fh, mh, bh))
            return True
        return False

    def remove(self, index: int) -> None:
        """Release a placed slice; the others keep their nodes and routes."""
        spec = self.specs.pop(index)
        du, cu = self.du.pop(index), self.cu.pop(index)
        routes = self.routes.pop(index)
        half = self.graph.kappa * spec.traffic / 2.0
        for nid in (du, cu):
            left = self.node_load[nid] - half
            if left > EPS:
                self.node_load[nid] = left
            else:
                del self.node_load[nid]
        for path in routes:
            for a, b in zip(path, path[1:]):
                k = edge_key(a, b)
                left = self.link_load[k] - spec.traffic
                if left > EPS:
                    self.link_load[k] = left
                else:
                    del self.link_load[k]

    def place_bundle(self, bundle: Iterable[SliceSpec]) -> bool:
        """Place every slice of ``bundle`` or none of them."""
        saved = self.copy()
        for spec in bundle:
            if not self.place(spec):
                self.__dict__.update(saved.__dict__)
                return False
        return True

    def result(self, feasible: bool = True) -> PlacementResult:
        return PlacementResult(
            feasible=feasible,
            du_assignment=dict(enumerate(self.du)),
            cu_assignment=dict(enumerate(self.cu)),
            routes=dict(enumerate(self.routes)),
            p_net=self.p_net,
            p_node=self.p_node,
            node_load=dict(self.node_load),
            link_load=dict(self.link_load),
        )


def check_placement(graph: NetworkGraph, bundles: Sequence[Sequence[SliceSpec]]) -> PlacementResult:
    """Place ``bundles`` in order; infeasibility is reported, not raised.

    On failure the result describes the slices placed before the first one
    that did not fit.
    """
    placer = Placer(graph)
    for bundle in bundles:
        for spec in bundle:
            if not placer.place(spec):
                return placer.result(feasible=False)
    return placer.result(feasible=True)


def validate_placement(graph: NetworkGraph, bundles: Sequence[Sequence[SliceSpec]],
                       result: PlacementResult) -> bool:
    """Independently re-check capacities, chain endpoints and latency."""
    specs = [s for b in bundles for s in b]
    if not result.feasible or len(result.du_assignment) != len(specs):
        return False
    node_load: dict[NodeId, float] = {}
    link_load: dict[Edge, float] = {}
    for i, spec in enumerate(specs):
        du, cu = result.du_assignment[i], result.cu_assignment[i]
        fh, mh, bh = result.routes[i]
        ends = [(fh, spec.origin, du), (mh, du, cu), (bh, cu, graph.gateway)]
        for path, a, b in ends:
            if path[0] != a or path[-1] != b:
                return False
            for x, y in zip(path, path[1:]):
                k = edge_key(x, y)
                if k not in graph.link_map:
                    return False
                link_load[k] = link_load.get(k, 0.0) + spec.traffic
        if sum(graph.path_latency(p) for p, _, _ in ends) > spec.max_latency_ms + EPS:
            return False
        half = graph.kappa * spec.traffic / 2.0
        node_load[du] = node_load.get(du, 0.0) + half
        node_load[cu] = node_load.get(cu, 0.0) + half
    for nid, load in node_load.items():
        if load > graph.node_map[nid].compute_capacity + EPS:
            return False
    for k, load in link_load.items():
        if load > graph.link_map[k].capacity + EPS:
            return False
    return True


def compute_energy_cost(placement: PlacementResult, ec: float, slot_duration_h: float = 1.0) -> float:
    """Electricity cost of running ``placement`` for one slot.

    Power is in W and ``ec`` is a price per kWh.
    """
    if not placement.feasible:
        raise PreconditionError("energy cost is only defined for feasible placements")
    if ec < 0 or slot_duration_h < 0:
        raise ValueError("ec and slot duration must be >= 0")
    return (placement.p_net + placement.p_node) / 1000.0 * slot_duration_h * ec
