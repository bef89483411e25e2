"""Random capacitated network topologies and service overlays.

Topologies are connected by construction: a uniform random labeled
spanning tree (random Pruefer sequence) plus distinct random extra
edges, with ``|E| = round(connectivity * |V|)``. Node capacities, link
capacities and latencies are drawn uniformly from configurable integer
ranges whose defaults leave roughly half the resources free on the
reference instances.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, asdict

import numpy as np


@dataclass(frozen=True)
class Node:
    id: int
    capacity: int  # processing resource units

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ValueError("node capacity must be positive")


@dataclass(frozen=True)
class Link:
    u: int
    v: int
    capacity: int  # bandwidth units
    latency: int   # time units

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError("self-links are not allowed")
        if self.capacity <= 0 or self.latency <= 0:
            raise ValueError("link capacity and latency must be positive")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


@dataclass(frozen=True)
class Network:
    """Undirected connected graph with node and link capacities.

    ``capability`` optionally restricts which nodes may host which
    services (service id -> set of node ids); ``None`` means every node
    can host every service.
    """

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    capability: dict[int, frozenset[int]] | None = None

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be consecutive from 0")
        seen = set()
        for link in self.links:
            if link.endpoints in seen:
                raise ValueError(f"duplicate link {link.endpoints}")
            seen.add(link.endpoints)
        if not self.is_connected():
            raise ValueError("network must be connected")

    def adjacency(self) -> dict[int, list[tuple[int, int]]]:
        """node -> sorted list of (neighbor, link index)."""
        adj: dict[int, list[tuple[int, int]]] = {n.id: [] for n in self.nodes}
        for idx, link in enumerate(self.links):
            adj[link.u].append((link.v, idx))
            adj[link.v].append((link.u, idx))
        for entries in adj.values():
            entries.sort()
        return adj

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        adj = {n.id: [] for n in self.nodes}
        for link in self.links:
            adj[link.u].append(link.v)
            adj[link.v].append(link.u)
        seen = {self.nodes[0].id}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(self.nodes)

    def capable_nodes(self, service_id: int) -> frozenset[int]:
        if self.capability is None:
            return frozenset(n.id for n in self.nodes)
        return self.capability.get(service_id, frozenset())


@dataclass(frozen=True)
class Service:
    id: int
    demand: int  # resource units consumed on its host

    def __post_init__(self) -> None:
        if self.demand <= 0:
            raise ValueError("service demand must be positive")


@dataclass(frozen=True)
class Demand:
    """A traffic relation between two distinct services."""

    id: int
    source: int
    target: int
    rate: int           # bandwidth units
    latency_bound: int  # maximum tolerable path latency

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError("demand endpoints must be distinct services")
        if self.rate <= 0 or self.latency_bound <= 0:
            raise ValueError("demand rate and latency bound must be positive")


@dataclass(frozen=True)
class ServiceOverlay:
    services: tuple[Service, ...]
    demands: tuple[Demand, ...]

    def __post_init__(self) -> None:
        ids = [s.id for s in self.services]
        if ids != list(range(len(ids))):
            raise ValueError("service ids must be consecutive from 0")
        known = set(ids)
        for d in self.demands:
            if d.source not in known or d.target not in known:
                raise ValueError(f"demand {d.id} references unknown services")


@dataclass(frozen=True)
class ValueRanges:
    """Inclusive integer sampling ranges for generated instances."""

    node_capacity: tuple[int, int] = (6, 10)
    link_capacity: tuple[int, int] = (8, 16)
    link_latency: tuple[int, int] = (1, 4)
    service_demand: tuple[int, int] = (1, 3)
    demand_rate: tuple[int, int] = (1, 3)
    demand_latency_bound: tuple[int, int] = (10, 20)

    def to_json(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @staticmethod
    def from_json(doc: dict) -> "ValueRanges":
        return ValueRanges(**{k: tuple(v) for k, v in doc.items()})


def _uniform_int(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def _random_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labeled tree via a random Pruefer sequence."""
    if n == 2:
        return [(0, 1)]
    seq = [int(rng.integers(0, n)) for _ in range(n - 2)]
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    leaves = sorted(v for v in range(n) if degree[v] == 1)
    import heapq

    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((min(u, v), max(u, v)))
    return edges


def generate_topology(n_nodes: int, connectivity: float, rng: np.random.Generator,
                      ranges: ValueRanges | None = None) -> Network:
    """Random connected network with ``round(connectivity * n_nodes)`` links."""
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    ranges = ranges or ValueRanges()
    n_edges = int(connectivity * n_nodes + 0.5)
    if n_edges < n_nodes - 1:
        raise ValueError(
            f"connectivity {connectivity} yields {n_edges} links, fewer than the "
            f"{n_nodes - 1} needed for a connected graph")
    max_edges = n_nodes * (n_nodes - 1) // 2
    if n_edges > max_edges:
        raise ValueError(f"{n_edges} links exceed the simple-graph maximum {max_edges}")

    tree = set(_random_tree_edges(n_nodes, rng))
    candidates = [(u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes)
                  if (u, v) not in tree]
    extra_count = n_edges - len(tree)
    extra_idx = rng.choice(len(candidates), size=extra_count, replace=False) if extra_count else []
    edges = sorted(tree) + [candidates[int(i)] for i in sorted(extra_idx)]

    nodes = tuple(Node(id=v, capacity=_uniform_int(rng, ranges.node_capacity))
                  for v in range(n_nodes))
    links = tuple(Link(u=u, v=v,
                       capacity=_uniform_int(rng, ranges.link_capacity),
                       latency=_uniform_int(rng, ranges.link_latency))
                  for u, v in edges)
    return Network(nodes=nodes, links=links)


def generate_overlay(n_services: int, n_demands: int, rng: np.random.Generator,
                     ranges: ValueRanges | None = None) -> ServiceOverlay:
    """Random overlay; demands use distinct unordered service pairs."""
    if n_services < 2:
        raise ValueError("need at least 2 services")
    if n_demands < 1:
        raise ValueError("need at least 1 demand")
    ranges = ranges or ValueRanges()
    pairs = [(s, t) for s in range(n_services) for t in range(s + 1, n_services)]
    if n_demands > len(pairs):
        raise ValueError(f"{n_demands} demands exceed the {len(pairs)} distinct service pairs")
    services = tuple(Service(id=s, demand=_uniform_int(rng, ranges.service_demand))
                     for s in range(n_services))
    chosen = rng.choice(len(pairs), size=n_demands, replace=False)
    demands = tuple(
        Demand(id=i, source=pairs[int(p)][0], target=pairs[int(p)][1],
               rate=_uniform_int(rng, ranges.demand_rate),
               latency_bound=_uniform_int(rng, ranges.demand_latency_bound))
        for i, p in enumerate(chosen))
    return ServiceOverlay(services=services, demands=demands)


def sample_capabilities(n_services: int, net: Network, density: float,
                        rng: np.random.Generator) -> dict[int, frozenset[int]]:
    """Random hosting capability per (service, node); each service keeps
    at least one capable node."""
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    capability = {}
    node_ids = [n.id for n in net.nodes]
    for s in range(n_services):
        capable = frozenset(v for v in node_ids if rng.random() < density)
        if not capable:
            capable = frozenset({int(rng.choice(node_ids))})
        capability[s] = capable
    return capability


def network_to_json(net: Network) -> dict:
    doc = {
        "nodes": [{"id": n.id, "capacity": n.capacity} for n in net.nodes],
        "links": [{"u": l.u, "v": l.v, "capacity": l.capacity, "latency": l.latency}
                  for l in net.links],
    }
    if net.capability is not None:
        doc["capability"] = {str(s): sorted(vs) for s, vs in net.capability.items()}
    return doc


def network_from_json(doc: dict) -> Network:
    capability = None
    if "capability" in doc:
        capability = {int(s): frozenset(vs) for s, vs in doc["capability"].items()}
    return Network(
        nodes=tuple(Node(id=n["id"], capacity=n["capacity"]) for n in doc["nodes"]),
        links=tuple(Link(u=l["u"], v=l["v"], capacity=l["capacity"], latency=l["latency"])
                    for l in doc["links"]),
        capability=capability,
    )


def overlay_to_json(overlay: ServiceOverlay) -> dict:
    return {
        "services": [{"id": s.id, "demand": s.demand} for s in overlay.services],
        "demands": [{"id": d.id, "source": d.source, "target": d.target,
                     "rate": d.rate, "latency_bound": d.latency_bound}
                    for d in overlay.demands],
    }


def overlay_from_json(doc: dict) -> ServiceOverlay:
    return ServiceOverlay(
        services=tuple(Service(id=s["id"], demand=s["demand"]) for s in doc["services"]),
        demands=tuple(Demand(id=d["id"], source=d["source"], target=d["target"],
                             rate=d["rate"], latency_bound=d["latency_bound"])
                      for d in doc["demands"]),
    )
