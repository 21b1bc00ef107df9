"""Adaptive link costs, constrained shortest paths, failover and recovery.

The composite edge cost blends fidelity, rate, trust and distance under
a weight vector that is re-derived every step from network dispersion.
Primary and alternate paths come from a Dijkstra search with a strict
deterministic tie-break (cost, then hop count, then lexicographic node
sequence) and a loopless next-best-path construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from .link_state import LinkState

RATE_COST_CAP = 10.0
BETA_FLOOR = 0.25

Edge = tuple[int, int]
Path = tuple[int, ...]


def edge_key(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def path_edges(path: Path) -> tuple[Edge, ...]:
    return tuple(edge_key(a, b) for a, b in zip(path, path[1:]))


@dataclass(frozen=True)
class WeightVector:
    """Adaptive coefficients of the composite link cost."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class RoutePair:
    """Primary path and optional next-best alternate for one (s, d) demand."""

    primary: Path
    alternate: Path | None
    primary_cost: float
    alternate_cost: float | None

    def __post_init__(self) -> None:
        if self.alternate is not None:
            if path_edges(self.alternate) == path_edges(self.primary):
                raise ValueError("alternate must differ from primary as edge sequence")
            if self.alternate_cost is not None and self.alternate_cost < self.primary_cost:
                raise ValueError("alternate_cost must be >= primary_cost")


@dataclass
class RoutingCounters:
    """Operation counters for complexity checks."""

    heap_pops: int = 0
    heap_pushes: int = 0


def update_weights(
    prev: WeightVector,
    stats,
    t: float,
    rng: np.random.Generator,
) -> WeightVector:
    """Re-derive the weight vector from dispersion statistics at step t.

    The update replaces rather than accumulates: alpha tracks fidelity
    spread, beta shrinks with rate spread down to a floor, gamma carries
    a clamped random perturbation and delta oscillates with the orbital
    phase proxy sin(t / 40). ``prev`` is accepted for signature
    compatibility; no component depends on it.
    """
    del prev
    zeta1 = float(np.clip(rng.standard_normal(), -2.0, 2.0))
    return WeightVector(
        alpha=1.0 + 3.0 * stats.sigma_f,
        beta=max(BETA_FLOOR, 1.0 - 1.5 * stats.sigma_r),
        gamma=0.2 + 0.08 * zeta1,
        delta=0.6 + 0.15 * math.sin(t / 40.0),
    )


def link_cost(
    link: LinkState,
    weights: WeightVector,
    distance_km: float,
    d_max_km: float,
    rate_ref_bps: float,
    cost_cap: float = RATE_COST_CAP,
) -> float:
    """Composite cost alpha(1-F) + beta*min(ref/R, cap) + gamma(1-T) + delta*d/d_max.

    The inverse-rate term is normalized by a reference rate and capped
    so degenerate rates cannot blow up the sum; result is finite, >= 0.
    """
    if d_max_km <= 0:
        raise ValueError("d_max_km must be > 0")
    if link.rate_bps > 0:
        rate_term = min(rate_ref_bps / link.rate_bps, cost_cap)
    else:
        rate_term = cost_cap
    cost = (
        weights.alpha * (1.0 - link.fidelity)
        + weights.beta * rate_term
        + weights.gamma * (1.0 - link.trust)
        + weights.delta * (distance_km / d_max_km)
    )
    return max(cost, 0.0)


def feasible_subgraph(links, f_min: float, t_min: float) -> set[Edge]:
    """Edges meeting the fidelity/trust floors and not currently excluded."""
    kept: set[Edge] = set()
    for link in links:
        if link.is_excluded:
            continue
        if link.fidelity >= f_min and link.trust >= t_min:
            kept.add(link.endpoints)
    return kept


def _adjacency(edges: dict[Edge, float]) -> dict[int, list[tuple[int, float]]]:
    adj: dict[int, list[tuple[int, float]]] = {}
    for (i, j), w in edges.items():
        adj.setdefault(i, []).append((j, w))
        adj.setdefault(j, []).append((i, w))
    return adj


def recompute_path_cost(edges: dict[Edge, float], path: Path) -> float:
    """Fold edge costs in path order (keeps float sums reproducible)."""
    total = 0.0
    for e in path_edges(path):
        total += edges[e]
    return total


def shortest_path(
    edges: dict[Edge, float],
    s: int,
    d: int,
    counters: RoutingCounters | None = None,
) -> tuple[Path, float] | None:
    """Minimum-cost path from s to d over non-negative edge costs.

    Ties break on fewer hops, then the lexicographically smallest node
    sequence; the full comparison key travels through the heap so the
    first settlement of a node is its final label. Returns None when s
    and d are disconnected; s == d yields the zero-length path.
    """
    if any(w < 0 for w in edges.values()):
        raise ValueError("edge costs must be >= 0")
    if s == d:
        return (s,), 0.0
    adj = _adjacency(edges)
    if s not in adj or d not in adj:
        return None
    heap: list[tuple[float, int, Path]] = [(0.0, 0, (s,))]
    settled: set[int] = set()
    while heap:
        cost, hops, path = heappop(heap)
        if counters is not None:
            counters.heap_pops += 1
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == d:
            return path, cost
        for nbr, w in adj.get(node, ()):
            if nbr not in settled:
                heappush(heap, (cost + w, hops + 1, path + (nbr,)))
                if counters is not None:
                    counters.heap_pushes += 1
    return None


def second_path(
    edges: dict[Edge, float],
    s: int,
    d: int,
    primary: Path,
    edge_disjoint: bool = False,
) -> tuple[Path, float] | None:
    """Next-best loopless path distinct from the primary as an edge sequence.

    Standard spur construction: for each prefix of the primary, remove
    the continuing edge (plus any other already-found path sharing the
    prefix) and the prefix's interior nodes, then extend with a fresh
    shortest path. With ``edge_disjoint`` all primary edges are removed
    instead and a single search runs.
    """
    if len(primary) < 2:
        return None
    if edge_disjoint:
        remaining = {e: w for e, w in edges.items() if e not in set(path_edges(primary))}
        found = shortest_path(remaining, s, d)
        if found is None:
            return None
        path, _ = found
        return path, recompute_path_cost(edges, path)

    best: tuple[float, int, Path] | None = None
    for i in range(len(primary) - 1):
        spur = primary[i]
        root = primary[: i + 1]
        banned_edges = {edge_key(primary[i], primary[i + 1])}
        banned_nodes = set(root[:-1])
        pruned = {
            e: w
            for e, w in edges.items()
            if e not in banned_edges and not (set(e) & banned_nodes)
        }
        found = shortest_path(pruned, spur, d)
        if found is None:
            continue
        spur_path, _ = found
        candidate = root[:-1] + spur_path
        if len(set(candidate)) != len(candidate):
            continue  # loop through the root, not a simple path
        if path_edges(candidate) == path_edges(primary):
            continue
        cost = recompute_path_cost(edges, candidate)
        key = (cost, len(candidate) - 1, candidate)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    cost, _, path = best
    return path, cost


def route_pair(
    edges: dict[Edge, float],
    s: int,
    d: int,
    counters: RoutingCounters | None = None,
    edge_disjoint: bool = False,
) -> RoutePair | None:
    """Primary plus alternate path bundle; None when s, d are disconnected."""
    found = shortest_path(edges, s, d, counters)
    if found is None:
        return None
    primary, cost1 = found
    alt = second_path(edges, s, d, primary, edge_disjoint=edge_disjoint)
    if alt is None:
        return RoutePair(primary, None, cost1, None)
    alternate, cost2 = alt
    return RoutePair(primary, alternate, cost1, cost2)


def failover(route: RoutePair, broken_edges: set[Edge]) -> Path | None:
    """Pick the surviving path of a route after edges broke.

    Primary intact: keep it. Primary broken with a clean alternate: the
    alternate takes over. Both broken (or no alternate): None, and the
    caller recomputes at its next routing opportunity.
    """
    if not (set(path_edges(route.primary)) & broken_edges):
        return route.primary
    if route.alternate is not None and not (
        set(path_edges(route.alternate)) & broken_edges
    ):
        return route.alternate
    return None


def purify_link(fidelity: float) -> float:
    """Purification map F^2 / (F^2 + (1 - F)^2); gains only above 0.5."""
    if not 0 <= fidelity <= 1:
        raise ValueError("fidelity must be in [0, 1]")
    num = fidelity * fidelity
    den = num + (1.0 - fidelity) * (1.0 - fidelity)
    return num / den


def recover(
    links: dict[Edge, LinkState],
    f_min: float,
    t: float,
    exclusion_s: float,
) -> dict[Edge, LinkState]:
    """Purify sub-threshold links, exclude persistent failures, smooth trust.

    Links with F below the floor are purified once; those still below
    get a temporary exclusion window. Every node touching a flagged link
    then replaces the trust of its incident links with the mean trust of
    its neighborhood (computed from the pre-smoothing values; a link
    proposed by both endpoints takes the average of the two proposals).
    """
    flagged_nodes: set[int] = set()
    for e in sorted(links):
        link = links[e]
        if link.fidelity < f_min:
            flagged_nodes.update(e)
            link.fidelity = purify_link(link.fidelity)
            if link.fidelity < f_min:
                link.excluded_until = t + exclusion_s

    if flagged_nodes:
        incident: dict[int, list[Edge]] = {}
        for e in links:
            incident.setdefault(e[0], []).append(e)
            incident.setdefault(e[1], []).append(e)
        old_trust = {e: links[e].trust for e in links}
        proposals: dict[Edge, list[float]] = {}
        for node in sorted(flagged_nodes):
            neighborhood = incident.get(node, [])
            if not neighborhood:
                continue
            mean_trust = math.fsum(old_trust[e] for e in neighborhood) / len(neighborhood)
            for e in neighborhood:
                proposals.setdefault(e, []).append(mean_trust)
        for e, values in proposals.items():
            links[e].trust = math.fsum(values) / len(values)
    return links
