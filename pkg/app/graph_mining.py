"""User interaction graph mining.

Centralities (PageRank, HITS, betweenness), Walktrap community detection with
modularity-optimal dendrogram cut, community conductance and a seeded
Fruchterman-Reingold layout. All functions are pure; vertex order is the
sorted handle order kept by ``UserGraph``, so results do not depend on the
order vertices were inserted in.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from app.core.constants import EDGE_KINDS
from app.core.errors import EmptyGraph, GraphError
from app.core.models import (
    Dendrogram,
    Layout,
    Merge,
    Partition,
    TweetCollection,
    UserGraph,
)
from app.logger import log_warning

MIN_DISTANCE = 1e-9


@dataclass(frozen=True)
class PageRankResult:
    scores: dict[str, float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class HitsResult:
    hub: dict[str, float]
    authority: dict[str, float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class WalktrapResult:
    dendrogram: Dendrogram
    best: Partition
    best_modularity: float
    # number of merges applied to reach ``best``
    best_cut: int
    # modularity after 0, 1, ..., len(merges) merges
    modularity_path: tuple[float, ...]


def build_user_graph(
    collection: TweetCollection,
    edge_kinds: Iterable[str] = EDGE_KINDS,
) -> UserGraph:
    """Directed author -> target graph weighted by interaction counts."""
    kinds = set(edge_kinds)
    if not kinds:
        raise ValueError("edge_kinds must be non-empty")
    unknown = kinds - set(EDGE_KINDS)
    if unknown:
        raise ValueError(f"Unknown edge kinds: {sorted(unknown)}")

    weights: Counter[tuple[str, str]] = Counter()
    for tweet in collection:
        targets: list[str] = []
        if "mention" in kinds:
            targets.extend(tweet.mentions)
        if "retweet" in kinds and tweet.retweet_of is not None:
            targets.append(tweet.retweet_of)
        for target in targets:
            if target != tweet.author:
                weights[(tweet.author, target)] += 1

    if not weights:
        raise EmptyGraph(f"no interactions of kinds {sorted(kinds)} found")

    vertices = sorted({vertex for edge in weights for vertex in edge})
    return UserGraph(vertices=tuple(vertices), edges=dict(weights))


def to_networkx(graph: UserGraph, *, directed: bool = True) -> nx.Graph:
    if directed:
        result = nx.DiGraph()
        result.add_nodes_from(graph.vertices)
        result.add_weighted_edges_from(
            (source, target, weight) for (source, target), weight in graph.edges.items()
        )
        return result
    result = nx.Graph()
    result.add_nodes_from(graph.vertices)
    result.add_weighted_edges_from(
        (u, v, weight) for (u, v), weight in graph.undirected_weights().items()
    )
    return result


def induced_subgraph(graph: UserGraph, vertices: Iterable[str]) -> UserGraph:
    keep = set(vertices)
    return UserGraph(
        vertices=tuple(sorted(keep)),
        edges={
            (source, target): weight
            for (source, target), weight in graph.edges.items()
            if source in keep and target in keep
        },
    )


def _require_vertices(graph: UserGraph) -> None:
    if graph.n == 0:
        raise EmptyGraph("graph has no vertices")


# -------------------------
# Centralities
# -------------------------

def pagerank(
    graph: UserGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> PageRankResult:
    """Power iteration with uniform teleport; dangling mass is spread uniformly."""
    _require_vertices(graph)
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")

    n = graph.n
    adjacency = graph.adjacency()
    out_weight = adjacency.sum(axis=1)
    dangling = out_weight == 0
    transition = np.divide(
        adjacency,
        out_weight[:, None],
        out=np.zeros_like(adjacency),
        where=out_weight[:, None] > 0,
    )

    scores = np.full(n, 1.0 / n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        updated = damping * (scores @ transition + scores[dangling].sum() / n)
        updated += (1.0 - damping) / n
        updated /= updated.sum()
        change = float(np.abs(updated - scores).sum())
        scores = updated
        if change < tol:
            converged = True
            break

    if not converged:
        log_warning("graph", f"pagerank_not_converged: iterations={iterations} tol={tol}")

    return PageRankResult(
        scores={vertex: float(scores[i]) for i, vertex in enumerate(graph.vertices)},
        iterations=iterations,
        converged=converged,
    )


def _l2_normalize(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return np.full(len(vector), 1.0 / math.sqrt(len(vector)))
    return vector / norm


def hits(graph: UserGraph, tol: float = 1e-10, max_iter: int = 1000) -> HitsResult:
    """Alternating ``auth = A^T hub``, ``hub = A auth`` with L2 normalization."""
    _require_vertices(graph)
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")

    adjacency = graph.adjacency()
    hub = np.full(graph.n, 1.0 / math.sqrt(graph.n))
    authority = hub.copy()
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_authority = _l2_normalize(adjacency.T @ hub)
        new_hub = _l2_normalize(adjacency @ new_authority)
        change = float(
            np.abs(new_hub - hub).sum() + np.abs(new_authority - authority).sum()
        )
        hub, authority = new_hub, new_authority
        if change < tol:
            converged = True
            break

    if not converged:
        log_warning("graph", f"hits_not_converged: iterations={iterations} tol={tol}")

    return HitsResult(
        hub={vertex: float(hub[i]) for i, vertex in enumerate(graph.vertices)},
        authority={vertex: float(authority[i]) for i, vertex in enumerate(graph.vertices)},
        iterations=iterations,
        converged=converged,
    )


def betweenness(graph: UserGraph) -> dict[str, float]:
    """Unnormalized betweenness on the unweighted undirected view.

    networkx halves the Brandes accumulation for undirected graphs, so every
    unordered pair is counted once.
    """
    _require_vertices(graph)
    scores = nx.betweenness_centrality(
        to_networkx(graph, directed=False),
        normalized=False,
        weight=None,
    )
    return {vertex: float(scores[vertex]) for vertex in graph.vertices}


def rank_users(
    scores: Mapping[str, float],
    *,
    top: int | None = None,
) -> list[tuple[str, float]]:
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked if top is None else ranked[:top]


# -------------------------
# Communities
# -------------------------

def modularity(graph: UserGraph, partition: Partition) -> float:
    """``Q = sum_c (e_c/m - (d_c/2m)^2)`` on the undirected weighted view."""
    missing = set(graph.vertices) - set(partition.assignment)
    if missing:
        raise ValueError(f"Partition does not cover vertices: {sorted(missing)}")
    weights = graph.undirected_weights()
    total = float(sum(weights.values()))
    if total == 0.0:
        raise GraphError("modularity needs at least one edge")

    assignment = partition.assignment
    internal: dict[int, float] = {}
    degree: dict[int, float] = {}
    for (u, v), weight in weights.items():
        cu, cv = assignment[u], assignment[v]
        degree[cu] = degree.get(cu, 0.0) + weight
        degree[cv] = degree.get(cv, 0.0) + weight
        if cu == cv:
            internal[cu] = internal.get(cu, 0.0) + weight

    return sum(
        internal.get(community, 0.0) / total
        - (degree.get(community, 0.0) / (2.0 * total)) ** 2
        for community in sorted(set(assignment.values()))
    )


def cut_dendrogram(
    graph: UserGraph,
    dendrogram: Dendrogram,
    merges_applied: int,
) -> Partition:
    """Partition obtained after the first ``merges_applied`` merges."""
    if dendrogram.leaf_count != graph.n:
        raise ValueError("Dendrogram does not match the graph")
    groups: dict[int, list[str]] = {i: [vertex] for i, vertex in enumerate(graph.vertices)}
    for merge in dendrogram.merges[:merges_applied]:
        groups[merge.new_id] = groups.pop(merge.community_a) + groups.pop(merge.community_b)
    return Partition.from_groups(groups.values())


def walktrap(graph: UserGraph, t: int = 4) -> WalktrapResult:
    """Agglomerate adjacent communities by minimal random-walk Ward increment.

    Leaves are ids ``0..n-1`` in sorted vertex order and the k-th merge creates
    id ``n + k``. Equal increments resolve to the smallest ``(min id, max id)``.
    The best partition is the dendrogram cut of maximal modularity; on ties the
    cut with fewer communities wins.
    """
    _require_vertices(graph)
    if t < 1:
        raise ValueError("walk length t must be >= 1")
    if not graph.edges:
        raise EmptyGraph("walktrap needs at least one edge")

    n = graph.n
    weights = graph.undirected_adjacency()
    degree = weights.sum(axis=1)
    transition = np.divide(
        weights,
        degree[:, None],
        out=np.zeros_like(weights),
        where=degree[:, None] > 0,
    )
    for isolated in np.flatnonzero(degree == 0):
        transition[isolated, isolated] = 1.0
    walk = np.linalg.matrix_power(transition, t)
    inverse_degree = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)

    probs: dict[int, np.ndarray] = {i: walk[i].copy() for i in range(n)}
    sizes: dict[int, int] = {i: 1 for i in range(n)}
    neighbors: dict[int, set[int]] = {
        i: {int(j) for j in np.flatnonzero(weights[i] > 0) if j != i} for i in range(n)
    }

    def delta_sigma(a: int, b: int) -> float:
        diff = probs[a] - probs[b]
        squared_distance = float(np.dot(diff * diff, inverse_degree))
        return sizes[a] * sizes[b] / (sizes[a] + sizes[b]) * squared_distance / n

    heap: list[tuple[float, int, int]] = []
    for a in range(n):
        for b in sorted(neighbors[a]):
            if a < b:
                heap.append((delta_sigma(a, b), a, b))
    heapq.heapify(heap)

    merges: list[Merge] = []
    next_id = n
    while heap:
        delta, a, b = heapq.heappop(heap)
        if a not in sizes or b not in sizes:
            continue
        new = next_id
        next_id += 1
        sizes[new] = sizes[a] + sizes[b]
        probs[new] = (sizes[a] * probs[a] + sizes[b] * probs[b]) / sizes[new]
        neighbors[new] = (neighbors[a] | neighbors[b]) - {a, b}
        for community in (a, b):
            del sizes[community], probs[community], neighbors[community]
        for other in neighbors[new]:
            neighbors[other] -= {a, b}
            neighbors[other].add(new)
        merges.append(Merge(community_a=a, community_b=b, new_id=new, delta_sigma=delta))
        for other in sorted(neighbors[new]):
            heapq.heappush(heap, (delta_sigma(other, new), other, new))

    dendrogram = Dendrogram(leaf_count=n, merges=tuple(merges))
    path = tuple(
        modularity(graph, cut_dendrogram(graph, dendrogram, applied))
        for applied in range(len(merges) + 1)
    )
    best_cut = max(range(len(path)), key=lambda applied: (path[applied], applied))
    return WalktrapResult(
        dendrogram=dendrogram,
        best=cut_dendrogram(graph, dendrogram, best_cut),
        best_modularity=path[best_cut],
        best_cut=best_cut,
        modularity_path=path,
    )


def community_conductance(graph: UserGraph, partition: Partition) -> dict[int, float]:
    """``cut(C) / min(vol(C), vol(V - C))``; 0 when the denominator is 0."""
    assignment = partition.assignment
    volume: dict[int, float] = {c: 0.0 for c in set(assignment.values())}
    cut: dict[int, float] = {c: 0.0 for c in volume}
    total_volume = 0.0
    for (u, v), weight in graph.undirected_weights().items():
        cu, cv = assignment[u], assignment[v]
        volume[cu] += weight
        volume[cv] += weight
        total_volume += 2.0 * weight
        if cu != cv:
            cut[cu] += weight
            cut[cv] += weight

    result = {}
    for community in sorted(volume):
        denominator = min(volume[community], total_volume - volume[community])
        result[community] = cut[community] / denominator if denominator > 0 else 0.0
    return result


def isolated_communities(
    graph: UserGraph,
    partition: Partition,
    max_conductance: float,
) -> tuple[int, ...]:
    conductance = community_conductance(graph, partition)
    return tuple(c for c, value in conductance.items() if value <= max_conductance)


# -------------------------
# Layout
# -------------------------

def cooling_schedule(start: float, iterations: int) -> np.ndarray:
    """Linear temperatures from ``start`` down to exactly 0 on the last step."""
    if iterations <= 0:
        return np.zeros(0)
    return start * (1.0 - np.arange(iterations) / max(iterations - 1, 1))


def fr_layout(
    graph: UserGraph,
    width: float = 1000.0,
    height: float = 1000.0,
    iterations: int = 500,
    seed: int = 0,
) -> Layout:
    """Fruchterman-Reingold with linear cooling from ``width/10`` to 0."""
    _require_vertices(graph)
    if width <= 0 or height <= 0:
        raise ValueError("layout frame must have positive width and height")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    n = graph.n
    rng = np.random.default_rng(seed)
    frame = np.array([width, height])
    positions = rng.uniform(0.0, 1.0, size=(n, 2)) * frame
    k = math.sqrt(width * height / n)
    index = graph.index
    edges = np.array(
        [(index[u], index[v]) for u, v in graph.undirected_weights()],
        dtype=int,
    ).reshape(-1, 2)
    for temperature in cooling_schedule(width / 10.0, iterations):
        delta = positions[:, None, :] - positions[None, :, :]
        distance = np.maximum(np.linalg.norm(delta, axis=2), MIN_DISTANCE)
        # unit vector * k^2/d  ==  delta * k^2/d^2
        repulsion = k * k / (distance * distance)
        np.fill_diagonal(repulsion, 0.0)
        displacement = (delta * repulsion[:, :, None]).sum(axis=1)

        if len(edges):
            edge_delta = positions[edges[:, 0]] - positions[edges[:, 1]]
            edge_distance = np.maximum(np.linalg.norm(edge_delta, axis=1), MIN_DISTANCE)
            # unit vector * d^2/k  ==  delta * d/k
            pull = edge_delta * (edge_distance / k)[:, None]
            np.add.at(displacement, edges[:, 0], -pull)
            np.add.at(displacement, edges[:, 1], pull)

        length = np.linalg.norm(displacement, axis=1)
        scale = np.divide(
            np.minimum(length, temperature),
            length,
            out=np.zeros_like(length),
            where=length > 0,
        )
        positions = np.clip(positions + displacement * scale[:, None], 0.0, frame)

    return Layout(
        coords={
            vertex: (float(positions[i, 0]), float(positions[i, 1]))
            for i, vertex in enumerate(graph.vertices)
        },
        width=float(width),
        height=float(height),
    )
