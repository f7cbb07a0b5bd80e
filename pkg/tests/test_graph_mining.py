from collections import deque
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from app.core.errors import EmptyGraph
from app.core.models import Partition, Tweet, TweetCollection, UserGraph
from app.graph_mining import (
    betweenness,
    build_user_graph,
    community_conductance,
    cooling_schedule,
    fr_layout,
    hits,
    induced_subgraph,
    isolated_communities,
    pagerank,
    rank_users,
    to_networkx,
)


def _tweet(tweet_id, author, *, mentions=(), retweet_of=None, timestamp=0.0):
    return Tweet(
        id=str(tweet_id),
        timestamp=float(timestamp),
        author=author,
        text="hello",
        mentions=tuple(mentions),
        retweet_of=retweet_of,
    )


def _graph(edges) -> UserGraph:
    vertices = sorted({vertex for edge in edges for vertex in edge})
    return UserGraph(vertices=tuple(vertices), edges=dict(edges))


def _random_graph(rng, n, p):
    edges = {}
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                edges[(f"u{i:02d}", f"u{j:02d}")] = int(rng.integers(1, 4))
    vertices = tuple(f"u{i:02d}" for i in range(n))
    return UserGraph(vertices=vertices, edges=edges)


def test_build_user_graph_counts_mentions_and_retweets_without_self_loops():
    collection = TweetCollection.from_tweets([
        _tweet(1, "alice", mentions=["bob", "alice"]),
        _tweet(2, "alice", mentions=["bob"], retweet_of="carol", timestamp=1),
        _tweet(3, "bob", retweet_of="bob", timestamp=2),
    ])

    graph = build_user_graph(collection)

    assert graph.vertices == ("alice", "bob", "carol")
    assert dict(graph.edges) == {("alice", "bob"): 2, ("alice", "carol"): 1}


def test_build_user_graph_respects_edge_kinds():
    collection = TweetCollection.from_tweets([
        _tweet(1, "alice", mentions=["bob"], retweet_of="carol"),
    ])

    graph = build_user_graph(collection, ["retweet"])

    assert dict(graph.edges) == {("alice", "carol"): 1}


def test_build_user_graph_raises_without_interactions():
    collection = TweetCollection.from_tweets([_tweet(1, "alice")])

    with pytest.raises(EmptyGraph):
        build_user_graph(collection)


def test_pagerank_matches_networkx_and_sums_to_one():
    rng = np.random.default_rng(7)
    for _ in range(5):
        graph = _random_graph(rng, 12, 0.2)

        result = pagerank(graph, damping=0.85, tol=1e-12)
        expected = nx.pagerank(to_networkx(graph), alpha=0.85, tol=1e-13, max_iter=10000)

        assert result.converged
        assert sum(result.scores.values()) == pytest.approx(1.0, abs=1e-12)
        for vertex in graph.vertices:
            assert result.scores[vertex] == pytest.approx(expected[vertex], abs=1e-8)


def test_pagerank_does_not_depend_on_insertion_order():
    edges = [(("b", "a"), 1), (("c", "a"), 2), (("a", "c"), 1)]
    forward = _graph(dict(edges))
    backward = _graph(dict(reversed(edges)))

    assert pagerank(forward).scores == pagerank(backward).scores


def test_pagerank_reports_non_convergence_instead_of_raising():
    graph = _graph({("a", "b"): 1, ("b", "c"): 1})

    result = pagerank(graph, tol=1e-15, max_iter=1)

    assert result.converged is False
    assert result.iterations == 1


def test_hits_on_star_gives_center_full_authority():
    graph = _graph({("a", "hub"): 1, ("b", "hub"): 1, ("c", "hub"): 1})

    result = hits(graph)

    assert result.converged
    assert result.authority["hub"] == pytest.approx(1.0)
    assert result.authority["a"] == pytest.approx(0.0)
    assert result.hub["a"] == pytest.approx(1.0 / np.sqrt(3.0))
    assert result.hub["hub"] == pytest.approx(0.0)


def test_hits_vectors_are_unit_length():
    graph = _random_graph(np.random.default_rng(3), 10, 0.3)

    result = hits(graph)

    assert np.linalg.norm(list(result.hub.values())) == pytest.approx(1.0)
    assert np.linalg.norm(list(result.authority.values())) == pytest.approx(1.0)


def test_betweenness_on_path_counts_each_pair_once():
    graph = _graph({("a", "b"): 1, ("b", "c"): 5, ("c", "d"): 1})

    scores = betweenness(graph)

    assert scores == {"a": 0.0, "b": 2.0, "c": 2.0, "d": 0.0}


def test_rank_users_orders_by_score_then_handle():
    ranked = rank_users({"bob": 0.2, "alice": 0.2, "carol": 0.5}, top=2)

    assert ranked == [("carol", 0.5), ("alice", 0.2)]


def test_conductance_of_two_triangles_joined_by_a_bridge():
    graph = _graph({
        ("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1,
        ("d", "e"): 1, ("e", "f"): 1, ("d", "f"): 1,
        ("c", "d"): 1,
    })
    partition = Partition.from_groups([["a", "b", "c"], ["d", "e", "f"]])

    conductance = community_conductance(graph, partition)

    assert conductance == {0: pytest.approx(1 / 7), 1: pytest.approx(1 / 7)}
    assert isolated_communities(graph, partition, 0.1) == ()
    assert isolated_communities(graph, partition, 0.2) == (0, 1)


def test_induced_subgraph_keeps_only_internal_edges():
    graph = _graph({("a", "b"): 1, ("b", "c"): 2, ("c", "a"): 3})

    subgraph = induced_subgraph(graph, ["a", "b"])

    assert subgraph.vertices == ("a", "b")
    assert dict(subgraph.edges) == {("a", "b"): 1}


def test_fr_layout_is_seeded_and_stays_inside_the_frame():
    graph = _random_graph(np.random.default_rng(11), 15, 0.15)

    first = fr_layout(graph, width=200.0, height=100.0, iterations=50, seed=5)
    second = fr_layout(graph, width=200.0, height=100.0, iterations=50, seed=5)
    other = fr_layout(graph, width=200.0, height=100.0, iterations=50, seed=6)

    assert dict(first.coords) == dict(second.coords)
    assert dict(first.coords) != dict(other.coords)
    for x, y in first.coords.values():
        assert 0.0 <= x <= 200.0
        assert 0.0 <= y <= 100.0


def test_fr_layout_separates_coincident_vertices():
    graph = _graph({("a", "b"): 1})

    layout = fr_layout(graph, iterations=20, seed=0)

    (ax, ay), (bx, by) = layout.coords["a"], layout.coords["b"]
    assert (ax, ay) != (bx, by)


def test_fr_layout_rejects_bad_frame():
    graph = _graph({("a", "b"): 1})

    with pytest.raises(ValueError):
        fr_layout(graph, width=0.0)


def _geodesic_counts(graph: UserGraph) -> dict[str, float]:
    adjacent = {vertex: set() for vertex in graph.vertices}
    for source, target in graph.edges:
        adjacent[source].add(target)
        adjacent[target].add(source)

    scores = dict.fromkeys(graph.vertices, 0.0)
    for source, target in combinations(graph.vertices, 2):
        depth = {source: 0}
        queue = deque([source])
        while queue:
            vertex = queue.popleft()
            for neighbor in adjacent[vertex]:
                if neighbor not in depth:
                    depth[neighbor] = depth[vertex] + 1
                    queue.append(neighbor)
        if target not in depth:
            continue

        paths = []

        def walk(path):
            last = path[-1]
            if last == target:
                paths.append(path)
                return
            for neighbor in adjacent[last]:
                if depth.get(neighbor) == depth[last] + 1 and depth[neighbor] <= depth[target]:
                    walk(path + [neighbor])

        walk([source])
        for path in paths:
            for inner in path[1:-1]:
                scores[inner] += 1.0 / len(paths)
    return scores


def test_betweenness_matches_shortest_path_enumeration_on_random_graphs():
    checked = 0
    for seed in range(150):
        rng = np.random.default_rng(seed)
        graph = _random_graph(rng, int(rng.integers(2, 9)), float(rng.uniform(0.15, 0.6)))
        if not graph.edges:
            continue

        scores = betweenness(graph)

        for vertex, expected in _geodesic_counts(graph).items():
            assert scores[vertex] == pytest.approx(expected, abs=1e-9)
        checked += 1
    assert checked >= 100


def test_betweenness_of_complete_graph_is_zero():
    graph = _graph({(u, v): 1 for u in "abcd" for v in "abcd" if u != v})

    assert betweenness(graph) == {"a": 0.0, "b": 0.0, "c": 0.0, "d": 0.0}


def test_pagerank_star_solves_the_linear_system_with_dangling_redistribution():
    graph = _graph({("a", "d"): 1, ("b", "d"): 1, ("c", "d"): 1})
    damping, n = 0.85, 4
    # column j holds where vertex j sends its mass; d is dangling
    spread = np.zeros((n, n))
    spread[3, :3] = 1.0
    spread[:, 3] = 1.0 / n
    expected = np.linalg.solve(np.eye(n) - damping * spread, np.full(n, (1.0 - damping) / n))

    result = pagerank(graph, damping=damping, tol=1e-12)

    assert result.converged
    assert [result.scores[v] for v in "abcd"] == pytest.approx(expected.tolist(), abs=1e-8)
    assert min(result.scores.values()) >= (1.0 - damping) / n
    assert sum(result.scores.values()) == pytest.approx(1.0, abs=1e-12)


def test_fr_layout_settles_two_vertices_at_the_ideal_distance():
    graph = _graph({("a", "b"): 1})
    ideal = (1000.0 * 1000.0 / 2) ** 0.5

    for seed in range(3):
        layout = fr_layout(graph, width=1000.0, height=1000.0, iterations=500, seed=seed)

        (ax, ay), (bx, by) = layout.coords["a"], layout.coords["b"]
        distance = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
        assert distance == pytest.approx(ideal, rel=0.05)


def test_cooling_schedule_is_linear_and_ends_at_zero():
    temperatures = cooling_schedule(100.0, 5)

    assert temperatures.tolist() == [100.0, 75.0, 50.0, 25.0, 0.0]
    assert cooling_schedule(100.0, 1).tolist() == [100.0]
    assert len(cooling_schedule(100.0, 0)) == 0
