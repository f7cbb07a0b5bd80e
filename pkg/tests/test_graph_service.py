from pathlib import Path

import pytest

from app.config.pipeline_config import load_pipeline_config
from app.core.models import AssociationRule, Layout, UserGraph
from app.services.graph_service import centrality_frame, graph_to_dot, run_communities
from app.services.pattern_service import rules_to_dot
from app.services.pipeline_context import PipelineContext


REPO_ROOT = Path(__file__).resolve().parents[1]


def _sample_context(tmp_path) -> PipelineContext:
    config, err = load_pipeline_config(
        REPO_ROOT / "config" / "pipeline.json",
        [f"output_dir={tmp_path}"],
    )
    assert err is None
    return PipelineContext(config)


def test_graph_to_dot_lists_nodes_then_weighted_edges():
    graph = UserGraph(vertices=("bob", "alice"), edges={("alice", "bob"): 2})
    layout = Layout(coords={"alice": (1.0, 2.5), "bob": (0.0, 0.0)}, width=10.0, height=10.0)

    text = graph_to_dot(graph, communities={"alice": 0, "bob": 1}, layout=layout)

    assert text == (
        'digraph "users" {\n'
        '  "alice" [community="0", pos="1.0,2.5"];\n'
        '  "bob" [community="1", pos="0.0,0.0"];\n'
        '  "alice" -> "bob" [weight="2"];\n'
        "}\n"
    )


def test_rules_to_dot_links_antecedents_through_rule_nodes():
    rule = AssociationRule(
        antecedent=("fire",),
        consequent=("tesla",),
        support=0.25,
        confidence=1.0,
        lift=1.5,
        count=2,
    )

    text = rules_to_dot([rule])

    assert '"item:fire" -> "rule:1";' in text
    assert '"rule:1" -> "item:tesla";' in text
    assert 'support="0.25", confidence="1.0", lift="1.5"' in text


def test_centrality_frame_is_ordered_by_pagerank(tmp_path):
    ctx = _sample_context(tmp_path)

    frame = centrality_frame(ctx)

    assert list(frame.columns) == [
        "user", "pagerank", "hub", "authority", "betweenness", "community",
    ]
    assert frame["pagerank"].is_monotonic_decreasing
    assert frame["pagerank"].sum() == pytest.approx(1.0)
    assert set(frame["user"]) == set(ctx.user_graph.vertices)


def test_run_communities_writes_membership_and_dendrogram(tmp_path):
    ctx = _sample_context(tmp_path)

    written = run_communities(ctx)

    assert [path.name for path in written] == [
        "communities.csv",
        "dendrogram.csv",
        "community_summary.csv",
        "isolated_subgraph.dot",
    ]
    members = (tmp_path / "communities.csv").read_text(encoding="utf-8").splitlines()
    assert members[0] == "user,community"
    assert len(members) == ctx.user_graph.n + 1
    dendrogram = (tmp_path / "dendrogram.csv").read_text(encoding="utf-8").splitlines()
    assert len(dendrogram) == len(ctx.walktrap.dendrogram.merges) + 1
