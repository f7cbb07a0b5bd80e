from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import pandas as pd

from app.core.models import Layout, UserGraph
from app.graph_mining import induced_subgraph, isolated_communities, rank_users
from app.logger import log_info
from app.services.artifact_service import format_cell, write_records, write_table, write_text
from app.services.pipeline_context import PipelineContext

CENTRALITY_MEASURES = ("pagerank", "hub", "authority", "betweenness")


def _dot_id(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


def _dot_attrs(attrs: Mapping[str, object]) -> str:
    if not attrs:
        return ""
    body = ", ".join(f"{key}={_dot_id(format_cell(value))}" for key, value in sorted(attrs.items()))
    return f" [{body}]"


def graph_to_dot(
    graph: UserGraph,
    *,
    name: str = "users",
    communities: Mapping[str, int] | None = None,
    layout: Layout | None = None,
) -> str:
    """Directed DOT document; nodes carry community and pinned position when known."""
    lines = [f"digraph {_dot_id(name)} {{"]
    for vertex in graph.vertices:
        attrs: dict[str, object] = {}
        if communities is not None and vertex in communities:
            attrs["community"] = communities[vertex]
        if layout is not None and vertex in layout.coords:
            x, y = layout.coords[vertex]
            attrs["pos"] = f"{format_cell(x)},{format_cell(y)}"
        lines.append(f"  {_dot_id(vertex)}{_dot_attrs(attrs)};")
    for (source, target), weight in graph.edges.items():
        lines.append(f"  {_dot_id(source)} -> {_dot_id(target)}{_dot_attrs({'weight': weight})};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def centrality_frame(ctx: PipelineContext) -> pd.DataFrame:
    """One row per user ordered by PageRank, then handle."""
    assignment = ctx.walktrap.best.assignment
    rows = []
    for user, score in rank_users(ctx.pagerank.scores):
        rows.append({
            "user": user,
            "pagerank": score,
            "hub": ctx.hits.hub[user],
            "authority": ctx.hits.authority[user],
            "betweenness": ctx.betweenness[user],
            "community": assignment[user],
        })
    return pd.DataFrame(rows)


def run_graph(ctx: PipelineContext) -> list[Path]:
    graph = ctx.user_graph
    out = ctx.output_dir
    edges = write_records(
        out,
        "graph_edges.csv",
        (
            {"source": source, "target": target, "weight": weight}
            for (source, target), weight in graph.edges.items()
        ),
        ["source", "target", "weight"],
    )
    centrality = centrality_frame(ctx)
    top = ctx.config.graph.top_users
    top_rows = []
    for measure in CENTRALITY_MEASURES:
        scores = dict(zip(centrality["user"], centrality[measure]))
        for rank, (user, score) in enumerate(rank_users(scores, top=top), start=1):
            top_rows.append({"measure": measure, "rank": rank, "user": user, "score": score})

    log_info(
        "graph",
        f"centrality_ranked: users={graph.n} top_pagerank='{centrality['user'].iloc[0]}' "
        f"pagerank_converged={ctx.pagerank.converged} hits_converged={ctx.hits.converged}",
    )
    return [
        edges,
        write_table(out, "centrality.csv", centrality),
        write_records(out, "top_users.csv", top_rows, ["measure", "rank", "user", "score"]),
    ]


def run_communities(ctx: PipelineContext) -> list[Path]:
    graph = ctx.user_graph
    result = ctx.walktrap
    partition = result.best
    out = ctx.output_dir

    members = write_records(
        out,
        "communities.csv",
        ({"user": user, "community": community} for user, community in partition.assignment.items()),
        ["user", "community"],
    )
    dendrogram = write_records(
        out,
        "dendrogram.csv",
        (
            {
                "step": step,
                "community_a": merge.community_a,
                "community_b": merge.community_b,
                "new_id": merge.new_id,
                "delta_sigma": merge.delta_sigma,
                "modularity": result.modularity_path[step],
            }
            for step, merge in enumerate(result.dendrogram.merges, start=1)
        ),
        ["step", "community_a", "community_b", "new_id", "delta_sigma", "modularity"],
    )

    threshold = ctx.config.graph.isolation_conductance
    isolated = set(isolated_communities(graph, partition, threshold))
    summary = write_records(
        out,
        "community_summary.csv",
        (
            {
                "community": community,
                "size": len(users),
                "conductance": ctx.conductance[community],
                "isolated": community in isolated,
                "members": users,
            }
            for community, users in partition.members().items()
        ),
        ["community", "size", "conductance", "isolated", "members"],
    )

    isolated_users = [user for user, c in partition.assignment.items() if c in isolated]
    subgraph = induced_subgraph(graph, isolated_users)
    dot = write_text(
        out,
        "isolated_subgraph.dot",
        graph_to_dot(
            subgraph,
            name="isolated_communities",
            communities={user: partition.assignment[user] for user in isolated_users},
        ),
    )
    log_info(
        "graph",
        f"isolated_communities: count={len(isolated)} users={len(isolated_users)} "
        f"max_conductance={threshold!r}",
    )
    return [members, dendrogram, summary, dot]


def run_layout(ctx: PipelineContext) -> list[Path]:
    layout = ctx.layout
    partition = ctx.walktrap.best
    out = ctx.output_dir
    table = write_records(
        out,
        "layout.csv",
        (
            {"user": user, "x": x, "y": y, "community": partition.assignment[user]}
            for user, (x, y) in sorted(layout.coords.items())
        ),
        ["user", "x", "y", "community"],
    )
    dot = write_text(
        out,
        "user_graph.dot",
        graph_to_dot(ctx.user_graph, communities=partition.assignment, layout=layout),
    )
    return [table, dot]
