from __future__ import annotations

from pathlib import Path
from typing import Sequence

from app.core.formatters import join_items
from app.core.models import AssociationRule, GroupedMatrix
from app.logger import log_info, log_warning
from app.pattern_mining import group_rules, keyword_frequencies
from app.services.artifact_service import format_cell, write_json, write_records, write_text
from app.services.pipeline_context import PipelineContext


def rules_to_dot(rules: Sequence[AssociationRule]) -> str:
    """Bipartite rule graph: item ellipses feed rule boxes that point at consequents."""
    items = sorted({item for rule in rules for item in (*rule.antecedent, *rule.consequent)})
    lines = ['digraph "rules" {']
    for item in items:
        lines.append(f'  "item:{item}" [label="{item}", shape="ellipse"];')
    for index, rule in enumerate(rules, start=1):
        node = f"rule:{index}"
        lines.append(
            f'  "{node}" [label="r{index}", shape="box", '
            f'support="{format_cell(rule.support)}", '
            f'confidence="{format_cell(rule.confidence)}", '
            f'lift="{format_cell(rule.lift)}"];'
        )
        for item in rule.antecedent:
            lines.append(f'  "item:{item}" -> "{node}";')
        for item in rule.consequent:
            lines.append(f'  "{node}" -> "item:{item}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def grouped_matrix_payload(matrix: GroupedMatrix) -> dict:
    return {
        "row_groups": [
            {
                "label": join_items(group.label_items),
                "antecedents": [join_items(antecedent) for antecedent in group.antecedents],
                "rule_count": group.rule_count,
            }
            for group in matrix.row_groups
        ],
        "columns": list(matrix.columns),
        "cells": [
            {
                "group": group,
                "consequent": consequent,
                "rule_count": cell.rule_count,
                "mean_lift": cell.mean_lift,
                "max_support": cell.max_support,
            }
            for (group, consequent), cell in matrix.cells.items()
        ],
    }


def run_freq(ctx: PipelineContext) -> list[Path]:
    frequencies = keyword_frequencies(ctx.transactions)
    ranked = sorted(frequencies.items(), key=lambda item: (-item[1], item[0]))
    return [
        write_records(
            ctx.output_dir,
            "keyword_frequencies.csv",
            ({"term": term, "count": count} for term, count in ranked),
            ["term", "count"],
        )
    ]


def run_itemsets(ctx: PipelineContext) -> list[Path]:
    return [
        write_records(
            ctx.output_dir,
            "itemsets.csv",
            (
                {"items": itemset.items, "support": itemset.support, "count": itemset.count}
                for itemset in ctx.itemsets
            ),
            ["items", "support", "count"],
        )
    ]


def run_rules(ctx: PipelineContext) -> list[Path]:
    rules = ctx.rules
    out = ctx.output_dir
    table = write_records(
        out,
        "rules.csv",
        (
            {
                "antecedent": rule.antecedent,
                "consequent": rule.consequent,
                "support": rule.support,
                "confidence": rule.confidence,
                "lift": rule.lift,
            }
            for rule in rules
        ),
        ["antecedent", "consequent", "support", "confidence", "lift"],
    )
    dot = write_text(out, "rules_graph.dot", rules_to_dot(rules))

    if not rules:
        log_warning("patterns", "grouped_matrix_skipped: rules=0")
        payload = {"row_groups": [], "columns": [], "cells": []}
    else:
        distinct = len({rule.antecedent for rule in rules})
        k = ctx.config.patterns.rule_groups
        if k > distinct:
            log_warning(
                "patterns",
                f"rule_groups_reduced: requested={k} distinct_antecedents={distinct}",
            )
            k = distinct
        payload = grouped_matrix_payload(group_rules(rules, k))
        log_info("patterns", f"rules_grouped: groups={k} rules={len(rules)}")

    return [table, dot, write_json(out, "grouped_matrix.json", payload)]
