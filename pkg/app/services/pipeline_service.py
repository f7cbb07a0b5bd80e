from __future__ import annotations

from pathlib import Path
from typing import Callable

from app.core.constants import STAGES
from app.logger import log_info
from app.services.artifact_service import write_manifest
from app.services.graph_service import run_communities, run_graph, run_layout
from app.services.ingest_service import run_ingest
from app.services.pattern_service import run_freq, run_itemsets, run_rules
from app.services.pipeline_context import PipelineContext
from app.services.qlearn_service import run_qlearn
from app.services.regression_service import run_fit_bayes, run_fit_lasso
from app.services.series_service import run_returns, run_series

StageRunner = Callable[[PipelineContext], list[Path]]

STAGE_RUNNERS: dict[str, StageRunner] = {
    "ingest": run_ingest,
    "graph": run_graph,
    "communities": run_communities,
    "layout": run_layout,
    "freq": run_freq,
    "itemsets": run_itemsets,
    "rules": run_rules,
    "series": run_series,
    "returns": run_returns,
    "fit-lasso": run_fit_lasso,
    "fit-bayes": run_fit_bayes,
    "qlearn": run_qlearn,
}

assert tuple(STAGE_RUNNERS) == STAGES


def run_stage(
    stage: str,
    ctx: PipelineContext,
    *,
    log_info_func: Callable[[str, str], None] = log_info,
) -> list[Path]:
    if stage not in STAGE_RUNNERS:
        raise ValueError(f"Unknown stage: {stage!r}")
    log_info_func("pipeline", f"stage_started: stage='{stage}'")
    written = STAGE_RUNNERS[stage](ctx)
    log_info_func("pipeline", f"stage_completed: stage='{stage}' artifacts={len(written)}")
    return written


def run_pipeline(
    command: str,
    ctx: PipelineContext,
    *,
    log_info_func: Callable[[str, str], None] = log_info,
) -> list[Path]:
    """Run one stage, or every stage in dependency order for ``all``; refresh the manifest."""
    stages = STAGES if command == "all" else (command,)
    written: list[Path] = []
    for stage in stages:
        written.extend(run_stage(stage, ctx, log_info_func=log_info_func))
    written.append(write_manifest(ctx.output_dir))
    return written
