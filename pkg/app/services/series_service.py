from __future__ import annotations

from pathlib import Path
from typing import Mapping

import pandas as pd

from app.core.models import DailySeries, FeatureMatrix
from app.services.artifact_service import write_records, write_table
from app.services.pipeline_context import PipelineContext


def series_frame(series: Mapping[str, DailySeries]) -> pd.DataFrame:
    """``date`` column followed by one column per series, all on a shared day axis."""
    first = next(iter(series.values()))
    frame = pd.DataFrame({"date": list(first.days)})
    for name, item in series.items():
        frame[name] = item.values
    return frame


def matrix_frame(matrix: FeatureMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(matrix.values, columns=list(matrix.columns))
    frame.insert(0, "date", list(matrix.dates))
    return frame


def run_series(ctx: PipelineContext) -> list[Path]:
    out = ctx.output_dir
    return [
        write_table(out, "keyword_series.csv", series_frame(ctx.keyword_series)),
        write_table(out, "keyword_series_normalized.csv", series_frame(ctx.normalized_series)),
        write_table(out, "feature_matrix.csv", matrix_frame(ctx.feature_matrix)),
    ]


def run_returns(ctx: PipelineContext) -> list[Path]:
    out = ctx.output_dir
    prices, returns = ctx.prices, ctx.returns
    return [
        write_records(
            out,
            "prices.csv",
            ({"date": day, "close": close} for day, close in zip(prices.days, prices.values)),
            ["date", "close"],
        ),
        write_records(
            out,
            "returns.csv",
            ({"date": day, "return": value} for day, value in zip(returns.dates, returns.returns)),
            ["date", "return"],
        ),
    ]
