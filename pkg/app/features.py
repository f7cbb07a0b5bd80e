"""Daily keyword series, normalization, lag matrices and the price-return target."""

from __future__ import annotations

import datetime as dt
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from app.core.constants import NORMALIZATION_METHODS
from app.core.errors import (
    FeatureError,
    LagTooLarge,
    NonpositivePrice,
    NoOverlap,
    SeriesMismatch,
)
from app.core.models import (
    DailySeries,
    FeatureMatrix,
    ReturnSeries,
    ThematicField,
    TokenizerConfig,
    TweetCollection,
)
from app.corpus import tokenize

ITEMSET_SEPARATOR = "&"


def _daily_count_table(
    collection: TweetCollection,
    names: Sequence[str],
    hits: Iterable[tuple[dt.date, str]],
) -> pd.DataFrame:
    """Per-day counts for ``names`` over the collection's full day span."""
    days = list(collection.days)
    frame = pd.DataFrame(list(hits), columns=["day", "name"])
    if frame.empty:
        return pd.DataFrame(0, index=days, columns=list(names))
    table = pd.crosstab(frame["day"], frame["name"])
    return table.reindex(index=days, columns=list(names), fill_value=0)


def _series_from_table(table: pd.DataFrame) -> dict[str, DailySeries]:
    days = tuple(table.index)
    return {
        name: DailySeries(name=name, days=days, values=table[name].to_numpy(dtype=float))
        for name in table.columns
    }


def keyword_daily_counts(
    collection: TweetCollection,
    keywords: ThematicField,
    cfg: TokenizerConfig,
) -> dict[str, DailySeries]:
    """Number of tweets per UTC day containing each keyword, zero on silent days.

    Counts are tweet-level: a keyword repeated inside one tweet counts once.
    """
    terms = keywords.terms

    def hits():
        for tweet in collection:
            tokens = set(tokenize(tweet, cfg))
            for term in terms:
                if term in tokens:
                    yield tweet.day, term

    return _series_from_table(_daily_count_table(collection, terms, hits()))


def itemset_daily_counts(
    collection: TweetCollection,
    itemsets: Iterable[Sequence[str]],
    cfg: TokenizerConfig,
) -> dict[str, DailySeries]:
    """Tweets per day containing every item of an itemset; series named ``a&b``."""
    wanted = {
        ITEMSET_SEPARATOR.join(sorted(items)): frozenset(items)
        for items in itemsets
    }
    if not wanted:
        return {}

    def hits():
        for tweet in collection:
            tokens = set(tokenize(tweet, cfg))
            for name, items in wanted.items():
                if items <= tokens:
                    yield tweet.day, name

    return _series_from_table(_daily_count_table(collection, list(wanted), hits()))


def normalize_series(series: DailySeries, method: str = "zscore") -> DailySeries:
    """zscore uses the population std; constant series become all zeros."""
    if method not in NORMALIZATION_METHODS:
        raise ValueError(f"Unknown normalization method: {method!r}")
    if len(series) == 0:
        raise FeatureError(f"series {series.name!r} is empty")

    values = series.values
    if np.ptp(values) == 0:
        normalized = np.zeros_like(values)
    elif method == "zscore":
        normalized = (values - values.mean()) / values.std()
    else:
        normalized = (values - values.min()) / (values.max() - values.min())
    return DailySeries(name=series.name, days=series.days, values=normalized)


def _as_series_list(series: Mapping[str, DailySeries] | Iterable[DailySeries]) -> list[DailySeries]:
    if isinstance(series, Mapping):
        return list(series.values())
    return list(series)


def make_lag_matrix(
    series: Mapping[str, DailySeries] | Iterable[DailySeries],
    lags: Iterable[int],
) -> FeatureMatrix:
    """Columns ``<name>_lag<k>`` holding ``series[t - k]``; the first max(lag) rows are dropped."""
    series_list = _as_series_list(series)
    lags = sorted(set(lags))
    if not series_list:
        raise FeatureError("make_lag_matrix needs at least one series")
    if not lags:
        raise ValueError("lags must be non-empty")
    if lags[0] < 0:
        raise ValueError("lags must be >= 0")

    days = series_list[0].days
    for item in series_list[1:]:
        if item.days != days:
            raise SeriesMismatch(
                f"series {item.name!r} does not share the day axis of {series_list[0].name!r}"
            )
    max_lag = lags[-1]
    if max_lag >= len(days):
        raise LagTooLarge(f"max lag {max_lag} needs more than {len(days)} days")

    frame = pd.DataFrame({item.name: item.values for item in series_list}, index=list(days))
    lagged = pd.DataFrame(
        {
            f"{item.name}_lag{lag}": frame[item.name].shift(lag)
            for item in series_list
            for lag in lags
        },
        index=frame.index,
    ).iloc[max_lag:]

    return FeatureMatrix(
        dates=tuple(lagged.index),
        columns=tuple(lagged.columns),
        values=lagged.to_numpy(dtype=float),
    )


def load_prices(path: str | Path) -> DailySeries:
    """Closing prices from a ``date,close`` CSV with ISO-8601 dates."""
    try:
        frame = pd.read_csv(path, dtype={"date": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise FeatureError(f"cannot read price file {path}: {exc}") from exc

    missing = {"date", "close"} - set(frame.columns)
    if missing:
        raise FeatureError(f"price file {path} lacks columns: {sorted(missing)}")
    try:
        days = pd.to_datetime(frame["date"], format="%Y-%m-%d").dt.date
        closes = pd.to_numeric(frame["close"])
    except (ValueError, TypeError) as exc:
        raise FeatureError(f"price file {path} has malformed rows: {exc}") from exc

    prices = pd.Series(closes.to_numpy(dtype=float), index=list(days)).sort_index()
    if prices.index.has_duplicates:
        raise FeatureError(f"price file {path} repeats a date")
    try:
        return DailySeries(name="close", days=tuple(prices.index), values=prices.to_numpy())
    except ValueError as exc:
        raise FeatureError(f"price file {path}: {exc}") from exc


def price_returns(prices: DailySeries) -> ReturnSeries:
    """``r_t = (p_t - p_{t-1}) / p_{t-1}`` dated at day t."""
    if len(prices) < 2:
        raise FeatureError("price_returns needs at least two prices")
    values = prices.values
    if np.any(values <= 0):
        raise NonpositivePrice(f"series {prices.name!r} contains a price <= 0")
    return ReturnSeries(dates=prices.days[1:], returns=np.diff(values) / values[:-1])


def align(
    x: FeatureMatrix,
    y: ReturnSeries,
    horizon: int = 1,
) -> tuple[FeatureMatrix, ReturnSeries]:
    """Pair features on common day i with the return on common day i + horizon.

    Days are intersected by calendar date first, so non-trading feature days
    drop out. Both outputs carry the feature dates.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")

    common = sorted(set(x.dates) & set(y.dates))
    pairs = len(common) - horizon
    if pairs <= 0:
        raise NoOverlap(
            f"{len(common)} shared days leave no rows at horizon {horizon}"
        )

    x_row = {day: i for i, day in enumerate(x.dates)}
    y_row = {day: i for i, day in enumerate(y.dates)}
    feature_rows = [x_row[day] for day in common[:pairs]]
    target_rows = [y_row[day] for day in common[horizon:]]

    return (
        x.select_rows(feature_rows),
        ReturnSeries(dates=tuple(common[:pairs]), returns=y.returns[target_rows]),
    )
