"""Seeded synthetic tweet corpus and trading-day price series.

Users live in communities and mostly mention their own community; thematic
tweets spike on an incident day, and the price series reacts to the previous
day's incident chatter so the regression and trading stages have a signal to find.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.models import (
    EPOCH_DAY,
    SECONDS_PER_DAY,
    DailySeries,
    Tweet,
    TweetCollection,
    day_range,
)
from app.corpus import serialize_jsonl
from app.logger import log_info

TOPIC_TERMS = ("tesla", "solar", "panel", "roof", "battery", "energy", "walmart", "store")
INCIDENT_TERMS = ("fire", "lawsuit", "safety")
FILLER_WORDS = (
    "today", "news", "think", "really", "big", "again", "people", "said",
    "looks", "report", "market", "new", "week", "stock", "price",
)
THEMATIC_FIELD = TOPIC_TERMS + INCIDENT_TERMS


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    seed: int = 0
    communities: int = 3
    users_per_community: int = 6
    start: dt.date = dt.date(2019, 8, 12)
    days: int = 42
    tweets_per_day: float = 12.0
    incident_day: int = 18
    incident_boost: float = 3.0
    mention_rate: float = 0.6
    retweet_rate: float = 0.15
    cross_community_rate: float = 0.05
    start_price: float = 220.0

    def __post_init__(self):
        if self.communities < 1 or self.users_per_community < 2:
            raise ValueError("need at least one community of two users")
        if self.days < 5:
            raise ValueError("days must be >= 5")
        if not 0 <= self.incident_day < self.days:
            raise ValueError("incident_day must fall inside the corpus")


@dataclass(frozen=True)
class SyntheticCorpus:
    collection: TweetCollection
    prices: DailySeries
    field: tuple[str, ...]


def _users(spec: SyntheticCorpusSpec) -> list[list[str]]:
    return [
        [f"c{community}_user{index}" for index in range(spec.users_per_community)]
        for community in range(spec.communities)
    ]


def _incident_intensity(spec: SyntheticCorpusSpec, day: int) -> float:
    distance = day - spec.incident_day
    if distance < 0:
        return 0.0
    return spec.incident_boost * 0.6**distance


def _tweet(spec, rng, users, day_index, day, serial) -> Tweet:
    community = int(rng.integers(spec.communities))
    members = users[community]
    author = members[int(rng.integers(len(members)))]

    incident = rng.random() < _incident_intensity(spec, day_index) / (1.0 + _incident_intensity(spec, day_index))
    words = list(rng.choice(TOPIC_TERMS, size=int(rng.integers(1, 4)), replace=False))
    if incident:
        words += list(rng.choice(INCIDENT_TERMS, size=int(rng.integers(1, 3)), replace=False))
    words += list(rng.choice(FILLER_WORDS, size=int(rng.integers(1, 4)), replace=False))
    rng.shuffle(words)

    mentions: list[str] = []
    retweet_of = None
    if rng.random() < spec.mention_rate:
        pool = members
        if rng.random() < spec.cross_community_rate:
            pool = users[int(rng.integers(spec.communities))]
        target = pool[int(rng.integers(len(pool)))]
        if target != author:
            mentions.append(target)
    if rng.random() < spec.retweet_rate:
        target = members[int(rng.integers(len(members)))]
        if target != author:
            retweet_of = target

    hashtag = str(words[0])
    text = " ".join(str(word) for word in words) + f" #{hashtag}"
    if mentions:
        text = f"@{mentions[0]} {text}"
    if retweet_of:
        text = f"RT @{retweet_of}: {text}"

    seconds = int(rng.integers(0, SECONDS_PER_DAY))
    timestamp = ((day - EPOCH_DAY).days * SECONDS_PER_DAY) + seconds
    return Tweet(
        id=f"{day_index:03d}{serial:04d}",
        timestamp=float(timestamp),
        author=author,
        text=text,
        mentions=tuple(mentions),
        hashtags=(hashtag,),
        retweet_of=retweet_of,
    )


def generate_corpus(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    rng = np.random.default_rng(spec.seed)
    users = _users(spec)
    days = day_range(spec.start, spec.start + dt.timedelta(days=spec.days - 1))

    tweets: list[Tweet] = []
    incident_counts = []
    for day_index, day in enumerate(days):
        count = int(rng.poisson(spec.tweets_per_day * (1.0 + _incident_intensity(spec, day_index))))
        day_tweets = [
            _tweet(spec, rng, users, day_index, day, serial) for serial in range(max(count, 1))
        ]
        incident_counts.append(
            sum(1 for tweet in day_tweets if any(term in tweet.text.split() for term in INCIDENT_TERMS))
        )
        tweets.extend(day_tweets)

    counts = np.array(incident_counts, dtype=float)
    signal = (counts - counts.mean()) / (counts.std() or 1.0)
    price = spec.start_price
    trading_days, closes = [], []
    for day_index, day in enumerate(days):
        if day.weekday() >= 5:
            continue
        if trading_days:
            previous = signal[day_index - 1] if day_index > 0 else 0.0
            change = 0.001 - 0.012 * previous + 0.008 * rng.standard_normal()
            price = max(round(price * (1.0 + change), 2), 0.01)
        trading_days.append(day)
        closes.append(price)

    log_info(
        "pipeline",
        f"synthetic_corpus_generated: tweets={len(tweets)} days={len(days)} "
        f"trading_days={len(trading_days)} seed={spec.seed}",
    )
    return SyntheticCorpus(
        collection=TweetCollection.from_tweets(tweets),
        prices=DailySeries(name="close", days=tuple(trading_days), values=closes),
        field=THEMATIC_FIELD,
    )


def write_synthetic_corpus(spec: SyntheticCorpusSpec, output_dir: Path) -> list[Path]:
    """Write ``tweets.jsonl``, ``prices.csv`` and a ``pipeline.json`` pointing at them."""
    corpus = generate_corpus(spec)
    output_dir.mkdir(parents=True, exist_ok=True)

    tweets_path = output_dir / "tweets.jsonl"
    tweets_path.write_bytes(serialize_jsonl(corpus.collection))

    prices_path = output_dir / "prices.csv"
    frame = pd.DataFrame({
        "date": [day.isoformat() for day in corpus.prices.days],
        "close": [f"{value:.2f}" for value in corpus.prices.values],
    })
    frame.to_csv(prices_path, index=False, lineterminator="\n")

    config_path = output_dir / "pipeline.json"
    config = {
        "seed": spec.seed,
        "output_dir": "out",
        "corpus_path": tweets_path.name,
        "corpus_format": "jsonl",
        "price_csv": prices_path.name,
        "thematic_field": list(corpus.field),
        "series": {"keywords": ["fire", "lawsuit", "solar", "tesla"]},
    }
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return [tweets_path, prices_path, config_path]
