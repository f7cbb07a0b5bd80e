"""Tweet corpus ingestion, canonical serialization and thematic tokenization."""

from __future__ import annotations

import io
import json
import math
import re
from pathlib import Path
from typing import BinaryIO, Iterable

import pandas as pd
from nltk.tokenize import RegexpTokenizer

from app.core.constants import CORPUS_FORMATS, TWEET_FIELDS
from app.core.errors import EmptyCorpus, UnreadableInput
from app.core.models import ThematicField, TokenizerConfig, Tweet, TweetCollection
from app.logger import log_debug, log_warning

URL_PATTERN = re.compile(r"(?:https?://|www\.)\S+")
MENTION_PATTERN = re.compile(r"@\w+")
LIST_SEPARATOR = "|"

# Unicode alphanumeric runs; underscores and punctuation split tokens.
_WORD_TOKENIZER = RegexpTokenizer(r"[^\W_]+")


def _is_missing(value) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def _parse_id(value) -> str:
    if isinstance(value, bool) or _is_missing(value):
        raise ValueError("missing id")
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    identifier = str(value).strip()
    if not identifier:
        raise ValueError("empty id")
    return identifier


def _parse_timestamp(value) -> float:
    if isinstance(value, bool) or _is_missing(value):
        raise ValueError("missing timestamp")
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    stamp = pd.Timestamp(text)
    if stamp.tzinfo is None:
        stamp = stamp.tz_localize("UTC")
    return float(stamp.tz_convert("UTC").timestamp())


def _parse_handle(value, *, prefix: str) -> str:
    if not isinstance(value, str):
        raise ValueError("handle must be a string")
    return value.strip().lstrip(prefix).lower()


def _parse_handle_list(value, *, prefix: str) -> tuple[str, ...]:
    if _is_missing(value):
        return ()
    if isinstance(value, str):
        items = [item for item in value.split(LIST_SEPARATOR) if item.strip()]
    elif isinstance(value, list):
        items = value
    else:
        raise ValueError("list field must be a list or a '|'-joined string")
    return tuple(_parse_handle(item, prefix=prefix) for item in items)


def _record_to_tweet(record: dict) -> Tweet:
    text = record.get("text")
    if not isinstance(text, str):
        raise ValueError("missing text")
    retweet_of = record.get("retweet_of")
    if _is_missing(retweet_of) or retweet_of == "":
        retweet_of = None
    else:
        retweet_of = _parse_handle(retweet_of, prefix="@")
    return Tweet(
        id=_parse_id(record.get("id")),
        timestamp=_parse_timestamp(record.get("timestamp")),
        author=_parse_handle(record.get("author"), prefix="@"),
        text=text,
        mentions=_parse_handle_list(record.get("mentions"), prefix="@"),
        hashtags=_parse_handle_list(record.get("hashtags"), prefix="#"),
        retweet_of=retweet_of,
    )


def _jsonl_records(text: str) -> tuple[list, int]:
    records = []
    malformed = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            malformed += 1
    return records, malformed


def _csv_records(text: str) -> tuple[list, int]:
    bad_lines: list[list[str]] = []

    def skip_bad_line(line: list[str]):
        bad_lines.append(line)
        return None

    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            engine="python",
            on_bad_lines=skip_bad_line,
        )
    except pd.errors.EmptyDataError:
        return [], 0
    return frame.to_dict("records"), len(bad_lines)


def parse_tweets(stream: BinaryIO | bytes, fmt: str = "jsonl") -> TweetCollection:
    """Parse a JSONL or CSV tweet dump; malformed records are skipped and counted."""
    if fmt not in CORPUS_FORMATS:
        raise ValueError(f"Unsupported corpus format: {fmt!r}")

    raw = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    try:
        text = bytes(raw).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise UnreadableInput(f"corpus is not valid UTF-8: {exc}") from exc

    records, skipped = _jsonl_records(text) if fmt == "jsonl" else _csv_records(text)

    tweets: list[Tweet] = []
    seen_ids: set[str] = set()
    for record in records:
        if not isinstance(record, dict):
            skipped += 1
            continue
        try:
            tweet = _record_to_tweet(record)
        except (ValueError, TypeError, OverflowError) as exc:
            skipped += 1
            log_debug("corpus", f"record_skipped: reason='{exc}'")
            continue
        if tweet.id in seen_ids:
            skipped += 1
            log_debug("corpus", f"record_skipped: reason='duplicate id' id='{tweet.id}'")
            continue
        seen_ids.add(tweet.id)
        tweets.append(tweet)

    if not tweets:
        raise EmptyCorpus(skipped)
    if skipped:
        log_warning("corpus", f"malformed_records_skipped: count={skipped} format='{fmt}'")

    return TweetCollection.from_tweets(tweets, skipped_count=skipped)


def load_tweets(path: str | Path, fmt: str = "jsonl") -> TweetCollection:
    with open(path, "rb") as f:
        return parse_tweets(f, fmt)


def _canonical_record(tweet: Tweet) -> dict:
    timestamp = tweet.timestamp
    return {
        "id": tweet.id,
        "timestamp": int(timestamp) if float(timestamp).is_integer() else timestamp,
        "author": tweet.author,
        "text": tweet.text,
        "mentions": list(tweet.mentions),
        "hashtags": list(tweet.hashtags),
        "retweet_of": tweet.retweet_of,
    }


def serialize_jsonl(collection: TweetCollection) -> bytes:
    """Canonical UTF-8 JSONL with keys in ``TWEET_FIELDS`` order."""
    lines = []
    for tweet in collection:
        record = _canonical_record(tweet)
        assert tuple(record) == TWEET_FIELDS
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_jsonl(collection: TweetCollection, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(serialize_jsonl(collection))
    return path


def tokenize_text(text: str, cfg: TokenizerConfig) -> list[str]:
    text = text.lower()
    if cfg.strip_urls:
        text = URL_PATTERN.sub(" ", text)
    if cfg.strip_mentions_from_tokens:
        text = MENTION_PATTERN.sub(" ", text)
    return [
        token
        for token in _WORD_TOKENIZER.tokenize(text)
        if len(token) >= cfg.min_token_len and token not in cfg.stopwords
    ]


def tokenize(tweet: Tweet, cfg: TokenizerConfig) -> list[str]:
    """Lowercase tokens in text order; hashtags appear without ``#``."""
    return tokenize_text(tweet.text, cfg)


def filter_thematic(tokens: Iterable[str], field: ThematicField) -> frozenset[str]:
    return frozenset(tokens) & field.keywords


def thematic_items(
    tweet: Tweet,
    field: ThematicField,
    cfg: TokenizerConfig,
) -> frozenset[str]:
    return filter_thematic(tokenize(tweet, cfg), field)
