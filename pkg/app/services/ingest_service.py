from __future__ import annotations

from collections import Counter
from pathlib import Path

from app.corpus import serialize_jsonl
from app.services.artifact_service import write_bytes, write_json
from app.services.pipeline_context import PipelineContext


def ingest_summary(ctx: PipelineContext) -> dict:
    collection = ctx.collection
    first, last = collection.date_range
    authors = Counter(tweet.author for tweet in collection)
    return {
        "tweets": len(collection),
        "skipped_records": collection.skipped_count,
        "authors": len(authors),
        "first_day": first,
        "last_day": last,
        "days": len(collection.days),
        "retweets": sum(1 for tweet in collection if tweet.retweet_of is not None),
        "mentions": sum(len(tweet.mentions) for tweet in collection),
        "format": ctx.config.corpus_format,
    }


def run_ingest(ctx: PipelineContext) -> list[Path]:
    out = ctx.output_dir
    return [
        write_bytes(out, "tweets.jsonl", serialize_jsonl(ctx.collection)),
        write_json(out, "ingest_summary.json", ingest_summary(ctx)),
    ]
