import datetime as dt
import json

import pytest

from app.core.errors import EmptyCorpus, UnreadableInput
from app.core.models import ThematicField, TokenizerConfig, Tweet, TweetCollection
from app.corpus import (
    filter_thematic,
    load_tweets,
    parse_tweets,
    serialize_jsonl,
    thematic_items,
    tokenize,
    write_jsonl,
)


def _record(tweet_id, timestamp, author="alice", text="tesla solar", **extra):
    record = {
        "id": tweet_id,
        "timestamp": timestamp,
        "author": author,
        "text": text,
        "mentions": [],
        "hashtags": [],
        "retweet_of": None,
    }
    record.update(extra)
    return record


def _jsonl(*records) -> bytes:
    return ("\n".join(json.dumps(r) for r in records) + "\n").encode("utf-8")


def test_parse_tweets_sorts_by_timestamp_then_id():
    data = _jsonl(
        _record("b", 200),
        _record("c", 100),
        _record("a", 200),
    )

    collection = parse_tweets(data)

    assert [tweet.id for tweet in collection] == ["c", "a", "b"]
    assert collection.skipped_count == 0


def test_parse_tweets_skips_and_counts_malformed_records():
    data = _jsonl(_record("1", 10), {"id": "2", "author": "bob"}) + b"{not json\n"

    collection = parse_tweets(data)

    assert [tweet.id for tweet in collection] == ["1"]
    assert collection.skipped_count == 2


def test_parse_tweets_drops_duplicate_ids():
    data = _jsonl(_record("1", 10), _record("1", 20, text="again"))

    collection = parse_tweets(data)

    assert len(collection) == 1
    assert collection.tweets[0].text == "tesla solar"
    assert collection.skipped_count == 1


def test_parse_tweets_normalizes_handles_and_iso_timestamps():
    data = _jsonl(
        _record(
            42,
            "2019-08-20T13:10:00Z",
            author="@NewsBot",
            mentions=["@Alice"],
            hashtags=["#Tesla"],
            retweet_of="@Bob",
        )
    )

    tweet = parse_tweets(data).tweets[0]

    assert tweet.id == "42"
    assert tweet.author == "newsbot"
    assert tweet.mentions == ("alice",)
    assert tweet.hashtags == ("tesla",)
    assert tweet.retweet_of == "bob"
    assert tweet.day.isoformat() == "2019-08-20"


def test_parse_tweets_reads_csv_with_pipe_joined_lists():
    data = (
        "id,timestamp,author,text,mentions,hashtags,retweet_of\n"
        '1,100,alice,"tesla fire",bob|carol,tesla,\n'
        "2,200,bob,solar roof,,,alice\n"
    ).encode("utf-8")

    collection = parse_tweets(data, "csv")

    first, second = collection.tweets
    assert first.mentions == ("bob", "carol")
    assert first.retweet_of is None
    assert second.retweet_of == "alice"


def test_parse_tweets_raises_when_nothing_is_valid():
    with pytest.raises(EmptyCorpus) as excinfo:
        parse_tweets(b'{"id": "1"}\n')

    assert excinfo.value.skipped_count == 1


def test_parse_tweets_rejects_invalid_utf8():
    with pytest.raises(UnreadableInput):
        parse_tweets(b"\xff\xfe\xfa")


def test_parse_tweets_rejects_unknown_format():
    with pytest.raises(ValueError):
        parse_tweets(b"", "xml")


def test_serialize_jsonl_is_canonical_and_reparses_to_the_same_collection(tmp_path):
    source = tmp_path / "in.jsonl"
    source.write_bytes(
        _jsonl(
            _record("2", 20.5, author="Bob", mentions=["alice"]),
            _record("1", 10, text="Solar fire"),
        )
    )

    collection = load_tweets(source)
    written = write_jsonl(collection, tmp_path / "out.jsonl")
    reloaded = load_tweets(written)

    assert written.read_bytes() == serialize_jsonl(collection)
    assert reloaded.tweets == collection.tweets
    first_line = written.read_text(encoding="utf-8").splitlines()[0]
    assert list(json.loads(first_line)) == [
        "id", "timestamp", "author", "text", "mentions", "hashtags", "retweet_of"
    ]
    assert '"timestamp":10,' in first_line


def test_tokenize_drops_urls_mentions_stopwords_and_short_tokens():
    tweet = Tweet(
        id="1",
        timestamp=0.0,
        author="alice",
        text="RT @bob: The Tesla_Solar fire https://t.co/xyz is #BIG news",
    )
    cfg = TokenizerConfig(stopwords=frozenset({"the", "is"}), min_token_len=3)

    tokens = tokenize(tweet, cfg)

    assert tokens == ["tesla", "solar", "fire", "big", "news"]


def test_tokenize_keeps_mentions_when_not_stripped():
    tweet = Tweet(id="1", timestamp=0.0, author="alice", text="@Bob hello")
    cfg = TokenizerConfig(strip_mentions_from_tokens=False)

    assert tokenize(tweet, cfg) == ["bob", "hello"]


def test_thematic_items_intersects_tokens_with_field():
    field = ThematicField.from_terms(["tesla", "#Fire", "walmart"])
    tweet = Tweet(id="1", timestamp=0.0, author="alice", text="Tesla fire, tesla again")

    assert thematic_items(tweet, field, TokenizerConfig()) == frozenset({"tesla", "fire"})
    assert filter_thematic(["roof"], field) == frozenset()


def test_tweet_collection_rejects_unsorted_tweets():
    later = Tweet(id="1", timestamp=20.0, author="alice", text="x")
    earlier = Tweet(id="2", timestamp=10.0, author="alice", text="y")

    with pytest.raises(ValueError):
        TweetCollection(tweets=(later, earlier))

    assert TweetCollection.from_tweets([later, earlier]).tweets == (earlier, later)


def test_parse_tweets_skips_millisecond_timestamps():
    data = _jsonl(_record("1", 1566345600), _record("2", 1566345600000), _record("3", 1e15))

    collection = parse_tweets(data)

    assert [tweet.id for tweet in collection] == ["1"]
    assert collection.skipped_count == 2
    assert collection.date_range == (dt.date(2019, 8, 21), dt.date(2019, 8, 21))


@pytest.mark.parametrize(
    "text",
    [
        "RT @bob: The Tesla_Solar fire https://t.co/xyz is #BIG news",
        "Walmart roof fire http://x.co www.example.com/a",
        "naïve café, tesla!!! 2019 #solar-panel",
        "",
    ],
)
def test_tokenize_is_idempotent_on_its_own_output(text):
    cfg = TokenizerConfig(stopwords=frozenset({"the", "is"}), min_token_len=3)
    tokens = tokenize(Tweet(id="1", timestamp=0.0, author="alice", text=text), cfg)

    again = tokenize(Tweet(id="2", timestamp=0.0, author="alice", text=" ".join(tokens)), cfg)

    assert again == tokens
