# tests/test_models.py
import datetime as dt

import numpy as np
import pytest

from app.core.models import (
    AgentState,
    DailySeries,
    FeatureMatrix,
    Partition,
    PriorSpec,
    QModel,
    ThematicField,
    Tweet,
    TweetCollection,
    UserGraph,
    utc_day,
)


def _tweet(tweet_id, timestamp, author="alice"):
    return Tweet(id=tweet_id, timestamp=timestamp, author=author, text="hi")


def test_tweet_day_is_the_utc_calendar_day():
    tweet = _tweet("1", 1566345599.0)

    assert tweet.day == dt.date(2019, 8, 20)
    assert utc_day(1566345600.0) == dt.date(2019, 8, 21)


def test_tweet_rejects_uppercase_handles_and_negative_time():
    with pytest.raises(ValueError):
        _tweet("1", 0.0, author="Alice")
    with pytest.raises(ValueError):
        _tweet("1", -1.0)
    with pytest.raises(ValueError):
        Tweet(id="1", timestamp=0.0, author="a", text="x", mentions=("two words",))


def test_tweet_collection_sorts_by_time_then_id():
    collection = TweetCollection.from_tweets([
        _tweet("b", 10.0),
        _tweet("c", 5.0),
        _tweet("a", 10.0),
    ])

    assert [tweet.id for tweet in collection] == ["c", "a", "b"]
    assert collection.days == (dt.date(1970, 1, 1),)


def test_tweet_collection_rejects_duplicates_and_empty_input():
    with pytest.raises(ValueError):
        TweetCollection.from_tweets([_tweet("a", 1.0), _tweet("a", 2.0)])
    with pytest.raises(ValueError):
        TweetCollection.from_tweets([])


def test_thematic_field_normalizes_terms():
    field = ThematicField.from_terms(["Tesla", " #Solar "])

    assert field.terms == ("solar", "tesla")
    assert "tesla" in field
    with pytest.raises(ValueError):
        ThematicField.from_terms([])


def test_user_graph_sorts_vertices_and_rejects_self_loops():
    graph = UserGraph(vertices=("c", "a", "b"), edges={("c", "a"): 2, ("a", "b"): 1})

    assert graph.vertices == ("a", "b", "c")
    assert list(graph.edges) == [("a", "b"), ("c", "a")]
    assert graph.undirected_weights() == {("a", "b"): 1, ("a", "c"): 2}
    with pytest.raises(ValueError):
        UserGraph(vertices=("a",), edges={("a", "a"): 1})
    with pytest.raises(ValueError):
        UserGraph(vertices=("a", "b"), edges={("a", "b"): 0})


def test_partition_from_groups_labels_by_smallest_member():
    partition = Partition.from_groups([["z", "b"], ["a", "y"]])

    assert partition.members() == {0: ("a", "y"), 1: ("b", "z")}
    assert partition.community_count == 2
    assert partition.same_grouping(Partition.from_groups([["b", "z"], ["y", "a"]]))
    with pytest.raises(ValueError):
        Partition({"a": 0, "b": 2})


def test_daily_series_is_read_only_and_reports_gaps():
    series = DailySeries(
        name="close",
        days=(dt.date(2019, 8, 16), dt.date(2019, 8, 19)),
        values=[1.0, 2.0],
    )

    assert series.is_contiguous is False
    with pytest.raises(ValueError):
        series.values[0] = 5.0
    with pytest.raises(ValueError):
        DailySeries(name="x", days=(dt.date(2019, 8, 2), dt.date(2019, 8, 1)), values=[1.0, 2.0])


def test_feature_matrix_selects_rows_and_columns():
    days = (dt.date(2019, 8, 12), dt.date(2019, 8, 13), dt.date(2019, 8, 14))
    matrix = FeatureMatrix(dates=days, columns=("a", "b"), values=np.arange(6.0).reshape(3, 2))

    assert matrix.column("b").tolist() == [1.0, 3.0, 5.0]
    assert matrix.select_rows([0, 2]).dates == (days[0], days[2])
    with pytest.raises(ValueError):
        FeatureMatrix(dates=days[:1], columns=("a", "a"), values=[[1.0, 2.0]])
    with pytest.raises(ValueError):
        FeatureMatrix(dates=days[:1], columns=("a",), values=[[np.nan]])


def test_prior_spec_validates_choices():
    assert PriorSpec(likelihood="student_t").samples_nu is True
    assert PriorSpec(likelihood="student_t", nu_fixed=4.0).samples_nu is False
    assert PriorSpec(sigma_fixed=0.1).samples_sigma is False
    with pytest.raises(ValueError):
        PriorSpec(coef_prior="horseshoe")
    with pytest.raises(ValueError):
        PriorSpec(nu_fixed=2.0)


def test_agent_state_and_q_model_validate_fields():
    with pytest.raises(ValueError):
        AgentState(t=0, position="short", observation=(), terminal_t=1)
    with pytest.raises(ValueError):
        AgentState(t=3, position="flat", observation=(), terminal_t=2)
    with pytest.raises(ValueError):
        QModel(mode="deep", bins=3, low=np.zeros(1), high=np.ones(1))


def test_tweet_rejects_timestamps_without_a_calendar_day():
    with pytest.raises(ValueError, match="milliseconds"):
        _tweet("1", 1e15)

    assert _tweet("1", 253402300799.0).day == dt.date.max
