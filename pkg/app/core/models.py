from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np

from app.core.errors import Misaligned

EPOCH_DAY = dt.date(1970, 1, 1)
SECONDS_PER_DAY = 86400
# last second of dt.date.max; later timestamps have no calendar day
MAX_TIMESTAMP = float((dt.date.max - EPOCH_DAY).days * SECONDS_PER_DAY + SECONDS_PER_DAY - 1)


def utc_day(timestamp: float) -> dt.date:
    return EPOCH_DAY + dt.timedelta(days=int(timestamp // SECONDS_PER_DAY))


def day_range(first: dt.date, last: dt.date) -> tuple[dt.date, ...]:
    span = (last - first).days
    return tuple(first + dt.timedelta(days=offset) for offset in range(span + 1))


def _frozen_array(values, *, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got {array.ndim}")
    array.setflags(write=False)
    return array


def _is_handle(value) -> bool:
    return (
        isinstance(value, str)
        and bool(value)
        and value == value.lower()
        and not any(ch.isspace() for ch in value)
    )


# -------------------------
# corpus
# -------------------------

@dataclass(frozen=True)
class Tweet:
    id: str
    timestamp: float
    author: str
    text: str
    mentions: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    retweet_of: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("Tweet id must be a non-empty string")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"Tweet {self.id}: timestamp must be finite and >= 0")
        if self.timestamp > MAX_TIMESTAMP:
            raise ValueError(
                f"Tweet {self.id}: timestamp {self.timestamp!r} is past the last calendar day "
                "(milliseconds instead of seconds?)"
            )
        handles = [self.author, *self.mentions, *self.hashtags]
        if self.retweet_of is not None:
            handles.append(self.retweet_of)
        for handle in handles:
            if not _is_handle(handle):
                raise ValueError(
                    f"Tweet {self.id}: handle/tag {handle!r} must be lowercase "
                    "without whitespace"
                )

    @property
    def day(self) -> dt.date:
        return utc_day(self.timestamp)


@dataclass(frozen=True)
class TweetCollection:
    """Tweets sorted by ``(timestamp, id)`` with the parse skip counter."""

    tweets: tuple[Tweet, ...]
    skipped_count: int = 0

    def __post_init__(self):
        if not self.tweets:
            raise ValueError("TweetCollection must contain at least one tweet")
        seen: set[str] = set()
        previous = None
        for tweet in self.tweets:
            if tweet.id in seen:
                raise ValueError(f"Duplicate tweet id: {tweet.id}")
            seen.add(tweet.id)
            key = (tweet.timestamp, tweet.id)
            if previous is not None and key < previous:
                raise ValueError("TweetCollection must be sorted by (timestamp, id)")
            previous = key

    @classmethod
    def from_tweets(
        cls,
        tweets: Iterable[Tweet],
        *,
        skipped_count: int = 0,
    ) -> "TweetCollection":
        ordered = sorted(tweets, key=lambda tweet: (tweet.timestamp, tweet.id))
        return cls(tweets=tuple(ordered), skipped_count=skipped_count)

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self.tweets)

    @property
    def date_range(self) -> tuple[dt.date, dt.date]:
        return self.tweets[0].day, self.tweets[-1].day

    @property
    def days(self) -> tuple[dt.date, ...]:
        return day_range(*self.date_range)


@dataclass(frozen=True)
class ThematicField:
    keywords: frozenset[str]

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("Thematic field must contain at least one keyword")
        for term in self.keywords:
            if not _is_handle(term):
                raise ValueError(
                    f"Thematic term {term!r} must be non-empty lowercase "
                    "without whitespace"
                )

    @classmethod
    def from_terms(cls, terms: Iterable[str]) -> "ThematicField":
        return cls(
            frozenset(term.strip().lstrip("#").lower() for term in terms)
        )

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(sorted(self.keywords))

    def __contains__(self, term: str) -> bool:
        return term in self.keywords


@dataclass(frozen=True)
class TokenizerConfig:
    stopwords: frozenset[str] = frozenset()
    min_token_len: int = 1
    strip_urls: bool = True
    strip_mentions_from_tokens: bool = True

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        object.__setattr__(
            self,
            "stopwords",
            frozenset(word.lower() for word in self.stopwords),
        )


# -------------------------
# graph_mining
# -------------------------

@dataclass(frozen=True, eq=False)
class UserGraph:
    """Directed interaction graph; vertices are kept in sorted order."""

    vertices: tuple[str, ...]
    edges: Mapping[tuple[str, str], int]

    def __post_init__(self):
        vertices = list(self.vertices)
        if len(set(vertices)) != len(vertices):
            raise ValueError("UserGraph vertices must be unique")
        vertex_set = set(vertices)
        for (source, target), weight in self.edges.items():
            if source == target:
                raise ValueError(f"Self-loop on {source!r} is not allowed")
            if source not in vertex_set or target not in vertex_set:
                raise ValueError(f"Edge ({source!r}, {target!r}) has an unknown endpoint")
            if int(weight) != weight or weight < 1:
                raise ValueError(f"Edge ({source!r}, {target!r}) weight must be an integer >= 1")
        object.__setattr__(self, "vertices", tuple(sorted(vertices)))
        object.__setattr__(
            self,
            "edges",
            MappingProxyType({key: int(w) for key, w in sorted(self.edges.items())}),
        )

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def index(self) -> dict[str, int]:
        return {vertex: i for i, vertex in enumerate(self.vertices)}

    def undirected_weights(self) -> dict[tuple[str, str], int]:
        """Symmetrized weights keyed by ``(u, v)`` with ``u < v``."""
        weights: dict[tuple[str, str], int] = {}
        for (source, target), weight in self.edges.items():
            key = (source, target) if source < target else (target, source)
            weights[key] = weights.get(key, 0) + weight
        return dict(sorted(weights.items()))

    def adjacency(self) -> np.ndarray:
        index = self.index
        matrix = np.zeros((self.n, self.n))
        for (source, target), weight in self.edges.items():
            matrix[index[source], index[target]] = weight
        return matrix

    def undirected_adjacency(self) -> np.ndarray:
        matrix = self.adjacency()
        return matrix + matrix.T


@dataclass(frozen=True, eq=False)
class Partition:
    assignment: Mapping[str, int]

    def __post_init__(self):
        ids = set(self.assignment.values())
        if ids != set(range(len(ids))):
            raise ValueError("Community ids must be contiguous from 0")
        object.__setattr__(
            self,
            "assignment",
            MappingProxyType(dict(sorted(self.assignment.items()))),
        )

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[str]]) -> "Partition":
        """Label communities in order of their smallest member."""
        ordered = sorted((sorted(group) for group in groups), key=lambda g: g[0])
        return cls({
            vertex: community
            for community, group in enumerate(ordered)
            for vertex in group
        })

    @property
    def community_count(self) -> int:
        return len(set(self.assignment.values()))

    def members(self) -> dict[int, tuple[str, ...]]:
        groups: dict[int, list[str]] = {}
        for vertex, community in self.assignment.items():
            groups.setdefault(community, []).append(vertex)
        return {community: tuple(sorted(groups[community])) for community in sorted(groups)}

    def same_grouping(self, other: "Partition") -> bool:
        return set(self.members().values()) == set(other.members().values())


@dataclass(frozen=True)
class Merge:
    community_a: int
    community_b: int
    new_id: int
    delta_sigma: float


@dataclass(frozen=True)
class Dendrogram:
    leaf_count: int
    merges: tuple[Merge, ...]


@dataclass(frozen=True, eq=False)
class Layout:
    coords: Mapping[str, tuple[float, float]]
    width: float
    height: float

    def __post_init__(self):
        for vertex, (x, y) in self.coords.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"Non-finite coordinate for {vertex!r}")
            if not (0.0 <= x <= self.width and 0.0 <= y <= self.height):
                raise ValueError(f"Coordinate for {vertex!r} lies outside the frame")


# -------------------------
# pattern_mining
# -------------------------

@dataclass(frozen=True)
class TransactionDB:
    transactions: tuple[frozenset[str], ...]
    field: ThematicField

    def __post_init__(self):
        for transaction in self.transactions:
            if not transaction:
                raise ValueError("Empty transactions are not stored")
            unknown = transaction - self.field.keywords
            if unknown:
                raise ValueError(f"Items outside the thematic field: {sorted(unknown)}")

    @property
    def n(self) -> int:
        return len(self.transactions)

    def count(self, items: Iterable[str]) -> int:
        wanted = frozenset(items)
        return sum(1 for transaction in self.transactions if wanted <= transaction)


@dataclass(frozen=True)
class Itemset:
    items: tuple[str, ...]
    support: float
    count: int

    def __post_init__(self):
        if not self.items:
            raise ValueError("Itemset must be non-empty")
        if list(self.items) != sorted(set(self.items)):
            raise ValueError("Itemset items must be sorted and unique")

    @property
    def size(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class AssociationRule:
    antecedent: tuple[str, ...]
    consequent: tuple[str, ...]
    support: float
    confidence: float
    lift: float
    count: int

    def __post_init__(self):
        if not self.antecedent or not self.consequent:
            raise ValueError("Rule sides must be non-empty")
        if set(self.antecedent) & set(self.consequent):
            raise ValueError("Rule sides must be disjoint")


@dataclass(frozen=True)
class RuleGroup:
    label_items: tuple[str, ...]
    antecedents: tuple[tuple[str, ...], ...]
    rule_count: int


@dataclass(frozen=True)
class GroupedCell:
    rule_count: int
    mean_lift: float
    max_support: float


@dataclass(frozen=True, eq=False)
class GroupedMatrix:
    row_groups: tuple[RuleGroup, ...]
    columns: tuple[str, ...]
    cells: Mapping[tuple[int, str], GroupedCell]

    @property
    def rule_count(self) -> int:
        return sum(cell.rule_count for cell in self.cells.values())


# -------------------------
# features
# -------------------------

@dataclass(frozen=True, eq=False)
class DailySeries:
    """Values per UTC day. Keyword series are gap-free; price series hold
    trading days only, so contiguity is reported rather than enforced."""

    name: str
    days: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(self.days))
        object.__setattr__(self, "values", _frozen_array(self.values, ndim=1))
        if len(self.days) != len(self.values):
            raise ValueError(f"Series {self.name!r}: days and values differ in length")
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise ValueError(f"Series {self.name!r}: days must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"Series {self.name!r}: values must be finite")

    def __len__(self) -> int:
        return len(self.days)

    @property
    def is_contiguous(self) -> bool:
        return all((b - a).days == 1 for a, b in zip(self.days, self.days[1:]))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    dates: tuple[dt.date, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "columns", tuple(self.columns))
        values = np.array(self.values, dtype=float, copy=True).reshape(
            len(self.dates), len(self.columns)
        )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("Feature column names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("Feature matrix contains non-finite entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select_rows(self, rows) -> "FeatureMatrix":
        rows = list(rows)
        return FeatureMatrix(
            dates=tuple(self.dates[i] for i in rows),
            columns=self.columns,
            values=self.values[rows, :],
        )


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    dates: tuple[dt.date, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _frozen_array(self.returns, ndim=1))
        if len(self.dates) != len(self.returns):
            raise ValueError("ReturnSeries dates and returns differ in length")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("ReturnSeries contains non-finite returns")

    def __len__(self) -> int:
        return len(self.dates)

    def select_rows(self, rows) -> "ReturnSeries":
        rows = list(rows)
        return ReturnSeries(
            dates=tuple(self.dates[i] for i in rows),
            returns=self.returns[rows],
        )


# -------------------------
# models
# -------------------------

@dataclass(frozen=True)
class LassoModel:
    coefficients: Mapping[str, float]
    intercept: float
    lam: float
    standardization: Mapping[str, tuple[float, float]]
    converged: bool = True
    n_iter: int = 0
    objective_path: tuple[float, ...] = ()
    dropped_features: tuple[str, ...] = ()

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    @property
    def nonzero_count(self) -> int:
        return sum(1 for value in self.coefficients.values() if value != 0.0)


COEF_PRIORS = ("gaussian", "laplace")
LIKELIHOODS = ("gaussian", "student_t")


@dataclass(frozen=True)
class PriorSpec:
    """Priors on the standardized design.

    ``sigma_fixed`` pins the scale (no sigma block is sampled); with the
    Student-t likelihood ``nu_fixed`` pins the degrees of freedom, otherwise
    ``nu - 2 ~ Exponential(nu_rate)``.
    """

    coef_prior: str = "gaussian"
    coef_scale: float = 1.0
    intercept_scale: float = 1.0
    sigma_scale: float = 1.0
    sigma_fixed: float | None = None
    likelihood: str = "gaussian"
    nu_fixed: float | None = None
    nu_rate: float = 1.0 / 29.0

    def __post_init__(self):
        if self.coef_prior not in COEF_PRIORS:
            raise ValueError(f"coef_prior must be one of {COEF_PRIORS}")
        if self.likelihood not in LIKELIHOODS:
            raise ValueError(f"likelihood must be one of {LIKELIHOODS}")
        for name in ("coef_scale", "intercept_scale", "sigma_scale", "nu_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.sigma_fixed is not None and not self.sigma_fixed > 0:
            raise ValueError("sigma_fixed must be > 0")
        if self.nu_fixed is not None and not self.nu_fixed > 2:
            raise ValueError("nu_fixed must be > 2")

    @property
    def samples_sigma(self) -> bool:
        return self.sigma_fixed is None

    @property
    def samples_nu(self) -> bool:
        return self.likelihood == "student_t" and self.nu_fixed is None


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iterations: int = 7000
    burn_in: int = 2000
    thin: int = 1
    seed: int = 0
    initial_step: float = 0.5
    adapt_interval: int = 50
    target_acceptance: tuple[float, float] = (0.2, 0.4)

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("chains must be >= 2")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must be in [0, iterations)")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if (self.iterations - self.burn_in) % self.thin != 0:
            raise ValueError("iterations - burn_in must be divisible by thin")
        if self.kept_per_chain < 4:
            raise ValueError("each chain must keep at least 4 draws")
        if self.initial_step <= 0 or self.adapt_interval < 1:
            raise ValueError("initial_step must be > 0 and adapt_interval >= 1")

    @property
    def kept_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Kept draws stacked chain by chain (``draws_per_chain`` rows each)."""

    param_names: tuple[str, ...]
    draws: np.ndarray
    chains: int
    seed: int
    acceptance: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    rhat: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        draws = np.array(self.draws, dtype=float, copy=True)
        if draws.ndim != 2 or draws.shape[1] != len(self.param_names):
            raise ValueError("draws must be (n_kept x n_params)")
        if draws.shape[0] == 0 or draws.shape[0] % self.chains != 0:
            raise ValueError("draws must split evenly across chains")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def draws_per_chain(self) -> int:
        return self.draws.shape[0] // self.chains

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.param_names.index(name)]

    def chain_draws(self, name: str) -> np.ndarray:
        return self.column(name).reshape(self.chains, self.draws_per_chain)


# -------------------------
# trading_rl
# -------------------------

ACTIONS = ("buy", "hold", "sell")
POSITIONS = ("flat", "long")
Q_MODES = ("tabular", "linear")


@dataclass(frozen=True, eq=False)
class MarketEnv:
    dates: tuple[dt.date, ...]
    features: np.ndarray
    returns: np.ndarray
    transaction_cost: float = 0.0
    episode_length: int | None = None
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        features = np.array(self.features, dtype=float, copy=True)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "returns", _frozen_array(self.returns, ndim=1))
        length = len(self.returns)
        if features.shape[0] != length or len(self.dates) != length:
            raise Misaligned("features, returns and dates must have equal length")
        if length < 2:
            raise Misaligned("environment needs at least two steps")
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(self.returns))):
            raise Misaligned("features and returns must be finite")
        if self.transaction_cost < 0:
            raise ValueError("transaction_cost must be >= 0")
        if self.episode_length is not None and not 1 <= self.episode_length <= length - 1:
            raise ValueError(f"episode_length must be in [1, {length - 1}]")

    @property
    def length(self) -> int:
        return len(self.returns)

    @property
    def steps_per_episode(self) -> int:
        return self.episode_length or self.length - 1


@dataclass(frozen=True)
class AgentState:
    t: int
    position: str
    observation: tuple[float, ...]
    terminal_t: int

    def __post_init__(self):
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}")
        if not 0 <= self.t <= self.terminal_t:
            raise ValueError("t must lie within the episode")


@dataclass
class QModel:
    mode: str
    bins: int
    low: np.ndarray
    high: np.ndarray
    table: dict[tuple[tuple[int, ...], str, str], float] = field(default_factory=dict)
    weights: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in Q_MODES:
            raise ValueError(f"mode must be one of {Q_MODES}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


@dataclass(frozen=True)
class EpisodeLog:
    cum_returns: tuple[float, ...]
    trades: tuple[int, ...]
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if not len(self.cum_returns) == len(self.trades) == len(self.epsilons):
            raise ValueError("EpisodeLog columns must have equal length")

    @property
    def episodes(self) -> int:
        return len(self.cum_returns)
