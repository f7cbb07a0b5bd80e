import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from app.core.constants import (
    CORPUS_FORMATS,
    DEFAULT_PIPELINE_CONFIG,
    EDGE_KINDS,
    NORMALIZATION_METHODS,
)
from app.core.errors import ConfigError
from app.core.models import (
    COEF_PRIORS,
    LIKELIHOODS,
    Q_MODES,
    McmcConfig,
    PriorSpec,
    ThematicField,
    TokenizerConfig,
)
from app.logger import log_debug, log_error
from app.trading_rl import QLearningParams


@dataclass(frozen=True)
class GraphConfig:
    edge_kinds: tuple[str, ...]
    walktrap_steps: int
    pagerank_damping: float
    tol: float
    max_iter: int
    layout_width: float
    layout_height: float
    layout_iterations: int
    isolation_conductance: float
    top_users: int


@dataclass(frozen=True)
class PatternsConfig:
    min_support: float
    min_confidence: float
    rule_groups: int


@dataclass(frozen=True)
class SeriesConfig:
    keywords: tuple[str, ...]
    lags: tuple[int, ...]
    normalization: str
    itemset_features: int


@dataclass(frozen=True)
class LassoConfig:
    lambdas: tuple[float, ...] | None
    n_lambdas: int
    lambda_min_ratio: float
    folds: int
    tol: float
    max_iter: int


@dataclass(frozen=True)
class BayesConfig:
    prior: PriorSpec
    chains: int
    iterations: int
    burn_in: int
    thin: int

    def mcmc(self, seed: int) -> McmcConfig:
        return McmcConfig(
            chains=self.chains,
            iterations=self.iterations,
            burn_in=self.burn_in,
            thin=self.thin,
            seed=seed,
        )


@dataclass(frozen=True)
class QLearnConfig:
    episodes: int
    alpha: float
    alpha_decay: float
    gamma: float
    epsilon_start: float
    epsilon_end: float
    epsilon_decay: float
    mode: str
    bins: int
    transaction_cost: float
    episode_length: int | None

    def params(self, seed: int) -> QLearningParams:
        return QLearningParams(
            episodes=self.episodes,
            alpha=self.alpha,
            alpha_decay=self.alpha_decay,
            gamma=self.gamma,
            epsilon_start=self.epsilon_start,
            epsilon_end=self.epsilon_end,
            epsilon_decay=self.epsilon_decay,
            mode=self.mode,
            bins=self.bins,
            seed=seed,
        )


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    output_dir: Path
    corpus_path: Path | None
    corpus_format: str
    price_csv: Path | None
    thematic_terms: tuple[str, ...]
    tokenizer: TokenizerConfig
    graph: GraphConfig
    patterns: PatternsConfig
    series: SeriesConfig
    horizon: int
    lasso: LassoConfig
    bayes: BayesConfig
    qlearn: QLearnConfig
    source: Path | None = None

    def require_corpus(self) -> Path:
        return _existing_file(self.corpus_path, "corpus_path")

    def require_prices(self) -> Path:
        return _existing_file(self.price_csv, "price_csv")

    def require_field(self) -> ThematicField:
        if not self.thematic_terms:
            raise ConfigError("thematic_field", "at least one term is required")
        return ThematicField.from_terms(self.thematic_terms)

    def series_keywords(self) -> ThematicField:
        """Configured keywords, or the thematic field when none are listed."""
        if self.series.keywords:
            return ThematicField.from_terms(self.series.keywords)
        return self.require_field()


@dataclass
class PipelineConfigResult:
    config: PipelineConfig | None
    error: str | None
    error_key: str | None = None

    def __iter__(self):
        yield self.config
        yield self.error

    @property
    def ok(self) -> bool:
        return self.config is not None and self.error is None


def _existing_file(path: Path | None, key: str) -> Path:
    if path is None:
        raise ConfigError(key, "path is not set")
    if not path.is_file():
        raise ConfigError(key, f"file not found: {path}")
    return path


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> tuple[str, Any]:
    """``dotted.key=value``; the value is read as JSON, else kept as a string."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(text, "override must look like 'dotted.key=value'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    result = copy.deepcopy(raw)
    for text in overrides:
        key, value = parse_override(text)
        parts = key.split(".")
        node = result
        for depth, part in enumerate(parts[:-1]):
            child = node.get(part)
            if not isinstance(child, dict):
                raise ConfigError(".".join(parts[: depth + 1]), "is not a section")
            node = child
        if parts[-1] not in node:
            raise ConfigError(key, "unknown key")
        node[parts[-1]] = value
    return result


def _check_keys(section: dict, defaults: dict, prefix: str) -> None:
    for key in section:
        if key not in defaults:
            raise ConfigError(f"{prefix}{key}", "unknown key")


def _number(raw: dict, key: str, path: str, *, minimum=None, maximum=None,
            exclusive_minimum=None, integer=False, optional=False):
    value = raw.get(key)
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"must be a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(path, f"must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
    if exclusive_minimum is not None and value <= exclusive_minimum:
        raise ConfigError(path, f"must be > {exclusive_minimum}, got {value!r}")
    if maximum is not None and value > maximum:
        raise ConfigError(path, f"must be <= {maximum}, got {value!r}")
    return value


def _choice(raw: dict, key: str, path: str, choices) -> str:
    value = raw.get(key)
    if value not in choices:
        raise ConfigError(path, f"must be one of {list(choices)}, got {value!r}")
    return value


def _bool(raw: dict, key: str, path: str) -> bool:
    value = raw.get(key)
    if not isinstance(value, bool):
        raise ConfigError(path, f"must be true or false, got {value!r}")
    return value


def _strings(raw: dict, key: str, path: str) -> tuple[str, ...]:
    value = raw.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) and v.strip() for v in value):
        raise ConfigError(path, "must be a list of non-empty strings")
    return tuple(value)


def _terms(raw: dict, key: str, path: str) -> tuple[str, ...]:
    """Keyword list whose entries must each form a valid thematic term."""
    terms = _strings(raw, key, path)
    if terms:
        try:
            ThematicField.from_terms(terms)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc
    return terms


def _path(raw: dict, key: str, base_dir: Path) -> Path | None:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(key, "must be a path string or null")
    path = Path(value)
    return path if path.is_absolute() else (base_dir / path)


def _graph(raw: dict) -> GraphConfig:
    p = "graph."
    kinds = _strings(raw, "edge_kinds", p + "edge_kinds")
    if not kinds or set(kinds) - set(EDGE_KINDS):
        raise ConfigError(p + "edge_kinds", f"must be a non-empty subset of {list(EDGE_KINDS)}")
    return GraphConfig(
        edge_kinds=kinds,
        walktrap_steps=_number(raw, "walktrap_steps", p + "walktrap_steps", minimum=1, integer=True),
        pagerank_damping=_number(raw, "pagerank_damping", p + "pagerank_damping",
                                 exclusive_minimum=0.0, maximum=0.999999),
        tol=_number(raw, "tol", p + "tol", exclusive_minimum=0.0),
        max_iter=_number(raw, "max_iter", p + "max_iter", minimum=1, integer=True),
        layout_width=_number(raw, "layout_width", p + "layout_width", exclusive_minimum=0.0),
        layout_height=_number(raw, "layout_height", p + "layout_height", exclusive_minimum=0.0),
        layout_iterations=_number(raw, "layout_iterations", p + "layout_iterations",
                                  minimum=0, integer=True),
        isolation_conductance=_number(raw, "isolation_conductance", p + "isolation_conductance",
                                      minimum=0.0, maximum=1.0),
        top_users=_number(raw, "top_users", p + "top_users", minimum=1, integer=True),
    )


def _patterns(raw: dict) -> PatternsConfig:
    p = "patterns."
    return PatternsConfig(
        min_support=_number(raw, "min_support", p + "min_support", exclusive_minimum=0.0, maximum=1.0),
        min_confidence=_number(raw, "min_confidence", p + "min_confidence",
                               exclusive_minimum=0.0, maximum=1.0),
        rule_groups=_number(raw, "rule_groups", p + "rule_groups", minimum=1, integer=True),
    )


def _series(raw: dict) -> SeriesConfig:
    p = "series."
    lags = raw.get("lags")
    if not isinstance(lags, list) or not lags:
        raise ConfigError(p + "lags", "must be a non-empty list of integers >= 0")
    parsed_lags = tuple(
        _number({"lag": lag}, "lag", p + "lags", minimum=0, integer=True) for lag in lags
    )
    return SeriesConfig(
        keywords=_terms(raw, "keywords", p + "keywords"),
        lags=tuple(sorted(set(parsed_lags))),
        normalization=_choice(raw, "normalization", p + "normalization", NORMALIZATION_METHODS),
        itemset_features=_number(raw, "itemset_features", p + "itemset_features",
                                 minimum=0, integer=True),
    )


def _lasso(raw: dict) -> LassoConfig:
    p = "lasso."
    lambdas = raw.get("lambdas")
    if lambdas is not None:
        if not isinstance(lambdas, list) or not lambdas:
            raise ConfigError(p + "lambdas", "must be null or a non-empty list of numbers >= 0")
        lambdas = tuple(
            _number({"lam": lam}, "lam", p + "lambdas", minimum=0.0) for lam in lambdas
        )
    return LassoConfig(
        lambdas=lambdas,
        n_lambdas=_number(raw, "n_lambdas", p + "n_lambdas", minimum=1, integer=True),
        lambda_min_ratio=_number(raw, "lambda_min_ratio", p + "lambda_min_ratio",
                                 exclusive_minimum=0.0, maximum=0.999999),
        folds=_number(raw, "folds", p + "folds", minimum=2, integer=True),
        tol=_number(raw, "tol", p + "tol", exclusive_minimum=0.0),
        max_iter=_number(raw, "max_iter", p + "max_iter", minimum=1, integer=True),
    )


def _bayes(raw: dict) -> BayesConfig:
    p = "bayes."
    prior = PriorSpec(
        coef_prior=_choice(raw, "coef_prior", p + "coef_prior", COEF_PRIORS),
        coef_scale=_number(raw, "coef_scale", p + "coef_scale", exclusive_minimum=0.0),
        intercept_scale=_number(raw, "intercept_scale", p + "intercept_scale", exclusive_minimum=0.0),
        sigma_scale=_number(raw, "sigma_scale", p + "sigma_scale", exclusive_minimum=0.0),
        sigma_fixed=_number(raw, "sigma_fixed", p + "sigma_fixed", exclusive_minimum=0.0, optional=True),
        likelihood=_choice(raw, "likelihood", p + "likelihood", LIKELIHOODS),
        nu_fixed=_number(raw, "nu_fixed", p + "nu_fixed", exclusive_minimum=2.0, optional=True),
        nu_rate=_number(raw, "nu_rate", p + "nu_rate", exclusive_minimum=0.0),
    )
    config = BayesConfig(
        prior=prior,
        chains=_number(raw, "chains", p + "chains", minimum=2, integer=True),
        iterations=_number(raw, "iterations", p + "iterations", minimum=1, integer=True),
        burn_in=_number(raw, "burn_in", p + "burn_in", minimum=0, integer=True),
        thin=_number(raw, "thin", p + "thin", minimum=1, integer=True),
    )
    try:
        config.mcmc(0)
    except ValueError as exc:
        raise ConfigError(p + "iterations", str(exc)) from exc
    return config


def _qlearn(raw: dict) -> QLearnConfig:
    p = "qlearn."
    return QLearnConfig(
        episodes=_number(raw, "episodes", p + "episodes", minimum=1, integer=True),
        alpha=_number(raw, "alpha", p + "alpha", exclusive_minimum=0.0, maximum=1.0),
        alpha_decay=_number(raw, "alpha_decay", p + "alpha_decay", minimum=0.0),
        gamma=_number(raw, "gamma", p + "gamma", minimum=0.0, maximum=1.0),
        epsilon_start=_number(raw, "epsilon_start", p + "epsilon_start", minimum=0.0, maximum=1.0),
        epsilon_end=_number(raw, "epsilon_end", p + "epsilon_end", minimum=0.0, maximum=1.0),
        epsilon_decay=_number(raw, "epsilon_decay", p + "epsilon_decay", minimum=0.0, maximum=1.0),
        mode=_choice(raw, "mode", p + "mode", Q_MODES),
        bins=_number(raw, "bins", p + "bins", minimum=1, integer=True),
        transaction_cost=_number(raw, "transaction_cost", p + "transaction_cost", minimum=0.0),
        episode_length=_number(raw, "episode_length", p + "episode_length",
                               minimum=1, integer=True, optional=True),
    )


def _tokenizer(raw: dict) -> TokenizerConfig:
    p = "tokenizer."
    stopwords = raw.get("stopwords")
    if not isinstance(stopwords, list) or not all(isinstance(w, str) for w in stopwords):
        raise ConfigError(p + "stopwords", "must be a list of strings")
    return TokenizerConfig(
        stopwords=frozenset(stopwords),
        min_token_len=_number(raw, "min_token_len", p + "min_token_len", minimum=1, integer=True),
        strip_urls=_bool(raw, "strip_urls", p + "strip_urls"),
        strip_mentions_from_tokens=_bool(raw, "strip_mentions_from_tokens",
                                         p + "strip_mentions_from_tokens"),
    )


def build_pipeline_config(raw: dict, base_dir: Path, source: Path | None = None) -> PipelineConfig:
    """Validate a merged config tree; every failure names its dotted key."""
    _check_keys(raw, DEFAULT_PIPELINE_CONFIG, "")
    for section, defaults in DEFAULT_PIPELINE_CONFIG.items():
        if isinstance(defaults, dict):
            if not isinstance(raw.get(section), dict):
                raise ConfigError(section, "must be an object")
            _check_keys(raw[section], defaults, f"{section}.")

    output_dir = raw.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir.strip():
        raise ConfigError("output_dir", "must be a non-empty path string")
    output_path = Path(output_dir)

    terms = _terms(raw, "thematic_field", "thematic_field")

    return PipelineConfig(
        seed=_number(raw, "seed", "seed", minimum=0, integer=True),
        output_dir=output_path if output_path.is_absolute() else base_dir / output_path,
        corpus_path=_path(raw, "corpus_path", base_dir),
        corpus_format=_choice(raw, "corpus_format", "corpus_format", CORPUS_FORMATS),
        price_csv=_path(raw, "price_csv", base_dir),
        thematic_terms=tuple(terms),
        tokenizer=_tokenizer(raw["tokenizer"]),
        graph=_graph(raw["graph"]),
        patterns=_patterns(raw["patterns"]),
        series=_series(raw["series"]),
        horizon=_number(raw["returns"], "horizon", "returns.horizon", minimum=0, integer=True),
        lasso=_lasso(raw["lasso"]),
        bayes=_bayes(raw["bayes"]),
        qlearn=_qlearn(raw["qlearn"]),
        source=source,
    )


def load_pipeline_config(path=None, overrides: Iterable[str] = ()) -> PipelineConfigResult:
    """
    Load the pipeline configuration: defaults, then the JSON file, then overrides.
    Returns: (config, error_message)
    """
    raw = copy.deepcopy(DEFAULT_PIPELINE_CONFIG)
    base_dir = Path.cwd()
    source = None

    try:
        if path is not None:
            source = Path(path).resolve()
            if not source.is_file():
                raise ConfigError("config", f"config file not found: {source}")
            with open(source, "r", encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, dict):
                raise ConfigError("config", "top level must be a JSON object")
            raw = _deep_merge(raw, data)
            base_dir = source.parent
            log_debug("config", f"pipeline_config_loaded: path='{source}'")

        raw = apply_overrides(raw, overrides)
        config = build_pipeline_config(raw, base_dir, source)
        return PipelineConfigResult(config, None)

    except json.JSONDecodeError as e:
        msg = f"config: invalid JSON: {e}"
        log_error("config", msg)
        return PipelineConfigResult(None, msg, "config")
    except ConfigError as e:
        msg = str(e)
        log_error("config", f"pipeline_config_invalid: key='{e.key}' error='{e.message}'")
        return PipelineConfigResult(None, msg, e.key)
