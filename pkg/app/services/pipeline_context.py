"""Lazily computed intermediate results shared by the pipeline stages.

Each stage recomputes what it needs from the inputs named in the config, so a
subcommand run on its own produces the same bytes as the same stage inside
``all``. Within one process every intermediate is computed at most once.
"""

from __future__ import annotations

from functools import cached_property

from app import bayes, features, graph_mining, lasso, pattern_mining, trading_rl
from app.config.pipeline_config import PipelineConfig
from app.core.models import (
    DailySeries,
    EpisodeLog,
    FeatureMatrix,
    MarketEnv,
    PosteriorSamples,
    QModel,
    ReturnSeries,
    TransactionDB,
    TweetCollection,
)
from app.core.runtime import derive_seed
from app.corpus import load_tweets
from app.logger import log_info


class PipelineContext:
    def __init__(self, config: PipelineConfig):
        self.config = config

    @property
    def output_dir(self):
        return self.config.output_dir

    def seed_for(self, stage: str) -> int:
        return derive_seed(self.config.seed, stage)

    # corpus ---------------------------------------------------------------

    @cached_property
    def collection(self) -> TweetCollection:
        path = self.config.require_corpus()
        collection = load_tweets(path, self.config.corpus_format)
        log_info(
            "corpus",
            f"corpus_loaded: tweets={len(collection)} skipped={collection.skipped_count} "
            f"first_day='{collection.date_range[0]}' last_day='{collection.date_range[1]}'",
        )
        return collection

    # graph ----------------------------------------------------------------

    @cached_property
    def user_graph(self):
        graph = graph_mining.build_user_graph(self.collection, self.config.graph.edge_kinds)
        log_info("graph", f"graph_built: vertices={graph.n} edges={len(graph.edges)}")
        return graph

    @cached_property
    def pagerank(self) -> graph_mining.PageRankResult:
        cfg = self.config.graph
        return graph_mining.pagerank(
            self.user_graph, cfg.pagerank_damping, cfg.tol, cfg.max_iter
        )

    @cached_property
    def hits(self) -> graph_mining.HitsResult:
        cfg = self.config.graph
        return graph_mining.hits(self.user_graph, cfg.tol, cfg.max_iter)

    @cached_property
    def betweenness(self) -> dict[str, float]:
        return graph_mining.betweenness(self.user_graph)

    @cached_property
    def walktrap(self) -> graph_mining.WalktrapResult:
        result = graph_mining.walktrap(self.user_graph, self.config.graph.walktrap_steps)
        log_info(
            "graph",
            f"communities_found: count={result.best.community_count} "
            f"modularity={result.best_modularity!r} merges={len(result.dendrogram.merges)}",
        )
        return result

    @cached_property
    def conductance(self) -> dict[int, float]:
        return graph_mining.community_conductance(self.user_graph, self.walktrap.best)

    @cached_property
    def layout(self):
        cfg = self.config.graph
        return graph_mining.fr_layout(
            self.user_graph,
            cfg.layout_width,
            cfg.layout_height,
            cfg.layout_iterations,
            seed=self.seed_for("layout"),
        )

    # patterns -------------------------------------------------------------

    @cached_property
    def thematic_field(self):
        return self.config.require_field()

    @cached_property
    def transactions(self) -> TransactionDB:
        db = pattern_mining.build_transactions(
            self.collection, self.thematic_field, self.config.tokenizer
        )
        log_info(
            "patterns",
            f"transactions_built: kept={db.n} dropped={len(self.collection) - db.n}",
        )
        return db

    @cached_property
    def itemsets(self):
        found = pattern_mining.mine_frequent_itemsets(
            self.transactions, self.config.patterns.min_support
        )
        log_info(
            "patterns",
            f"itemsets_mined: count={len(found)} min_support={self.config.patterns.min_support!r}",
        )
        return found

    @cached_property
    def rules(self):
        found = pattern_mining.derive_rules(
            self.itemsets, self.transactions, self.config.patterns.min_confidence
        )
        log_info(
            "patterns",
            f"rules_derived: count={len(found)} "
            f"min_confidence={self.config.patterns.min_confidence!r}",
        )
        return found

    # features -------------------------------------------------------------

    @cached_property
    def keyword_series(self) -> dict[str, DailySeries]:
        series = features.keyword_daily_counts(
            self.collection, self.config.series_keywords(), self.config.tokenizer
        )
        top = self.config.series.itemset_features
        if top:
            multi = [itemset for itemset in self.itemsets if itemset.size > 1]
            multi.sort(key=lambda itemset: (-itemset.support, itemset.items))
            series.update(features.itemset_daily_counts(
                self.collection,
                [itemset.items for itemset in multi[:top]],
                self.config.tokenizer,
            ))
        return series

    @cached_property
    def normalized_series(self) -> dict[str, DailySeries]:
        method = self.config.series.normalization
        return {
            name: features.normalize_series(series, method)
            for name, series in self.keyword_series.items()
        }

    @cached_property
    def feature_matrix(self) -> FeatureMatrix:
        matrix = features.make_lag_matrix(self.normalized_series, self.config.series.lags)
        log_info(
            "features",
            f"feature_matrix_built: rows={matrix.shape[0]} columns={matrix.shape[1]}",
        )
        return matrix

    @cached_property
    def prices(self) -> DailySeries:
        return features.load_prices(self.config.require_prices())

    @cached_property
    def returns(self) -> ReturnSeries:
        return features.price_returns(self.prices)

    @cached_property
    def regression_data(self) -> tuple[FeatureMatrix, ReturnSeries]:
        x, y = features.align(self.feature_matrix, self.returns, self.config.horizon)
        log_info(
            "features",
            f"aligned: rows={len(y)} horizon={self.config.horizon} "
            f"first='{y.dates[0]}' last='{y.dates[-1]}'",
        )
        return x, y

    # models ---------------------------------------------------------------

    @cached_property
    def lasso_cv(self) -> lasso.LassoCvResult:
        cfg = self.config.lasso
        x, y = self.regression_data
        return lasso.cv_lasso(
            x,
            y,
            cfg.lambdas,
            cfg.folds,
            self.seed_for("fit-lasso"),
            n_lambdas=cfg.n_lambdas,
            lambda_min_ratio=cfg.lambda_min_ratio,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )

    @cached_property
    def posterior(self) -> PosteriorSamples:
        cfg = self.config.bayes
        x, y = self.regression_data
        return bayes.fit_bayes(x, y, cfg.prior, cfg.mcmc(self.seed_for("fit-bayes")))

    # trading --------------------------------------------------------------

    @cached_property
    def market_env(self) -> MarketEnv:
        # reward already looks one step ahead, so features pair with same-day returns
        x, r = features.align(self.feature_matrix, self.returns, horizon=0)
        cfg = self.config.qlearn
        return trading_rl.make_env(x, r, cfg.transaction_cost, episode_length=cfg.episode_length)

    @cached_property
    def q_training(self) -> tuple[QModel, EpisodeLog]:
        params = self.config.qlearn.params(self.seed_for("qlearn"))
        return trading_rl.train_q(self.market_env, params)
