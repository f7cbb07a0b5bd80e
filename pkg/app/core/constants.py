EDGE_KINDS = ("mention", "retweet")
CORPUS_FORMATS = ("jsonl", "csv")
NORMALIZATION_METHODS = ("zscore", "minmax")

DEFAULT_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)

TWEET_FIELDS = (
    "id",
    "timestamp",
    "author",
    "text",
    "mentions",
    "hashtags",
    "retweet_of",
)

DEFAULT_STOPWORDS = (
    "a", "about", "after", "all", "an", "and", "are", "as", "at", "be",
    "but", "by", "for", "from", "has", "have", "i", "in", "is", "it", "its",
    "just", "of", "on", "or", "our", "so", "that", "the", "their", "this",
    "to", "was", "we", "were", "what", "will", "with", "you", "rt",
)

# Pipeline stages in dependency order; ``all`` runs them in this order.
STAGES = (
    "ingest",
    "graph",
    "communities",
    "layout",
    "freq",
    "itemsets",
    "rules",
    "series",
    "returns",
    "fit-lasso",
    "fit-bayes",
    "qlearn",
)

DEFAULT_PIPELINE_CONFIG = {
    "seed": 20190815,
    "output_dir": "out",
    "corpus_path": None,
    "corpus_format": "jsonl",
    "price_csv": None,
    "thematic_field": [],
    "tokenizer": {
        "stopwords": list(DEFAULT_STOPWORDS),
        "min_token_len": 3,
        "strip_urls": True,
        "strip_mentions_from_tokens": True,
    },
    "graph": {
        "edge_kinds": list(EDGE_KINDS),
        "walktrap_steps": 4,
        "pagerank_damping": 0.85,
        "tol": 1e-10,
        "max_iter": 1000,
        "layout_width": 1000.0,
        "layout_height": 1000.0,
        "layout_iterations": 500,
        "isolation_conductance": 0.1,
        "top_users": 20,
    },
    "patterns": {
        "min_support": 0.01,
        "min_confidence": 0.5,
        "rule_groups": 5,
    },
    "series": {
        "keywords": [],
        "lags": [0, 1, 2],
        "normalization": "zscore",
        "itemset_features": 0,
    },
    "returns": {
        "horizon": 1,
    },
    "lasso": {
        "lambdas": None,
        "n_lambdas": 50,
        "lambda_min_ratio": 0.001,
        "folds": 5,
        "tol": 1e-10,
        "max_iter": 100000,
    },
    "bayes": {
        "coef_prior": "gaussian",
        "coef_scale": 1.0,
        "intercept_scale": 1.0,
        "sigma_scale": 1.0,
        "sigma_fixed": None,
        "likelihood": "student_t",
        "nu_fixed": None,
        "nu_rate": 1.0 / 29.0,
        "chains": 4,
        "iterations": 7000,
        "burn_in": 2000,
        "thin": 1,
    },
    "qlearn": {
        "episodes": 500,
        "alpha": 0.1,
        "alpha_decay": 0.0,
        "gamma": 0.9,
        "epsilon_start": 1.0,
        "epsilon_end": 0.05,
        "epsilon_decay": 0.99,
        "mode": "tabular",
        "bins": 3,
        "transaction_cost": 0.0,
        "episode_length": None,
    },
}
