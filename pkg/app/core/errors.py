"""Error hierarchy shared by the domain modules, services and the CLI.

Every error derives from ``ValueError`` so callers that only guard against
bad input keep working; the CLI maps ``ConfigError`` to exit code 1 and every
other ``TweetSignalError`` to exit code 2.
"""

from __future__ import annotations


class TweetSignalError(ValueError):
    pass


class ConfigError(TweetSignalError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


class CorpusError(TweetSignalError):
    pass


class UnreadableInput(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    def __init__(self, skipped_count: int = 0):
        super().__init__(
            f"no valid tweet records found (skipped={skipped_count})"
        )
        self.skipped_count = skipped_count


class GraphError(TweetSignalError):
    pass


class EmptyGraph(GraphError):
    pass


class PatternError(TweetSignalError):
    pass


class NoTransactions(PatternError):
    pass


class TooFewAntecedents(PatternError):
    pass


class FeatureError(TweetSignalError):
    pass


class LagTooLarge(FeatureError):
    pass


class NonpositivePrice(FeatureError):
    pass


class NoOverlap(FeatureError):
    pass


class SeriesMismatch(FeatureError):
    pass


class ModelError(TweetSignalError):
    pass


class DegenerateTarget(ModelError):
    pass


class NotConverged(ModelError):
    def __init__(self, iterations: int, message: str | None = None):
        super().__init__(message or f"not converged after {iterations} iterations")
        self.iterations = iterations


class MissingFeature(ModelError):
    pass


class ChainDiverged(ModelError):
    pass


class TradingError(TweetSignalError):
    pass


class Misaligned(TradingError):
    pass


class EpisodeFinished(TradingError):
    pass
