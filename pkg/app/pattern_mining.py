"""Frequent thematic itemsets (Apriori), association rules and the grouped rule matrix."""

from __future__ import annotations

from collections import Counter
from itertools import combinations
from typing import Iterable, Sequence

from app.core.errors import NoTransactions, TooFewAntecedents
from app.core.formatters import join_items
from app.core.models import (
    AssociationRule,
    GroupedCell,
    GroupedMatrix,
    Itemset,
    RuleGroup,
    ThematicField,
    TokenizerConfig,
    TransactionDB,
    TweetCollection,
)
from app.corpus import thematic_items

LABEL_SIZE = 2


def build_transactions(
    collection: TweetCollection,
    field: ThematicField,
    cfg: TokenizerConfig,
) -> TransactionDB:
    """One transaction per tweet holding its thematic terms; empty ones are dropped."""
    transactions = []
    for tweet in collection:
        items = thematic_items(tweet, field, cfg)
        if items:
            transactions.append(items)
    if not transactions:
        raise NoTransactions(
            f"none of {len(collection)} tweets mention a term of the thematic field"
        )
    return TransactionDB(transactions=tuple(transactions), field=field)


def keyword_frequencies(db: TransactionDB, *, include_absent: bool = True) -> dict[str, int]:
    """Transactions containing each term, sorted by term.

    With ``include_absent`` every field term is reported, absent ones as 0.
    """
    counts = Counter(item for transaction in db.transactions for item in transaction)
    terms = db.field.terms if include_absent else sorted(counts)
    return {term: counts.get(term, 0) for term in terms}


def _is_frequent(count: int, n: int, min_support: float) -> bool:
    return count / n >= min_support


def _join_level(level: Sequence[tuple[str, ...]]) -> list[tuple[str, ...]]:
    """Apriori join: k-itemsets sharing their first k-1 items, then subset prune."""
    known = set(level)
    candidates = []
    for i, left in enumerate(level):
        for right in level[i + 1:]:
            if left[:-1] != right[:-1]:
                break
            candidate = left + (right[-1],)
            if all(subset in known for subset in combinations(candidate, len(left))):
                candidates.append(candidate)
    return candidates


def mine_frequent_itemsets(db: TransactionDB, min_support: float) -> list[Itemset]:
    """All itemsets with ``count / n >= min_support``, ordered by (size, items)."""
    if db.n == 0:
        raise NoTransactions("transaction database is empty")
    if not 0.0 < min_support <= 1.0:
        raise ValueError("min_support must lie in (0, 1]")

    n = db.n
    singles = Counter(item for transaction in db.transactions for item in transaction)
    level = {
        (item,): count
        for item, count in singles.items()
        if _is_frequent(count, n, min_support)
    }

    found: list[Itemset] = []
    while level:
        found.extend(
            Itemset(items=items, support=count / n, count=count)
            for items, count in level.items()
        )
        candidates = _join_level(sorted(level))
        counts = Counter()
        for transaction in db.transactions:
            for candidate in candidates:
                if transaction.issuperset(candidate):
                    counts[candidate] += 1
        level = {
            candidate: counts[candidate]
            for candidate in candidates
            if _is_frequent(counts[candidate], n, min_support)
        }

    return sorted(found, key=lambda itemset: (itemset.size, itemset.items))


def derive_rules(
    itemsets: Iterable[Itemset],
    db: TransactionDB,
    min_confidence: float,
) -> list[AssociationRule]:
    """Every split ``A -> C`` of a frequent itemset with confidence >= threshold.

    Sorted by descending lift, then antecedent and consequent.
    """
    if not 0.0 < min_confidence <= 1.0:
        raise ValueError("min_confidence must lie in (0, 1]")

    itemsets = list(itemsets)
    counts = {frozenset(itemset.items): itemset.count for itemset in itemsets}

    def count_of(items: tuple[str, ...]) -> int:
        key = frozenset(items)
        if key not in counts:
            counts[key] = db.count(key)
        return counts[key]

    rules = []
    for itemset in itemsets:
        if itemset.size < 2:
            continue
        for size in range(1, itemset.size):
            for antecedent in combinations(itemset.items, size):
                consequent = tuple(item for item in itemset.items if item not in antecedent)
                antecedent_count = count_of(antecedent)
                if antecedent_count == 0:
                    continue
                confidence = itemset.count / antecedent_count
                if confidence < min_confidence:
                    continue
                consequent_support = count_of(consequent) / db.n
                rules.append(AssociationRule(
                    antecedent=antecedent,
                    consequent=consequent,
                    support=itemset.count / db.n,
                    confidence=confidence,
                    lift=confidence / consequent_support,
                    count=itemset.count,
                ))

    return sorted(rules, key=lambda rule: (-rule.lift, rule.antecedent, rule.consequent))


def jaccard_distance(left: Iterable[str], right: Iterable[str]) -> float:
    left, right = set(left), set(right)
    union = left | right
    if not union:
        return 0.0
    return 1.0 - len(left & right) / len(union)


def _cluster_antecedents(
    antecedents: Sequence[tuple[str, ...]],
    k: int,
) -> list[list[tuple[str, ...]]]:
    """Complete-linkage agglomeration down to ``k`` clusters.

    Clusters are kept as sorted member lists, ordered by their members;
    equal distances resolve to the lexicographically smallest pair.
    """
    clusters = [[antecedent] for antecedent in sorted(antecedents)]
    while len(clusters) > k:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                linkage = max(
                    jaccard_distance(a, b) for a in clusters[i] for b in clusters[j]
                )
                key = (linkage, clusters[i], clusters[j])
                if best is None or key < best[0]:
                    best = (key, i, j)
        _, i, j = best
        merged = sorted(clusters[i] + clusters[j])
        clusters = [c for index, c in enumerate(clusters) if index not in (i, j)]
        clusters.append(merged)
        clusters.sort()
    return clusters


def _group_label(members: Sequence[tuple[str, ...]]) -> tuple[str, ...]:
    counts = Counter(item for antecedent in members for item in antecedent)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return tuple(item for item, _ in ranked[:LABEL_SIZE])


def group_rules(rules: Sequence[AssociationRule], k: int) -> GroupedMatrix:
    """Grouped matrix: antecedent clusters as rows, consequents as columns."""
    if not rules:
        raise ValueError("group_rules needs at least one rule")
    if k < 1:
        raise ValueError("k must be >= 1")
    antecedents = sorted({rule.antecedent for rule in rules})
    if k > len(antecedents):
        raise TooFewAntecedents(
            f"k={k} exceeds the {len(antecedents)} distinct antecedents"
        )

    clusters = _cluster_antecedents(antecedents, k)
    group_of = {
        antecedent: index
        for index, members in enumerate(clusters)
        for antecedent in members
    }

    members_per_cell: dict[tuple[int, str], list[AssociationRule]] = {}
    rules_per_group = Counter()
    for rule in rules:
        group = group_of[rule.antecedent]
        rules_per_group[group] += 1
        members_per_cell.setdefault((group, join_items(rule.consequent)), []).append(rule)

    cells = {
        key: GroupedCell(
            rule_count=len(members),
            mean_lift=sum(rule.lift for rule in members) / len(members),
            max_support=max(rule.support for rule in members),
        )
        for key, members in sorted(members_per_cell.items())
    }
    return GroupedMatrix(
        row_groups=tuple(
            RuleGroup(
                label_items=_group_label(members),
                antecedents=tuple(members),
                rule_count=rules_per_group[index],
            )
            for index, members in enumerate(clusters)
        ),
        columns=tuple(sorted({column for _, column in cells})),
        cells=cells,
    )
