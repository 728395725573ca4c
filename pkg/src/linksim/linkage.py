"""Pairwise comparison, blocking, and one-to-one match classification.

Plain-text comparison is a weighted average of per-attribute Dice
coefficients over unpadded bigram multisets; encoded comparison is the
Dice coefficient over filter bit sets. Classification is greedy
one-to-one with a total tie-break order, so results never depend on
candidate ordering.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .encode import BloomFilter, qgrams
from .errors import ConfigError, ContractError, IntegrityError
from .model import Schema

SimilarityScore = float

# Plain-text comparison always decomposes values into unpadded bigrams.
_PLAIN_GRAM_SIZE = 2


def _dice_counters(a: Counter, b: Counter) -> float:
    size_a = sum(a.values())
    size_b = sum(b.values())
    if size_a + size_b == 0:
        return 0.0
    shared = sum((a & b).values())
    return 2.0 * shared / (size_a + size_b)


def value_grams(value: str) -> Counter:
    """Bigram multiset used by the plain-text comparison path."""
    return Counter(qgrams(value, _PLAIN_GRAM_SIZE, pad=False))


def weighted_similarity(
    qid_a: tuple[str, ...],
    qid_b: tuple[str, ...],
    weights: tuple[float, ...],
    grams_a: list[Counter] | None = None,
    grams_b: list[Counter] | None = None,
) -> SimilarityScore:
    """Weighted per-attribute Dice similarity over bigram multisets.

    An empty value against a non-empty one contributes 0 at full weight.
    When both values are empty the attribute is degenerate and its weight
    is redistributed proportionally over the remaining attributes. Grams
    may be precomputed for bulk comparison.
    """
    if len(qid_a) != len(qid_b) or len(qid_a) != len(weights):
        raise ContractError(
            f"QID arity mismatch: {len(qid_a)} vs {len(qid_b)} with {len(weights)} weights"
        )
    weighted_sum = 0.0
    live_weight = 0.0
    for i, weight in enumerate(weights):
        value_a = qid_a[i].lower()
        value_b = qid_b[i].lower()
        if not value_a and not value_b:
            continue
        live_weight += weight
        if not value_a or not value_b:
            continue
        if value_a == value_b:
            weighted_sum += weight
            continue
        counter_a = grams_a[i] if grams_a is not None else value_grams(value_a)
        counter_b = grams_b[i] if grams_b is not None else value_grams(value_b)
        weighted_sum += weight * _dice_counters(counter_a, counter_b)
    if live_weight == 0.0:
        return 0.0
    return weighted_sum / live_weight


def plain_similarity(
    qid_a: tuple[str, ...], qid_b: tuple[str, ...], schema: Schema
) -> SimilarityScore:
    return weighted_similarity(qid_a, qid_b, schema.weights)


def bloom_dice(a: BloomFilter, b: BloomFilter) -> SimilarityScore:
    """Dice coefficient over set bits; two all-zero filters score 0.0."""
    if a.bf_len != b.bf_len or a.params_fingerprint != b.params_fingerprint:
        raise ContractError("filters were built with different encoding parameters")
    count_a = a.popcount
    count_b = b.popcount
    if count_a + count_b == 0:
        return 0.0
    shared = (a.bits & b.bits).bit_count()
    return 2.0 * shared / (count_a + count_b)


def block_key(item, strategy: str) -> str:
    """Deterministic blocking key for a QID tuple or a BloomFilter.

    Strategies: "none" (single block), "first-char:<attr index>", and
    "filter-prefix:<bit count>".
    """
    if strategy == "none":
        return ""
    name, _, arg = strategy.partition(":")
    if name == "first-char":
        index = int(arg)
        return item[index][:1].lower()
    if name == "filter-prefix":
        n_bits = int(arg)
        width = (n_bits + 3) // 4
        return f"{item.bits & ((1 << n_bits) - 1):0{width}x}"
    raise ConfigError(f"unknown blocking strategy {strategy!r}")


@dataclass(frozen=True)
class MatchSet:
    """Accepted pairs (left, right, score); each side one-to-one."""

    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((l, r, float(s)) for l, r, s in self.pairs))
        lefts = [p[0] for p in self.pairs]
        rights = [p[1] for p in self.pairs]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise IntegrityError("match set must be one-to-one")

    def __len__(self) -> int:
        return len(self.pairs)

    def id_pairs(self) -> set[tuple[str, str]]:
        return {(l, r) for l, r, _ in self.pairs}


def classify(
    candidates: list[tuple[str, str, float]], threshold: float
) -> MatchSet:
    """Greedy one-to-one assignment at or above the threshold.

    Candidates are ranked by descending score, ties broken by the
    (left, right) id pair; a pair is accepted only if neither side is
    already matched.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ContractError(f"threshold must be in [0, 1], got {threshold}")
    taken_left: set[str] = set()
    taken_right: set[str] = set()
    accepted = []
    for left, right, score in sorted(candidates, key=lambda c: (-c[2], c[0], c[1])):
        if score < threshold:
            break
        if left in taken_left or right in taken_right:
            continue
        taken_left.add(left)
        taken_right.add(right)
        accepted.append((left, right, score))
    return MatchSet(tuple(accepted))


@dataclass(frozen=True)
class MatchIdAssignment:
    """Match ids and their two per-side views; all three stay consistent."""

    by_left: dict[str, str]
    by_right: dict[str, str]
    pairs: dict[str, tuple[str, str]]

    def __len__(self) -> int:
        return len(self.pairs)


def assign_match_ids(matches: MatchSet, project: str) -> MatchIdAssignment:
    """Number matched pairs as P<project>-<i> in (left, right) order."""
    by_left: dict[str, str] = {}
    by_right: dict[str, str] = {}
    pairs: dict[str, tuple[str, str]] = {}
    ordered = sorted(matches.pairs, key=lambda p: (p[0], p[1]))
    for i, (left, right, _) in enumerate(ordered):
        mid = f"P{project}-{i}"
        by_left[left] = mid
        by_right[right] = mid
        pairs[mid] = (left, right)
    return MatchIdAssignment(by_left, by_right, pairs)
