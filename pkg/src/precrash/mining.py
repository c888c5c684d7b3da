"""Apriori frequent itemsets and association rules over coded crash features.

Integer counts are the source of truth; support, confidence and lift are
derived from them on demand.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from ._numeric import fmt
from .data_model import (
    FIELD_NAMES,
    INTERSECTION_SCENARIOS,
    REAR_END_SCENARIOS,
    SPECS_BY_NAME,
    CrashRecord,
    ScenarioId,
)

SCENARIO_FIELD = "Scenario"

# Environment fields used for the rear-end analysis, in display order.
DEFAULT_MINING_FIELDS: tuple[str, ...] = (
    "if_peak_time",
    "lighting",
    "location_type",
    "traffic_control_type",
    "v1_intention",
    "v1_yield_for",
    "roadside_parking",
    "cycle_lane",
    "type_of_intersection",
    "road_types",
    "number_of_lanes_one_direction",
    "lane_markings",
)


class MiningError(ValueError):
    pass


def _exact(threshold: float) -> Fraction:
    # thresholds are meant as the decimals the user typed, e.g. 0.1 == 1/10
    return Fraction(repr(threshold)) if isinstance(threshold, float) else Fraction(threshold)


def item_token(field: str, value) -> str:
    spec = SPECS_BY_NAME[field]
    if spec.kind == "count":
        label = str(value)
    else:
        label = spec.codes.label(int(value))
    return f"{spec.token_name}={label}"


def scenario_token(scenario: int) -> str:
    return f"{SCENARIO_FIELD}={ScenarioId(scenario).short}"


def is_scenario_token(token: str) -> bool:
    return token.startswith(SCENARIO_FIELD + "=")


@dataclass(frozen=True)
class Transaction:
    record_id: str
    items: frozenset[str]


def scenario_family(target: int) -> frozenset[int]:
    if target in REAR_END_SCENARIOS:
        return REAR_END_SCENARIOS
    if target in INTERSECTION_SCENARIOS:
        return INTERSECTION_SCENARIOS
    return frozenset({target})


def encode_transactions(
    records: Iterable[CrashRecord],
    fields: Sequence[str],
    assignments: Mapping[str, int],
    target: int | None = None,
    universe: Iterable[int] | None = None,
) -> list[Transaction]:
    """One transaction per record in the mining universe.

    The universe is ``universe`` when given, else the scenario family of
    ``target`` (all rear-end scenarios for a rear-end target), else every
    record.  Absent values produce no token.
    """
    if not fields:
        raise MiningError("field selection is empty")
    unknown = [f for f in fields if f not in FIELD_NAMES]
    if unknown:
        raise MiningError("unknown field(s) in selection: " + ", ".join(unknown))
    bad = [f for f in fields if SPECS_BY_NAME[f].kind not in ("code", "bool", "count")]
    if bad:
        raise MiningError("field(s) cannot be mined: " + ", ".join(bad))
    if universe is not None:
        allowed: frozenset[int] | None = frozenset(universe)
    elif target is not None:
        allowed = scenario_family(target)
    else:
        allowed = None

    out = []
    for record in records:
        try:
            scenario = assignments[record.record_id]
        except KeyError:
            raise MiningError(f"no scenario assignment for {record.record_id!r}") from None
        if allowed is not None and scenario not in allowed:
            continue
        items = {item_token(f, getattr(record, f)) for f in dict.fromkeys(fields)
                 if getattr(record, f) is not None}
        items.add(scenario_token(scenario))
        out.append(Transaction(record.record_id, frozenset(items)))
    return out


@dataclass(frozen=True)
class Itemset:
    items: tuple[str, ...]
    count: int
    n: int

    @property
    def support(self) -> float:
        return self.count / self.n

    def __len__(self) -> int:
        return len(self.items)


def _count_chunk(args: tuple[list[frozenset[str]], list[tuple[str, ...]]]) -> list[int]:
    baskets, candidates = args
    masks: dict[str, int] = defaultdict(int)
    for i, basket in enumerate(baskets):
        bit = 1 << i
        for token in basket:
            masks[token] |= bit
    counts = []
    for cand in candidates:
        acc = masks.get(cand[0], 0)
        for token in cand[1:]:
            if not acc:
                break
            acc &= masks.get(token, 0)
        counts.append(acc.bit_count())
    return counts


def _count(chunks: list[list[frozenset[str]]], candidates: list[tuple[str, ...]],
           pool: ProcessPoolExecutor | None) -> list[int]:
    if not candidates:
        return []
    jobs = [(chunk, candidates) for chunk in chunks]
    parts = pool.map(_count_chunk, jobs) if pool else map(_count_chunk, jobs)
    total = [0] * len(candidates)
    for part in parts:
        for i, c in enumerate(part):
            total[i] += c
    return total


def _join(level: list[tuple[str, ...]]) -> list[tuple[str, ...]]:
    """Candidate (k+1)-sets from sorted frequent k-sets, with subset pruning."""
    frequent = set(level)
    by_prefix: dict[tuple[str, ...], list[str]] = defaultdict(list)
    for items in level:
        by_prefix[items[:-1]].append(items[-1])
    out = []
    for prefix, tails in by_prefix.items():
        tails.sort()
        for i, a in enumerate(tails):
            for b in tails[i + 1:]:
                cand = prefix + (a, b)
                # every k-subset must itself be frequent
                if all(cand[:j] + cand[j + 1:] in frequent for j in range(len(cand) - 2)):
                    out.append(cand)
    out.sort()
    return out


def apriori_frequent_itemsets(
    transactions: Sequence[Transaction] | Sequence[Iterable[str]],
    min_support: float,
    max_len: int | None = None,
    workers: int = 1,
) -> list[Itemset]:
    """All itemsets with support >= ``min_support``, ordered by size then tokens.

    ``workers`` > 1 counts support over transaction partitions in separate
    processes; the result does not depend on it.
    """
    if not 0 < min_support <= 1:
        raise MiningError(f"min_support must be in (0, 1], got {min_support}")
    baskets = [frozenset(t.items if isinstance(t, Transaction) else t) for t in transactions]
    n = len(baskets)
    if n == 0:
        return []
    workers = max(1, min(workers, n))
    size = -(-n // workers)
    chunks = [baskets[i:i + size] for i in range(0, n, size)]

    threshold = _exact(min_support) * n

    def frequent(count: int) -> bool:
        return count >= threshold

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        singles = sorted({(tok,) for b in baskets for tok in b})
        counts = _count(chunks, singles, pool)
        level = [c for c, k in zip(singles, counts) if frequent(k)]
        result = [Itemset(c, k, n) for c, k in zip(singles, counts) if frequent(k)]
        size_k = 1
        while level and (max_len is None or size_k < max_len):
            candidates = _join(level)
            counts = _count(chunks, candidates, pool)
            level = [c for c, k in zip(candidates, counts) if frequent(k)]
            result.extend(Itemset(c, k, n) for c, k in zip(candidates, counts) if frequent(k))
            size_k += 1
    finally:
        if pool:
            pool.shutdown()
    result.sort(key=lambda s: (len(s.items), s.items))
    return result


@dataclass(frozen=True)
class AssociationRule:
    antecedent: tuple[str, ...]
    consequent: tuple[str, ...]
    count: int
    antecedent_count: int
    consequent_count: int
    n: int

    @property
    def support(self) -> float:
        return self.count / self.n

    @property
    def confidence(self) -> float:
        return self.count / self.antecedent_count

    @property
    def lift(self) -> float:
        return self.count * self.n / (self.antecedent_count * self.consequent_count)

    @property
    def antecedent_support(self) -> float:
        return self.antecedent_count / self.n

    @property
    def consequent_support(self) -> float:
        return self.consequent_count / self.n

    def __len__(self) -> int:
        return len(self.antecedent) + len(self.consequent)

    def sort_key(self):
        return (-self.count, -Fraction(self.count, self.antecedent_count),
                self.antecedent, self.consequent)


def generate_rules(
    itemsets: Sequence[Itemset],
    transactions: Sequence | int,
    min_confidence: float,
    min_len: int = 3,
    max_len: int = 6,
    consequent_filter=None,
) -> list[AssociationRule]:
    """Every X => Y split of a frequent itemset whose size is in [min_len, max_len].

    ``consequent_filter`` optionally restricts which consequents are built
    (a callable taking the consequent tuple).  Rules come back sorted by
    support, confidence, then antecedent tokens.
    """
    if min_len < 2:
        raise MiningError("min_len must be at least 2")
    if min_len > max_len:
        raise MiningError(f"min_len {min_len} exceeds max_len {max_len}")
    if not 0 <= min_confidence <= 1:
        raise MiningError(f"min_confidence must be in [0, 1], got {min_confidence}")
    n = transactions if isinstance(transactions, int) else len(transactions)
    counts = {s.items: s.count for s in itemsets}
    min_conf = _exact(min_confidence)
    rules = []
    for itemset in itemsets:
        k = len(itemset.items)
        if k < min_len or k > max_len:
            continue
        items = itemset.items
        for r in range(1, k):
            for consequent in combinations(items, r):
                if consequent_filter is not None and not consequent_filter(consequent):
                    continue
                antecedent = tuple(t for t in items if t not in consequent)
                ante_count = counts[antecedent]
                if itemset.count < min_conf * ante_count:
                    continue
                rules.append(AssociationRule(antecedent, consequent, itemset.count,
                                             ante_count, counts[consequent], n))
    rules.sort(key=AssociationRule.sort_key)
    return rules


def only_scenario(consequent: tuple[str, ...]) -> bool:
    return len(consequent) == 1 and is_scenario_token(consequent[0])


def filter_and_rank(
    rules: Iterable[AssociationRule],
    min_lift: float = 1.0,
    scenario_only: bool = False,
) -> list[AssociationRule]:
    """Drop weak and redundant rules; rank by support, confidence, antecedent.

    A rule is redundant when another kept rule with the same consequent has
    an antecedent that is a proper subset of its own and at least the same
    confidence.
    """
    floor = _exact(min_lift)
    kept = [r for r in rules
            if r.count * r.n > floor * r.antecedent_count * r.consequent_count]
    if scenario_only:
        kept = [r for r in kept if only_scenario(r.consequent)]
    best: dict[tuple[tuple[str, ...], frozenset[str]], AssociationRule] = {}
    for r in kept:
        best[(r.consequent, frozenset(r.antecedent))] = r

    def redundant(rule: AssociationRule) -> bool:
        ante = rule.antecedent
        for size in range(1, len(ante)):
            for sub in combinations(ante, size):
                other = best.get((rule.consequent, frozenset(sub)))
                if other is not None and other.count * rule.antecedent_count >= \
                        rule.count * other.antecedent_count:
                    return True
        return False

    out = [r for r in kept if not redundant(r)]
    out.sort(key=AssociationRule.sort_key)
    return out


def rules_for(rules: Iterable[AssociationRule], scenario: int) -> list[AssociationRule]:
    token = scenario_token(scenario)
    return [r for r in rules if r.consequent == (token,)]


# --- emission ------------------------------------------------------------------

def _display_order(fields: Sequence[str]) -> dict[str, int]:
    return {SPECS_BY_NAME[f].token_name: i for i, f in enumerate(fields)}


def display_tokens(tokens: Iterable[str], fields: Sequence[str] = DEFAULT_MINING_FIELDS
                   ) -> list[str]:
    order = _display_order(fields)
    return sorted(tokens, key=lambda t: (order.get(t.split("=", 1)[0], len(order)), t))


def rules_table(rules: Iterable[AssociationRule],
                fields: Sequence[str] = DEFAULT_MINING_FIELDS) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["antecedent", "consequent", "support", "confidence", "lift"])
    for r in rules:
        writer.writerow([
            " + ".join(display_tokens(r.antecedent, fields)),
            " + ".join(display_tokens(r.consequent, fields)),
            fmt(r.support),
            fmt(r.confidence),
            fmt(r.lift),
        ])
    return buf.getvalue()


@dataclass(frozen=True)
class MiningSettings:
    min_support: float = 0.02
    min_confidence: float = 0.8
    min_lift: float = 1.0
    min_len: int = 3
    max_len: int = 6
    fields: tuple[str, ...] = DEFAULT_MINING_FIELDS
    workers: int = 1

    def check(self) -> None:
        if not 0 < self.min_support <= 1:
            raise MiningError(f"min_support must be in (0, 1], got {self.min_support}")
        if not 0 <= self.min_confidence <= 1:
            raise MiningError(f"min_confidence must be in [0, 1], got {self.min_confidence}")
        if self.min_lift < 0:
            raise MiningError("min_lift must be non-negative")
        if self.min_len < 2:
            raise MiningError("min_len must be at least 2")
        if self.min_len > self.max_len:
            raise MiningError(f"min_len {self.min_len} exceeds max_len {self.max_len}")


def mine_scenarios(
    records: Iterable[CrashRecord],
    assignments: Mapping[str, int],
    settings: MiningSettings = MiningSettings(),
    target: int | None = None,
    universe: Iterable[int] | None = None,
) -> list[AssociationRule]:
    """Scenario-characterising rules: feature set => scenario label.

    With ``target`` set only rules concluding that scenario are returned.
    """
    settings.check()
    transactions = encode_transactions(records, settings.fields, assignments,
                                       target=target, universe=universe)
    itemsets = apriori_frequent_itemsets(transactions, settings.min_support,
                                         max_len=settings.max_len, workers=settings.workers)
    rules = generate_rules(itemsets, len(transactions), settings.min_confidence,
                           settings.min_len, settings.max_len, consequent_filter=only_scenario)
    ranked = filter_and_rank(rules, settings.min_lift, scenario_only=True)
    if target is not None:
        ranked = rules_for(ranked, target)
    return ranked
