"""Exhaustive reference implementations used to check the fast paths."""

from __future__ import annotations

from fractions import Fraction
from itertools import chain, combinations


def decimal(threshold: float) -> Fraction:
    return Fraction(repr(threshold))


def brute_force_itemsets(baskets, min_support, max_len=None):
    """{itemset tuple: count} for every itemset whose support reaches min_support."""
    baskets = [frozenset(b) for b in baskets]
    n = len(baskets)
    if n == 0:
        return {}
    universe = sorted(set(chain.from_iterable(baskets)))
    top = len(universe) if max_len is None else min(max_len, len(universe))
    out = {}
    for k in range(1, top + 1):
        for combo in combinations(universe, k):
            count = sum(1 for b in baskets if b.issuperset(combo))
            if Fraction(count, n) >= decimal(min_support):
                out[combo] = count
    return out


def brute_force_rules(baskets, min_support, min_confidence, min_len, max_len):
    """{(antecedent, consequent): (count, antecedent count, consequent count, n)}."""
    baskets = [frozenset(b) for b in baskets]
    n = len(baskets)
    frequent = brute_force_itemsets(baskets, min_support, max_len)

    def count(items):
        return sum(1 for b in baskets if b.issuperset(items))

    out = {}
    for items, joint in frequent.items():
        if not min_len <= len(items) <= max_len:
            continue
        for r in range(1, len(items)):
            for consequent in combinations(items, r):
                antecedent = tuple(t for t in items if t not in consequent)
                ante = count(antecedent)
                if Fraction(joint, ante) >= decimal(min_confidence):
                    out[(antecedent, consequent)] = (joint, ante, count(consequent), n)
    return out
