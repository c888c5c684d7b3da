import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from precrash.mining import (
    AssociationRule,
    MiningError,
    MiningSettings,
    apriori_frequent_itemsets,
    display_tokens,
    encode_transactions,
    filter_and_rank,
    generate_rules,
    item_token,
    mine_scenarios,
    rules_table,
    scenario_token,
)

from oracles import brute_force_itemsets, brute_force_rules
from strategies import baskets, record_lists

supports = st.sampled_from([0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.5])
confidences = st.sampled_from([0.0, 0.3, 0.5, 0.8, 1.0])


def _rel(a, b):
    return abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)


@given(baskets(), supports)
@settings(max_examples=200, deadline=None)
def test_itemsets_match_brute_force(data, min_support):
    found = {s.items: s.count for s in apriori_frequent_itemsets(data, min_support)}
    assert found == brute_force_itemsets(data, min_support)


@given(baskets(), supports, confidences, st.integers(2, 4), st.integers(0, 3))
@settings(max_examples=200, deadline=None)
def test_rules_match_brute_force(data, min_support, min_conf, min_len, extra):
    max_len = min_len + extra
    itemsets = apriori_frequent_itemsets(data, min_support, max_len=max_len)
    rules = generate_rules(itemsets, len(data), min_conf, min_len, max_len)
    got = {(r.antecedent, r.consequent): (r.count, r.antecedent_count, r.consequent_count, r.n)
           for r in rules}
    assert got == brute_force_rules(data, min_support, min_conf, min_len, max_len)


@given(baskets(), supports)
@settings(max_examples=100, deadline=None)
def test_anti_monotone(data, min_support):
    found = {s.items: s.count for s in apriori_frequent_itemsets(data, min_support)}
    for items, count in found.items():
        for k in range(1, len(items)):
            for sub in combinations(items, k):
                assert sub in found
                assert found[sub] >= count


@given(baskets(), supports, confidences)
@settings(max_examples=100, deadline=None)
def test_metric_identities(data, min_support, min_conf):
    itemsets = apriori_frequent_itemsets(data, min_support)
    for r in generate_rules(itemsets, len(data), min_conf, 2, 12):
        assert _rel(r.confidence * r.antecedent_support, r.support)
        assert _rel(r.lift * r.consequent_support, r.confidence)
        assert r.confidence >= min_conf - 1e-12


@given(baskets(), supports, st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_order_and_workers_do_not_matter(data, min_support, seed):
    reference = apriori_frequent_itemsets(data, min_support)
    shuffled = list(data)
    random.Random(seed).shuffle(shuffled)
    assert apriori_frequent_itemsets(shuffled, min_support) == reference
    assert apriori_frequent_itemsets(shuffled, min_support, workers=2) == reference


@given(baskets(), supports, st.integers(3, 4), st.integers(0, 2))
@settings(max_examples=100, deadline=None)
def test_rule_lengths_stay_in_bounds(data, min_support, min_len, extra):
    max_len = min_len + extra
    itemsets = apriori_frequent_itemsets(data, min_support, max_len=max_len)
    for r in generate_rules(itemsets, len(data), 0.0, min_len, max_len):
        assert min_len <= len(r) <= max_len


def test_support_boundary_is_inclusive():
    data = [{"a"}] + [{"b"}] * 9
    assert [s.items for s in apriori_frequent_itemsets(data, 0.1)] == [("a",), ("b",)]
    assert [s.items for s in apriori_frequent_itemsets(data, 0.11)] == [("b",)]


def test_empty_input():
    assert apriori_frequent_itemsets([], 0.1) == []
    assert generate_rules([], 0, 0.5) == []


@pytest.mark.parametrize("kwargs", [dict(min_support=0), dict(min_support=1.5)])
def test_bad_support(kwargs):
    with pytest.raises(MiningError):
        apriori_frequent_itemsets([{"a"}], **kwargs)


def test_min_len_above_max_len():
    with pytest.raises(MiningError, match="exceeds"):
        generate_rules([], 1, 0.5, min_len=7, max_len=6)
    with pytest.raises(MiningError):
        MiningSettings(min_len=7).check()


def _rule(ante, count, ante_count, cons_count=10, n=40):
    return AssociationRule(tuple(ante), ("Scenario=LVS",), count, ante_count, cons_count, n)


def test_redundant_superset_is_dropped():
    general = _rule(["a", "b"], 9, 10)
    weaker = _rule(["a", "b", "c"], 5, 6)
    stronger = _rule(["a", "b", "d"], 6, 6)
    kept = filter_and_rank([weaker, general, stronger])
    assert kept == [general, stronger]


def test_lift_floor_is_strict():
    at_one = _rule(["a", "b"], 5, 20, cons_count=10, n=40)
    assert at_one.lift == 1.0
    assert filter_and_rank([at_one]) == []


def test_ranking_by_support_then_confidence():
    a = _rule(["x", "y"], 8, 10)
    b = _rule(["p", "q"], 8, 9)
    c = _rule(["a", "b"], 9, 12)
    assert filter_and_rank([a, b, c]) == [c, b, a]


def test_tokens_use_field_labels(corpus):
    assert item_token("location_type", 1) == "Location_Type=Intersection impact area"
    assert item_token("traffic_control_type", 3) == "Traffic.Control.Type=signal"
    assert item_token("v1_intention", 1) == "V1.intention=signal stopped"
    assert item_token("roadside_parking", True) == "Roadside.parking=yes"
    assert item_token("number_of_lanes_one_direction", 2) == "Number.of.lanes.one.direction=2"
    assert scenario_token(24) == "Scenario=LVS"
    assert display_tokens(["V1.intention=x", "Lighting=y", "If_peak_time=z"]) == [
        "If_peak_time=z", "Lighting=y", "V1.intention=x"]


def test_universe_defaults_to_scenario_family(corpus, reference_rules):
    from precrash.scenarios import classify_all
    assignments = classify_all(corpus, reference_rules)
    fields = ("lighting",)
    rear = encode_transactions(corpus, fields, assignments, target=24)
    assert len(rear) == sum(1 for s in assignments.values() if 20 <= s <= 24)
    assert len(encode_transactions(corpus, fields, assignments)) == 322
    only = encode_transactions(corpus, fields, assignments, universe=[24])
    assert len(only) == 105


def test_unknown_and_unminable_fields(corpus):
    with pytest.raises(MiningError, match="unknown"):
        encode_transactions(corpus, ("colour",), {})
    with pytest.raises(MiningError, match="cannot be mined"):
        encode_transactions(corpus, ("report_date",), {})
    with pytest.raises(MiningError, match="no scenario assignment"):
        encode_transactions(corpus[:1], ("lighting",), {})


@given(record_lists(min_size=5, max_size=30), st.integers(0, 100))
@settings(max_examples=25, deadline=None)
def test_mine_scenarios_lengths_and_shuffle(records, seed):
    rng = random.Random(seed)
    assignments = {r.record_id: rng.choice([20, 23, 24]) for r in records}
    settings_ = MiningSettings(min_support=0.1, min_confidence=0.5)
    rules = mine_scenarios(records, assignments, settings_, universe=[20, 23, 24])
    assert all(3 <= len(r) <= 6 for r in rules)
    shuffled = list(records)
    rng.shuffle(shuffled)
    assert mine_scenarios(shuffled, assignments, settings_, universe=[20, 23, 24]) == rules


def test_rules_table_format():
    text = rules_table([_rule(["Lighting=daylight", "If_peak_time=non-peak"], 31, 32, 103, 184)])
    assert text.splitlines() == [
        "antecedent,consequent,support,confidence,lift",
        "If_peak_time=non-peak + Lighting=daylight,Scenario=LVS,0.168,0.969,1.731",
    ]
