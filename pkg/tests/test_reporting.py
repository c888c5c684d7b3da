from hypothesis import given, settings

from precrash.reporting import (
    INTERSECTION_GROUP,
    REAR_END_GROUP,
    ScenarioGroup,
    control_type_distribution,
    damage_heatmap,
    location_distribution,
    moderate_and_above,
    severity_by_scenario,
    severity_distribution,
)
from precrash.scenarios import classify_all

from strategies import record_lists


@given(record_lists(min_size=1, max_size=40))
@settings(max_examples=60)
def test_percentages_sum_to_100(records):
    for table in (location_distribution(records), severity_distribution(records)):
        assert abs(sum(r.percentage for r in table.rows) - 100) <= 0.05
        assert all(abs(r.rounded() - r.percentage) <= 0.005 for r in table.rows)
        assert sum(r.count for r in table.rows) == table.total == len(records)


@given(record_lists(max_size=40))
@settings(max_examples=60)
def test_control_table_covers_intersections_only(records):
    everything = control_type_distribution(records, controlled_only=False)
    assert everything.total == sum(r.at_intersection for r in records)
    controlled = control_type_distribution(records)
    assert controlled.total == everything.total - everything.count("no control")


def test_corpus_locations(corpus):
    table = location_distribution(corpus)
    assert {r.label: r.count for r in table.rows} == {
        "Intersection impact area": 164, "Intersection center": 35, "Parking lot": 15,
        "Ramp": 13, "Roadway segment": 95}


def test_heatmap(corpus):
    heat = damage_heatmap(corpus)
    assert heat.total == sum(len(r.damage_locations) for r in corpus)
    assert heat.hottest() == "rear_bumper"
    grid = heat.grid
    assert grid[4][1] == heat.counts["rear_bumper"]
    assert grid[2][0] is None
    assert heat.to_csv().splitlines()[0] == "zone,row,column,count"


def test_intersection_severity(corpus, reference_rules):
    assignments = classify_all(corpus, reference_rules)
    tables = severity_by_scenario(assignments, corpus)
    inter = tables["intersection"]
    assert inter.total == 15
    assert moderate_and_above(inter) == (6, 15)
    assert inter.count("severe") == 3
    assert tables["rear-end"].total == 191


def test_group_membership(corpus):
    crossing = next(r for r in corpus if r.at_intersection)
    segment = next(r for r in corpus if r.location_type == 5)
    assert INTERSECTION_GROUP.contains(27, crossing)
    assert not INTERSECTION_GROUP.contains(27, segment)
    assert REAR_END_GROUP.contains(24, segment)
    mixed = ScenarioGroup("x", frozenset({27, 33}), intersection_only=frozenset({33}))
    assert mixed.contains(27, segment) and not mixed.contains(33, segment)


def test_empty_tables():
    assert severity_distribution([]).rows == ()
    assert damage_heatmap([]).total == 0
    assert severity_distribution([]).to_csv() == "damage_severity,count,percentage\n"
