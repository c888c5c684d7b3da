from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from precrash.dream import (
    GENOTYPE,
    PHENOTYPE,
    CausalChainGraph,
    ChainError,
    CycleError,
    DreamError,
    Taxonomy,
    UnknownLabelError,
    aggregate,
    dumps_chains,
    emit_graph,
    factor_share,
    load_chains,
)

HSR = "habitually-stretching-rules"
MS = "misjudgement-of-situation"
TOV = "temporary-obstruction-of-view"
LO = "late-observation"
NA = "timing/no-action"


def test_bundled_taxonomy():
    tax = Taxonomy.bundled()
    assert len(tax) == 16
    assert sum(n.kind == PHENOTYPE for n in tax) == 5
    assert tax[NA].observable_class == "timing"
    assert tax[TOV].category == "traffic-environment"
    with pytest.raises(UnknownLabelError):
        tax["sleepiness"]


def test_register_extra_term():
    tax = Taxonomy.bundled()
    tax.register("fatigue", GENOTYPE, "driver-permanent-personal")
    g = CausalChainGraph(tax)
    g.add_crash_chain("c1", [("fatigue", MS), (MS, NA)])
    assert factor_share(g, "fatigue").value == 1
    with pytest.raises(DreamError):
        tax.register("fatigue", GENOTYPE, "vehicle")
    with pytest.raises(DreamError):
        tax.register("x", GENOTYPE, "astrology")


def test_chain_validation():
    g = CausalChainGraph()
    with pytest.raises(ChainError, match="no phenotype"):
        g.add_crash_chain("c", [(HSR, MS)])
    with pytest.raises(ChainError, match="from phenotype"):
        g.add_crash_chain("c", [(NA, MS), (MS, NA)])
    with pytest.raises(ChainError, match="empty"):
        g.add_crash_chain("c", [])
    with pytest.raises(UnknownLabelError):
        g.add_crash_chain("c", [("unknown", NA)])
    assert g.links == {} and g.registry == {}


def test_cycle_rejected_atomically():
    g = CausalChainGraph()
    g.add_crash_chain("a", [(TOV, LO), (LO, MS), (MS, NA)])
    with pytest.raises(CycleError):
        g.add_crash_chain("b", [(HSR, MS), (MS, TOV), (TOV, NA)])
    # nothing of the rejected chain was stored
    assert "b" not in g.registry
    assert (HSR, MS) not in g.links
    assert g.is_acyclic()


def test_conflicting_metadata():
    g = CausalChainGraph()
    g.add_crash_chain("a", [(HSR, NA)], {"night": True})
    g.add_crash_chain("a", [(HSR, NA)], {"night": True})
    with pytest.raises(DreamError, match="conflicting"):
        g.add_crash_chain("a", [(HSR, NA)], {"night": False})


GENOTYPES = [n.label for n in Taxonomy.bundled() if n.kind == GENOTYPE]
PHENOTYPES = [n.label for n in Taxonomy.bundled() if n.kind == PHENOTYPE]
links = st.tuples(st.sampled_from(GENOTYPES), st.sampled_from(GENOTYPES + PHENOTYPES))
chains = st.lists(links, min_size=1, max_size=6).map(
    lambda c: c + [(c[0][0], PHENOTYPES[0])])


@given(st.lists(st.tuples(st.sampled_from(["c1", "c2", "c3", "c4"]), chains), max_size=12))
@settings(max_examples=150)
def test_random_insertions_stay_acyclic(insertions):
    g = CausalChainGraph()
    for crash, chain in insertions:
        before = (dict((k, set(v.crash_ids)) for k, v in g.links.items()), dict(g.registry))
        try:
            g.add_crash_chain(crash, chain)
        except DreamError:
            after = (dict((k, set(v.crash_ids)) for k, v in g.links.items()), dict(g.registry))
            assert after == before
        assert g.is_acyclic()


@given(st.lists(st.tuples(st.sampled_from(["c1", "c2", "c3"]), chains), min_size=1, max_size=8))
@settings(max_examples=100)
def test_repeat_insertion_is_idempotent(insertions):
    g = CausalChainGraph()
    accepted = []
    for crash, chain in insertions:
        try:
            g.add_crash_chain(crash, chain)
            accepted.append((crash, chain))
        except DreamError:
            pass
    snapshot = emit_graph(g), aggregate(g), dict(g.registry)
    for crash, chain in accepted:
        g.add_crash_chain(crash, chain)
    assert (emit_graph(g), aggregate(g), dict(g.registry)) == snapshot


def test_shares_and_empty_registry():
    g = CausalChainGraph()
    assert factor_share(g, HSR).value is None
    g.add_crash_chain("a", [(HSR, MS), (MS, NA)], {"night": True})
    g.add_crash_chain("b", [(TOV, LO), (LO, MS), (MS, NA)], {"night": False})
    assert factor_share(g, HSR).value == Fraction(1, 2)
    assert factor_share(g, MS).value == 1
    assert factor_share(g, where=lambda m: m["night"]).value == Fraction(1, 2)
    assert factor_share(g, MS, where=lambda m: not m["night"]).value == Fraction(1, 2)


def test_aggregate_counts_distinct_crashes():
    g = CausalChainGraph()
    g.add_crash_chain("a", [(HSR, MS), (MS, NA)])
    g.add_crash_chain("b", [(HSR, MS), (MS, NA)])
    g.add_crash_chain("c", [(TOV, LO), (LO, MS), (MS, "speed")])
    agg = aggregate(g)
    assert agg.node_counts[MS] == 3
    assert agg.link_counts[(HSR, MS)] == 2
    assert agg.link_counts[(MS, "speed")] == 1


def test_emit_graph():
    assert emit_graph(CausalChainGraph()) == "digraph dream {\n}\n"
    g = CausalChainGraph()
    g.add_crash_chain("a", [(HSR, NA)])
    dot = emit_graph(g)
    assert f'"{HSR}" -> "{NA}" [label="1"];' in dot
    assert f'"{NA}" [kind=phenotype, shape=ellipse, label="{NA} (1)"];' in dot


def test_chain_file_round_trip(tmp_path):
    entries = [{"crash_id": "a", "metadata": {"night": True}, "links": [[HSR, NA]]}]
    path = tmp_path / "c.jsonl"
    path.write_text(dumps_chains(entries))
    g = load_chains(path)
    assert g.registry == {"a": {"night": True}}


def test_chain_file_errors_name_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"crash_id": "a", "links": [["%s", "%s"]]}\n{"links": []}\n' % (HSR, NA))
    with pytest.raises(DreamError, match=r"c.jsonl:2"):
        load_chains(path)
    path.write_text('{"crash_id": "a", "links": [["%s", "%s"]]}\n' % (HSR, HSR))
    with pytest.raises(CycleError, match=r"c.jsonl:1"):
        load_chains(path)


def test_bundled_chains_match_corpus(corpus, reference_rules):
    from precrash.cli import bundled
    from precrash.scenarios import classify_all
    g = load_chains(bundled("intersection_chains.jsonl"))
    assignments = classify_all(corpus, reference_rules)
    by_id = {r.record_id: r for r in corpus}
    crossing = {rid for rid, s in assignments.items()
                if s in (27, 28, 29, 30) and by_id[rid].at_intersection}
    assert set(g.registry) == crossing
    for rid, meta in g.registry.items():
        assert meta["night"] == by_id[rid].is_dark
        assert meta["scenario"] == assignments[rid]
