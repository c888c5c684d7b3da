from precrash import synthetic
from precrash.cli import bundled


def test_bundled_files_are_reproducible():
    for name, text in synthetic.render_all().items():
        assert bundled(name).read_text(encoding="utf-8") == text, name


def test_generator_is_seeded():
    a = synthetic.build_mining_fixture()
    assert a == synthetic.build_mining_fixture()
    assert a != synthetic.build_mining_fixture(seed=1)


def test_mining_fixture_composition():
    from collections import Counter
    from precrash.scenarios import classify_all, load_rules
    records = synthetic.build_mining_fixture()
    assignments = classify_all(records, load_rules(bundled("reference_rules.txt")))
    assert Counter(assignments.values()) == {24: 103, 20: 41, 23: 35, 21: 5}
