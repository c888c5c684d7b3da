"""Rule-based pre-crash scenario classification and its scoring.

Rule files are line oriented::

    # comment
    default 36
    rule lvs-av-stopped priority 50 scenario 24
        crash_type == 3
        front_vehicle == 1
        direction_v1 == 0
        movement_other_v2 in 1,13
        v1_yield_for absent
    end

Operators are ``==``, ``!=``, ``in`` (comma separated codes), ``absent`` and
``present``.  Values are integer codes (``0``/``1`` for yes/no fields).
A record takes the scenario of the first matching rule after ordering by
priority (higher first) and then by position in the file.
"""

from __future__ import annotations

import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from ._numeric import percent
from .data_model import (
    LOW_CONFIDENCE_SCENARIOS,
    OTHER_SCENARIO,
    SPECS_BY_NAME,
    CrashRecord,
    ScenarioId,
)

OPERATORS = ("==", "!=", "in", "absent", "present")
_RULE_ID = re.compile(r"^[A-Za-z0-9_.:-]+$")


class RuleLoadError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        self.line = line
        where = f"{source}:" if source else ""
        prefix = f"{where}line {line}: " if line is not None else where
        super().__init__(prefix + message)


@dataclass(frozen=True)
class FieldPredicate:
    field: str
    operator: str
    values: frozenset[int] = frozenset()

    def __post_init__(self):
        spec = SPECS_BY_NAME.get(self.field)
        if spec is None:
            raise RuleLoadError(f"unknown field {self.field!r}")
        if spec.kind not in ("code", "bool", "count"):
            raise RuleLoadError(f"field {self.field!r} cannot appear in a rule")
        if self.operator not in OPERATORS:
            raise RuleLoadError(f"unknown operator {self.operator!r}")
        if self.operator in ("absent", "present"):
            if self.values:
                raise RuleLoadError(f"{self.operator} takes no value")
            return
        if not self.values:
            raise RuleLoadError(f"{self.operator} needs a value")
        if self.operator != "in" and len(self.values) != 1:
            raise RuleLoadError(f"{self.operator} takes exactly one value")
        for v in self.values:
            if spec.kind == "count":
                ok = v >= 1
            else:
                ok = v in spec.codes
            if not ok:
                raise RuleLoadError(f"value {v} out of range for {self.field}")

    def holds(self, record: CrashRecord) -> bool:
        value = getattr(record, self.field)
        if self.operator == "absent":
            return value is None
        if self.operator == "present":
            return value is not None
        if value is None:
            return self.operator == "!="
        value = int(value)
        if self.operator == "==" or self.operator == "in":
            return value in self.values
        return value not in self.values

    def __str__(self) -> str:
        if self.operator in ("absent", "present"):
            return f"{self.field} {self.operator}"
        vals = ",".join(str(v) for v in sorted(self.values))
        return f"{self.field} {self.operator} {vals}"


@dataclass(frozen=True)
class MappingRule:
    rule_id: str
    predicates: tuple[FieldPredicate, ...]
    scenario: int
    priority: int = 0

    def __post_init__(self):
        if not self.predicates:
            raise RuleLoadError(f"rule {self.rule_id!r} has no predicates")
        ScenarioId(self.scenario)
        equals: dict[str, int] = {}
        for p in self.predicates:
            if p.operator != "==":
                continue
            (v,) = p.values
            if equals.setdefault(p.field, v) != v:
                raise RuleLoadError(
                    f"rule {self.rule_id!r}: contradictory values for {p.field}")

    def matches(self, record: CrashRecord) -> bool:
        return all(p.holds(record) for p in self.predicates)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[MappingRule, ...]
    default_scenario: int = OTHER_SCENARIO

    def __post_init__(self):
        ids = Counter(r.rule_id for r in self.rules)
        dupes = sorted(i for i, c in ids.items() if c > 1)
        if dupes:
            raise RuleLoadError("duplicate rule id(s): " + ", ".join(dupes))
        ScenarioId(self.default_scenario)

    @cached_property
    def ordered(self) -> tuple[MappingRule, ...]:
        # stable sort keeps file order among equal priorities
        return tuple(sorted(self.rules, key=lambda r: -r.priority))

    def __len__(self) -> int:
        return len(self.rules)


def parse_rules(text: str, source: str = "") -> RuleSet:
    rules: list[MappingRule] = []
    default = OTHER_SCENARIO
    current: dict | None = None

    def fail(msg: str, line: int):
        raise RuleLoadError(msg, line, source)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if current is None:
            if head == "default":
                if len(words) != 2 or not words[1].isdigit():
                    fail("expected 'default <scenario>'", line_no)
                default = int(words[1])
                try:
                    ScenarioId(default)
                except ValueError as exc:
                    fail(str(exc), line_no)
            elif head == "rule":
                current = _parse_rule_header(words, line_no, fail)
            else:
                fail(f"expected 'rule' or 'default', found {head!r}", line_no)
            continue
        if head == "end":
            if len(words) != 1:
                fail("unexpected text after 'end'", line_no)
            try:
                rules.append(MappingRule(current["id"], tuple(current["preds"]),
                                         current["scenario"], current["priority"]))
            except RuleLoadError as exc:
                fail(str(exc), current["line"])
            current = None
            continue
        if head == "rule":
            fail("missing 'end' before next rule", line_no)
        current["preds"].append(_parse_predicate(words, line_no, fail))
    if current is not None:
        raise RuleLoadError(f"rule {current['id']!r} is missing 'end'", current["line"], source)
    try:
        return RuleSet(tuple(rules), default)
    except RuleLoadError as exc:
        raise RuleLoadError(str(exc), None, source) from None


def _parse_rule_header(words: list[str], line_no: int, fail) -> dict:
    if len(words) < 4 or not _RULE_ID.match(words[1]):
        fail("expected 'rule <id> [priority <n>] scenario <n>'", line_no)
    rest = words[2:]
    opts: dict[str, int] = {}
    if len(rest) % 2:
        fail("expected key/value pairs after rule id", line_no)
    for key, value in zip(rest[::2], rest[1::2]):
        if key not in ("priority", "scenario") or key in opts:
            fail(f"unexpected {key!r} in rule header", line_no)
        try:
            opts[key] = int(value)
        except ValueError:
            fail(f"{key} must be an integer", line_no)
    if "scenario" not in opts:
        fail("rule header lacks a scenario", line_no)
    try:
        ScenarioId(opts["scenario"])
    except ValueError as exc:
        fail(str(exc), line_no)
    return {"id": words[1], "scenario": opts["scenario"],
            "priority": opts.get("priority", 0), "preds": [], "line": line_no}


def _parse_predicate(words: list[str], line_no: int, fail) -> FieldPredicate:
    if len(words) == 2 and words[1] in ("absent", "present"):
        values: frozenset[int] = frozenset()
    elif len(words) >= 3 and words[1] in ("==", "!=", "in"):
        raw = "".join(words[2:])
        try:
            values = frozenset(int(v) for v in raw.split(","))
        except ValueError:
            fail(f"bad value list {raw!r}", line_no)
    else:
        fail("expected '<field> <op> <value>'", line_no)
    try:
        return FieldPredicate(words[0], words[1], values)
    except RuleLoadError as exc:
        fail(str(exc), line_no)


def load_rules(path: str | Path) -> RuleSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RuleLoadError(f"cannot read rule file: {exc}", None, str(path)) from exc
    return parse_rules(text, source=path.name)


# --- classification -----------------------------------------------------------

@dataclass(frozen=True)
class MatchTrace:
    rule_id: str | None = None
    satisfied: tuple[FieldPredicate, ...] = ()
    low_confidence: bool = False


@dataclass(frozen=True)
class Classification:
    scenario: int
    trace: MatchTrace


def classify(record: CrashRecord, rules: RuleSet) -> Classification:
    for rule in rules.ordered:
        if rule.matches(record):
            trace = MatchTrace(rule.rule_id, rule.predicates,
                               rule.scenario in LOW_CONFIDENCE_SCENARIOS)
            return Classification(rule.scenario, trace)
    return Classification(rules.default_scenario, MatchTrace())


def classify_all(records: Iterable[CrashRecord], rules: RuleSet,
                 workers: int = 1) -> dict[str, int]:
    """Map each record id to its scenario.  Output order follows the input."""
    records = list(records)

    def one(record: CrashRecord) -> int:
        return classify(record, rules).scenario

    if workers > 1 and records:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scenarios = list(pool.map(one, records))
    else:
        scenarios = [one(r) for r in records]
    return {r.record_id: s for r, s in zip(records, scenarios)}


# --- evaluation ----------------------------------------------------------------

class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationReport:
    total: int
    correct: int
    false_count: int
    missed_per_scenario: Mapping[int, int]
    confusion: Mapping[tuple[int, int], int] = field(default_factory=dict)
    scenarios_fully_correct: int = 0
    scenarios_seen: int = 0

    @property
    def missed_count(self) -> int:
        return sum(self.missed_per_scenario.values())

    @property
    def far(self) -> float:
        return self.false_count / self.total if self.total else 0.0

    @property
    def mar(self) -> float:
        return self.missed_count / self.total if self.total else 0.0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


def evaluate(predicted: Mapping[str, int], ground_truth: Mapping[str, int],
             default_scenario: int = OTHER_SCENARIO) -> EvaluationReport:
    """Score predictions against labels.

    A wrong non-default prediction is a false alarm.  A miss is a confusion
    with the default class in either direction: a real scenario left at the
    default, or a true default record pushed into a specific scenario.  The
    latter is therefore both false and missed, so the three rates need not
    add up to one.
    """
    missing_pred = sorted(set(ground_truth) - set(predicted))
    missing_truth = sorted(set(predicted) - set(ground_truth))
    if missing_pred or missing_truth:
        parts = []
        if missing_pred:
            parts.append("no prediction for: " + ", ".join(missing_pred[:10]))
        if missing_truth:
            parts.append("no ground truth for: " + ", ".join(missing_truth[:10]))
        raise EvaluationError("; ".join(parts))

    correct = false = 0
    missed: Counter = Counter()
    confusion: Counter = Counter()
    for rid, truth in ground_truth.items():
        pred = predicted[rid]
        if pred == truth:
            correct += 1
            continue
        confusion[(truth, pred)] += 1
        if pred != default_scenario:
            false += 1
        if pred == default_scenario or truth == default_scenario:
            missed[truth] += 1
    seen = set(ground_truth.values()) | set(predicted.values())
    touched = {s for pair in confusion for s in pair}
    return EvaluationReport(
        total=len(ground_truth),
        correct=correct,
        false_count=false,
        missed_per_scenario=dict(sorted(missed.items())),
        confusion=dict(sorted(confusion.items())),
        scenarios_fully_correct=len(seen - touched),
        scenarios_seen=len(seen),
    )


@dataclass(frozen=True)
class FrequencyRow:
    scenario: int
    count: int
    total: int

    @property
    def name(self) -> str:
        return ScenarioId(self.scenario).name

    @property
    def percentage(self) -> float:
        return 100 * self.count / self.total

    @property
    def percentage_text(self) -> str:
        return str(percent(self.count, self.total))


def scenario_frequency_table(assignments: Mapping[str, int] | Iterable[int]
                             ) -> list[FrequencyRow]:
    """Rows sorted by count (descending), ties by scenario id."""
    values = assignments.values() if isinstance(assignments, Mapping) else assignments
    counts = Counter(values)
    total = sum(counts.values())
    order = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [FrequencyRow(s, c, total) for s, c in order]
