"""Command-line front end.

Output layout under ``--out``::

    records/      analysis.csv, diagnostics.txt
    assignments/  assignments.csv, frequency.csv, confusion.csv
    rules/        rules.csv, scenario_<id>.csv
    dream/        graph.dot, nodes.csv, links.csv, shares.csv
    reports/      filter.csv, evaluation.csv, location_type.csv, ...
    run.log       one line per invocation (the only file with timestamps)

Settings come from a TOML file (``--config`` or ``$PRECRASH_CONFIG``);
command-line flags override it.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import io
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from ._numeric import percent
from .data_model import FIELD_NAMES, SCENARIO_NAMES, CrashRecord, parse_scenario_set
from .dream import (
    CATEGORIES,
    GENOTYPE,
    PHENOTYPE,
    DreamError,
    Taxonomy,
    aggregate,
    emit_graph,
    factor_share,
    load_chains,
)
from .ingestion import (
    PARTY_ORDER,
    IngestError,
    annual_party_distribution,
    dumps_records,
    filter_for_analysis,
    parse_many,
)
from .mining import (
    DEFAULT_MINING_FIELDS,
    MiningError,
    MiningSettings,
    mine_scenarios,
    rules_table,
    scenario_token,
)
from .reporting import (
    REAR_END_GROUP,
    ScenarioGroup,
    damage_heatmap,
    all_tables,
    severity_by_scenario,
)
from .scenarios import (
    EvaluationError,
    RuleLoadError,
    RuleSet,
    classify,
    evaluate,
    load_rules,
    scenario_frequency_table,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_ENV = "PRECRASH_CONFIG"

EXIT_OK = 0
EXIT_INVALID_ROWS = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3


class ConfigError(ValueError):
    pass


def bundled(name: str) -> Path:
    """Path of a file shipped in ``precrash/data``."""
    return Path(str(resources.files("precrash").joinpath("data", name)))


@dataclass
class Config:
    min_support: float = 0.02
    min_confidence: float = 0.8
    min_lift: float = 1.0
    min_len: int = 3
    max_len: int = 6
    fields: tuple[str, ...] = DEFAULT_MINING_FIELDS
    universe: str = "rear-end"
    scenario: int | None = None
    rules: str | None = None
    taxonomy: str | None = None
    chains: str | None = None
    truth: str | None = None
    intersection_group: str = "27-30,33"
    workers: int = 1

    def check(self) -> None:
        try:
            self.mining_settings().check()
        except MiningError as exc:
            raise ConfigError(str(exc)) from None
        unknown = [f for f in self.fields if f not in FIELD_NAMES]
        if unknown:
            raise ConfigError("unknown mining field(s): " + ", ".join(unknown))
        for key in ("universe", "intersection_group"):
            try:
                parse_scenario_set(getattr(self, key))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        if self.scenario is not None and self.scenario not in SCENARIO_NAMES:
            raise ConfigError(f"scenario: unknown scenario id {self.scenario}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def mining_settings(self) -> MiningSettings:
        return MiningSettings(self.min_support, self.min_confidence, self.min_lift,
                              self.min_len, self.max_len, tuple(self.fields), self.workers)

    @property
    def universe_ids(self) -> frozenset[int]:
        return parse_scenario_set(self.universe)

    @property
    def intersection_scenarios(self) -> ScenarioGroup:
        ids = parse_scenario_set(self.intersection_group)
        return ScenarioGroup("intersection", ids, intersection_only=ids)


# TOML section -> keys it may hold
_SECTIONS = {
    "mining": ("min_support", "min_confidence", "min_lift", "min_len", "max_len",
               "fields", "universe", "scenario", "workers"),
    "paths": ("rules", "taxonomy", "chains", "truth"),
    "report": ("intersection_group",),
}
_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}


def _coerce(key: str, value: Any) -> Any:
    kind = _TYPES[key]
    if key == "fields":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError("fields must be a list of field names")
        return tuple(value)
    if kind == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind in ("int", "int | None") and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind in ("str", "str | None") and isinstance(value, str):
        return value
    raise ConfigError(f"{key}: unexpected value {value!r}")


def load_config(path: str | Path | None) -> Config:
    config = Config()
    if path is None:
        return config
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, body in data.items():
        if section not in _SECTIONS or not isinstance(body, dict):
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in body.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            value = _coerce(key, value)
            if section == "paths":
                value = str((path.parent / value).resolve())
            setattr(config, key, value)
    return config


def load_taxonomy(path: str | None) -> Taxonomy:
    """Bundled taxonomy plus the ``[[term]]`` entries of a TOML file."""
    taxonomy = Taxonomy.bundled()
    if path is None:
        return taxonomy
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"taxonomy {path}: {exc}") from None
    for term in data.get("term", []):
        kind = term.get("kind", GENOTYPE)
        category = term.get("category")
        if kind == GENOTYPE and category not in CATEGORIES:
            raise ConfigError(f"taxonomy {path}: bad category {category!r}")
        try:
            taxonomy.register(term["label"], kind, category if kind != PHENOTYPE else None)
        except (KeyError, DreamError) as exc:
            raise ConfigError(f"taxonomy {path}: {exc}") from None
    return taxonomy


# --- output helpers -------------------------------------------------------------

def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


class Output:
    def __init__(self, root: Path):
        self.root = root
        self.written: list[Path] = []

    def write(self, relative: str, text: str) -> Path:
        path = self.root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
        self.written.append(path)
        return path


def _log_run(root: Path, argv: Sequence[str], status: int) -> None:
    root.mkdir(parents=True, exist_ok=True)
    stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    with open(root / "run.log", "a", encoding="utf-8") as log:
        log.write(f"{stamp}\tprecrash {__version__}\tstatus={status}\t{' '.join(argv)}\n")


# --- stages ---------------------------------------------------------------------

def _read(inputs: Sequence[str], workers: int) -> tuple[list[CrashRecord], list[str]]:
    parsed = parse_many(inputs, workers=workers)
    return parsed.records, [str(d) for d in parsed.diagnostics]


def stage_ingest(out: Output, records: list[CrashRecord], diagnostics: list[str]
                 ) -> list[CrashRecord]:
    result = filter_for_analysis(records)
    out.write("records/analysis.csv", dumps_records(result.retained))
    out.write("records/diagnostics.txt", "".join(d + "\n" for d in diagnostics))
    out.write("reports/filter.csv", _csv(
        [("criterion", "removed")] + sorted(result.removed.items())
        + [("retained", len(result.retained))]))
    print(f"ingest: {len(records)} parsed, {len(result.retained)} retained, "
          f"{result.n_removed} removed, {len(diagnostics)} diagnostics")
    return result.retained


def stage_classify(out: Output, records: list[CrashRecord], rules: RuleSet) -> dict[str, int]:
    assignments: dict[str, int] = {}
    rows: list[tuple] = [("record_id", "scenario", "rule", "low_confidence")]
    for record in records:
        result = classify(record, rules)
        assignments[record.record_id] = result.scenario
        rows.append((record.record_id, result.scenario, result.trace.rule_id or "",
                     int(result.trace.low_confidence)))
    out.write("assignments/assignments.csv", _csv(rows))
    table = scenario_frequency_table(assignments)
    out.write("assignments/frequency.csv", _csv(
        [("scenario", "name", "count", "percentage")]
        + [(r.scenario, r.name, r.count, r.percentage_text) for r in table]))
    print(f"classify: {len(records)} records into {len(table)} scenarios")
    return assignments


def read_truth(path: str | Path) -> dict[str, int]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or {"record_id", "scenario"} - set(reader.fieldnames):
                raise EvaluationError(f"{path}: expected columns record_id, scenario")
            return {row["record_id"]: int(row["scenario"]) for row in reader}
    except OSError as exc:
        raise EvaluationError(f"cannot read ground truth {path}: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, EvaluationError):
            raise
        raise EvaluationError(f"{path}: bad scenario id ({exc})") from None


def stage_evaluate(out: Output, assignments: dict[str, int], truth: dict[str, int],
                   default: int) -> None:
    report = evaluate(assignments, truth, default)
    out.write("assignments/confusion.csv", _csv(
        [("truth", "predicted", "count")]
        + [(t, p, c) for (t, p), c in report.confusion.items()]))
    out.write("reports/evaluation.csv", _csv([
        ("metric", "value"),
        ("total", report.total),
        ("correct", report.correct),
        ("false", report.false_count),
        ("missed", report.missed_count),
        ("far_percent", _pct(report.false_count, report.total)),
        ("mar_percent", _pct(report.missed_count, report.total)),
        ("accuracy_percent", _pct(report.correct, report.total)),
        ("scenarios_fully_correct", report.scenarios_fully_correct),
        ("scenarios_seen", report.scenarios_seen),
    ]))
    print(f"evaluate: accuracy {_pct(report.correct, report.total)}%, "
          f"FAR {_pct(report.false_count, report.total)}%, "
          f"MAR {_pct(report.missed_count, report.total)}%")


def _pct(count: int, total: int) -> str:
    return str(percent(count, total)) if total else ""


def stage_mine(out: Output, records: list[CrashRecord], assignments: dict[str, int],
               config: Config) -> None:
    rules = mine_scenarios(records, assignments, config.mining_settings(),
                           target=config.scenario, universe=config.universe_ids)
    fields = tuple(config.fields)
    out.write("rules/rules.csv", rules_table(rules, fields))
    for scenario in sorted({_scenario_of(r.consequent[0]) for r in rules}):
        token = scenario_token(scenario)
        subset = [r for r in rules if r.consequent == (token,)]
        out.write(f"rules/scenario_{scenario}.csv", rules_table(subset, fields))
    print(f"mine: {len(rules)} rules")


def _scenario_of(token: str) -> int:
    for sid in SCENARIO_NAMES:
        if scenario_token(sid) == token:
            return sid
    raise MiningError(f"unrecognised scenario token {token!r}")


def stage_dream(out: Output, chains: str, taxonomy: Taxonomy) -> None:
    graph = load_chains(chains, taxonomy)
    agg = aggregate(graph)
    total = len(graph.registry)
    out.write("dream/graph.dot", emit_graph(graph))
    out.write("dream/nodes.csv", _csv(
        [("label", "kind", "category", "crashes")]
        + [(label, taxonomy[label].kind, taxonomy[label].category or "", n)
           for label, n in agg.node_counts.items()]))
    out.write("dream/links.csv", _csv(
        [("source", "target", "crashes")] + [(s, t, n) for (s, t), n in agg.link_counts.items()]))
    rows: list[tuple] = [("factor", "crashes", "total", "share")]
    night = factor_share(graph, where=lambda meta: bool(meta.get("night")))
    rows.append(("night", night.numerator, night.denominator, _frac(night.value)))
    for label in agg.node_counts:
        share = factor_share(graph, label)
        rows.append((label, share.numerator, share.denominator, _frac(share.value)))
    out.write("dream/shares.csv", _csv(rows))
    print(f"dream: {total} crashes, {len(agg.link_counts)} links")


def _frac(value) -> str:
    return "" if value is None else f"{value.numerator}/{value.denominator}"


def stage_report(out: Output, records: list[CrashRecord], assignments: dict[str, int],
                 config: Config) -> None:
    for name, table in all_tables(records).items():
        out.write(f"reports/{name}.csv", table.to_csv())
    out.write("reports/damage_heatmap.csv", damage_heatmap(records).to_csv())
    groups = (REAR_END_GROUP, config.intersection_scenarios)
    rows: list[tuple] = [("group", "damage_severity", "count", "percentage")]
    for group, table in severity_by_scenario(assignments, records, groups).items():
        for row in table.rows:
            rows.append((group, row.label, row.count, _pct(row.count, row.total)))
    out.write("reports/severity_by_group.csv", _csv(rows))
    dist = annual_party_distribution(records)
    out.write("reports/party_by_year.csv", _csv(
        [("year", *PARTY_ORDER)] + [(y, *(row.get(p, 0) for p in PARTY_ORDER))
                                    for y, row in dist.items()]))
    print(f"report: {len(records)} records")


# --- argument handling ----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"TOML settings file (default: ${CONFIG_ENV})")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--workers", type=int, help="parallel workers")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--input", nargs="+", required=True, metavar="FILE",
                        help="record file(s), .csv or .jsonl")

    rules = argparse.ArgumentParser(add_help=False)
    rules.add_argument("--rules", help="scenario rule file (default: bundled reference rules)")

    mining = argparse.ArgumentParser(add_help=False)
    mining.add_argument("--min-support", type=float)
    mining.add_argument("--min-confidence", type=float)
    mining.add_argument("--min-lift", type=float)
    mining.add_argument("--min-len", type=int)
    mining.add_argument("--max-len", type=int)
    mining.add_argument("--scenario", type=int, help="only rules concluding this scenario")
    mining.add_argument("--universe", help='scenarios forming the transaction set, e.g. "20-24"')

    truth = argparse.ArgumentParser(add_help=False)
    truth.add_argument("--truth", help="CSV of record_id,scenario labels")
    chains = argparse.ArgumentParser(add_help=False)
    chains.add_argument("--chains", help="causal chain file (.jsonl)")
    chains.add_argument("--taxonomy", help="TOML file of extra taxonomy terms")

    parser = argparse.ArgumentParser(prog="precrash",
                                     description="AV pre-crash scenario analysis")
    parser.add_argument("--version", action="version", version=f"precrash {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("validate", parents=[common, inputs], help="check record files")
    sub.add_parser("ingest", parents=[common, inputs], help="parse and filter records")
    sub.add_parser("classify", parents=[common, inputs, rules], help="assign scenarios")
    sub.add_parser("evaluate", parents=[common, inputs, rules, truth],
                   help="score assignments against labels")
    sub.add_parser("mine", parents=[common, inputs, rules, mining],
                   help="mine scenario association rules")
    sub.add_parser("dream", parents=[common, chains], help="aggregate causal chains")
    sub.add_parser("report", parents=[common, inputs, rules], help="descriptive tables")
    sub.add_parser("pipeline", parents=[common, inputs, rules, mining, truth, chains],
                   help="ingest, classify, evaluate, mine, dream and report")
    return parser


_FLAG_KEYS = ("min_support", "min_confidence", "min_lift", "min_len", "max_len", "scenario",
              "universe", "rules", "truth", "chains", "taxonomy", "workers")


def resolve_config(args: argparse.Namespace) -> Config:
    path = args.config or os.environ.get(CONFIG_ENV) or None
    config = load_config(path)
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    config.check()
    return config


def run(argv: Sequence[str]) -> int:
    args = _parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"precrash: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(Path(args.out))
    try:
        status = _dispatch(args.command, args, config, out)
    except (IngestError, RuleLoadError, EvaluationError, MiningError, DreamError) as exc:
        print(f"precrash: {args.command}: {exc}", file=sys.stderr)
        status = EXIT_INPUT
    except ConfigError as exc:
        print(f"precrash: config error: {exc}", file=sys.stderr)
        status = EXIT_CONFIG
    _log_run(out.root, argv, status)
    return status


def _dispatch(command: str, args: argparse.Namespace, config: Config, out: Output) -> int:
    if command == "dream":
        if not config.chains:
            raise ConfigError("dream needs --chains or paths.chains")
        stage_dream(out, config.chains, load_taxonomy(config.taxonomy))
        return EXIT_OK

    records, diagnostics = _read(args.input, config.workers)
    if command == "validate":
        out.write("records/diagnostics.txt", "".join(d + "\n" for d in diagnostics))
        for line in diagnostics:
            print(line)
        print(f"validate: {len(records)} valid, {len(diagnostics)} diagnostics")
        return EXIT_INVALID_ROWS if diagnostics else EXIT_OK
    if command == "ingest":
        stage_ingest(out, records, diagnostics)
        return EXIT_OK

    rules = load_rules(config.rules or bundled("reference_rules.txt"))
    if command == "pipeline":
        records = stage_ingest(out, records, diagnostics)
    assignments = stage_classify(out, records, rules)
    if command in ("evaluate", "pipeline") and (config.truth or command == "evaluate"):
        if not config.truth:
            raise ConfigError("evaluate needs --truth or paths.truth")
        truth = read_truth(config.truth)
        if command == "pipeline":
            truth = {rid: s for rid, s in truth.items() if rid in assignments}
        stage_evaluate(out, assignments, truth, rules.default_scenario)
    if command in ("mine", "pipeline"):
        stage_mine(out, records, assignments, config)
    if command == "pipeline" and config.chains:
        stage_dream(out, config.chains, load_taxonomy(config.taxonomy))
    if command in ("report", "pipeline"):
        stage_report(out, records, assignments, config)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run(list(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
