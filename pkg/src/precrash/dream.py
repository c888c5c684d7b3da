"""DREAM causal chains: taxonomy, per-crash chains and their aggregation.

Genotypes (contributing factors) link toward other genotypes or toward
phenotypes (the observable effect).  A chain file holds one JSON object per
line::

    {"crash_id": "c01", "metadata": {"night": true},
     "links": [["habitually-stretching-rules", "misjudgement-of-situation"],
               ["misjudgement-of-situation", "timing/no-action"]]}
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

PHENOTYPE = "phenotype"
GENOTYPE = "genotype"

CATEGORIES = (
    "driver-observation",
    "driver-interpretation",
    "driver-permanent-personal",
    "traffic-environment",
    "organization",
    "vehicle",
)


class DreamError(ValueError):
    pass


class UnknownLabelError(DreamError, KeyError):
    def __str__(self) -> str:
        return self.args[0]


class CycleError(DreamError):
    pass


class ChainError(DreamError):
    pass


@dataclass(frozen=True)
class CausalNode:
    node_id: str
    kind: str
    label: str
    category: str | None = None

    @property
    def observable_class(self) -> str | None:
        """Phenotype class, e.g. ``timing`` for ``timing/no-action``."""
        if self.kind != PHENOTYPE:
            return None
        return self.label.split("/", 1)[0]


_BUNDLED: tuple[tuple[str, str | None], ...] = (
    ("timing/too-early-action", None),
    ("timing/no-action", None),
    ("speed", None),
    ("distance", None),
    ("direction", None),
    ("misjudgement-of-time-gaps", "driver-interpretation"),
    ("misjudgement-of-situation", "driver-interpretation"),
    ("expectancy-of-certain-behaviours", "driver-permanent-personal"),
    ("habitually-stretching-rules", "driver-permanent-personal"),
    ("insufficient-skills-knowledge", "driver-permanent-personal"),
    ("missed-observation", "driver-observation"),
    ("late-observation", "driver-observation"),
    ("permanent-obstruction-of-view", "traffic-environment"),
    ("temporary-obstruction-of-view", "traffic-environment"),
    ("insufficient-guidance", "traffic-environment"),
    ("inadequate-road-geometry", "traffic-environment"),
)


class Taxonomy:
    """Closed set of node labels; extra DREAM terms must be registered."""

    def __init__(self, nodes: Iterable[CausalNode] = ()):
        self._nodes: dict[str, CausalNode] = {}
        for node in nodes:
            self.register(node.label, node.kind, node.category)

    @classmethod
    def bundled(cls) -> "Taxonomy":
        tax = cls()
        for label, category in _BUNDLED:
            tax.register(label, PHENOTYPE if category is None else GENOTYPE, category)
        return tax

    def register(self, label: str, kind: str, category: str | None = None) -> CausalNode:
        if label in self._nodes:
            raise DreamError(f"label {label!r} already in taxonomy")
        if kind == PHENOTYPE:
            if category is not None:
                raise DreamError("phenotypes carry no genotype category")
        elif kind == GENOTYPE:
            if category not in CATEGORIES:
                raise DreamError(f"unknown genotype category {category!r}")
        else:
            raise DreamError(f"unknown node kind {kind!r}")
        node = CausalNode(label, kind, label, category)
        self._nodes[label] = node
        return node

    def __getitem__(self, label: str) -> CausalNode:
        try:
            return self._nodes[label]
        except KeyError:
            raise UnknownLabelError(f"unknown label {label!r}") from None

    def __contains__(self, label: object) -> bool:
        return label in self._nodes

    def __iter__(self):
        return iter(self._nodes.values())

    def __len__(self) -> int:
        return len(self._nodes)


@dataclass
class CausalLink:
    source: str
    target: str
    crash_ids: set[str] = field(default_factory=set)

    @property
    def count(self) -> int:
        return len(self.crash_ids)


class CausalChainGraph:
    """Aggregated causal chains of a crash set.  Single writer."""

    def __init__(self, taxonomy: Taxonomy | None = None):
        self.taxonomy = taxonomy or Taxonomy.bundled()
        self.links: dict[tuple[str, str], CausalLink] = {}
        self.registry: dict[str, dict[str, Any]] = {}
        self._succ: dict[str, set[str]] = defaultdict(set)

    @property
    def nodes(self) -> list[CausalNode]:
        used = {label for pair in self.links for label in pair}
        return [self.taxonomy[label] for label in sorted(used)]

    def _reaches(self, start: str, goal: str, extra: Mapping[str, set[str]]) -> bool:
        stack, seen = [start], set()
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self._succ.get(node, ()))
            stack.extend(extra.get(node, ()))
        return False

    def add_crash_chain(self, crash_id: str, chain: Sequence[tuple[str, str]],
                        metadata: Mapping[str, Any] | None = None) -> "CausalChainGraph":
        """Record one crash's chain; repeating an identical call changes nothing.

        Validated as a whole before anything is stored.
        """
        if not chain:
            raise ChainError(f"crash {crash_id!r}: empty chain")
        pending: dict[str, set[str]] = defaultdict(set)
        reaches_phenotype = False
        for source, target in chain:
            src, dst = self.taxonomy[source], self.taxonomy[target]
            if src.kind != GENOTYPE:
                raise ChainError(f"crash {crash_id!r}: link from phenotype {source!r}")
            if source == target:
                raise CycleError(f"crash {crash_id!r}: self-link on {source!r}")
            if (source, target) not in self.links and target not in pending[source]:
                if self._reaches(target, source, pending):
                    raise CycleError(
                        f"crash {crash_id!r}: link {source} -> {target} closes a cycle")
                pending[source].add(target)
            reaches_phenotype |= dst.kind == PHENOTYPE
        if not reaches_phenotype:
            raise ChainError(f"crash {crash_id!r}: no phenotype terminal")

        known = self.registry.get(crash_id)
        meta = dict(metadata or {})
        if known is not None and metadata is not None and known != meta:
            raise DreamError(f"crash {crash_id!r}: conflicting metadata")
        if known is None:
            self.registry[crash_id] = meta
        for source, target in chain:
            link = self.links.get((source, target))
            if link is None:
                link = self.links[(source, target)] = CausalLink(source, target)
                self._succ[source].add(target)
            link.crash_ids.add(crash_id)
        return self

    def crashes_with(self, label: str) -> set[str]:
        self.taxonomy[label]
        out: set[str] = set()
        for (source, target), link in self.links.items():
            if label in (source, target):
                out |= link.crash_ids
        return out

    def is_acyclic(self) -> bool:
        state: dict[str, int] = {}

        def visit(node: str) -> bool:
            state[node] = 1
            for nxt in self._succ.get(node, ()):
                mark = state.get(nxt)
                if mark == 1 or (mark is None and not visit(nxt)):
                    return False
            state[node] = 2
            return True

        return all(state.get(n) == 2 or visit(n) for n in list(self._succ))


@dataclass(frozen=True)
class Share:
    numerator: int
    denominator: int

    @property
    def value(self) -> Fraction | None:
        """``None`` when the registry is empty (undefined, not zero)."""
        if self.denominator == 0:
            return None
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        if self.denominator == 0:
            return float("nan")
        return self.numerator / self.denominator


def factor_share(graph: CausalChainGraph, label: str | None = None,
                 where: Callable[[Mapping[str, Any]], bool] | None = None) -> Share:
    """Share of registered crashes whose chain includes ``label``.

    ``where`` further restricts the counted crashes by their metadata; the
    denominator is always the whole registry.  With no label only ``where``
    applies.
    """
    if label is None:
        hits = set(graph.registry)
    else:
        hits = graph.crashes_with(label)
    if where is not None:
        hits = {c for c in hits if where(graph.registry[c])}
    return Share(len(hits), len(graph.registry))


@dataclass(frozen=True)
class Aggregate:
    node_counts: dict[str, int]
    link_counts: dict[tuple[str, str], int]


def aggregate(graph: CausalChainGraph) -> Aggregate:
    """Distinct crashes per node (over its incident links) and per link."""
    per_node: dict[str, set[str]] = defaultdict(set)
    for (source, target), link in graph.links.items():
        per_node[source] |= link.crash_ids
        per_node[target] |= link.crash_ids
    return Aggregate(
        {label: len(per_node[label]) for label in sorted(per_node)},
        {pair: graph.links[pair].count for pair in sorted(graph.links)},
    )


def _dot_id(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_graph(graph: CausalChainGraph, name: str = "dream") -> str:
    """Graphviz DOT text; node labels carry crash counts, edges their count."""
    agg = aggregate(graph)
    lines = [f"digraph {name} {{"]
    if graph.links:
        lines.append("  rankdir=LR;")
    for label, count in agg.node_counts.items():
        node = graph.taxonomy[label]
        shape = "ellipse" if node.kind == PHENOTYPE else "box"
        lines.append(f"  {_dot_id(label)} [kind={node.kind}, shape={shape}, "
                     f"label={_dot_id(f'{label} ({count})')}];")
    for (source, target), count in agg.link_counts.items():
        lines.append(f"  {_dot_id(source)} -> {_dot_id(target)} [label=\"{count}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- chain files -------------------------------------------------------------

def load_chains(path: str | Path, taxonomy: Taxonomy | None = None) -> CausalChainGraph:
    graph = CausalChainGraph(taxonomy)
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            crash_id = entry["crash_id"]
            links = [tuple(pair) for pair in entry["links"]]
            metadata = entry.get("metadata", {})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DreamError(f"{path}:{line_no}: malformed chain entry ({exc})") from None
        if any(len(pair) != 2 for pair in links):
            raise DreamError(f"{path}:{line_no}: each link needs [from, to]")
        try:
            graph.add_crash_chain(crash_id, links, metadata)
        except DreamError as exc:
            raise type(exc)(f"{path}:{line_no}: {exc}") from None
    return graph


def dumps_chains(entries: Iterable[Mapping[str, Any]]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
