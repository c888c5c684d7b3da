"""Descriptive statistics over crash records, emitted as plain tables."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ._numeric import percent
from .data_model import (
    DAMAGE_SEVERITY,
    DAMAGE_ZONES,
    GRID_SHAPE,
    INTERSECTION_LOCATIONS,
    SPECS_BY_NAME,
    CrashRecord,
)

NO_CONTROL = 2


@dataclass(frozen=True)
class DistributionRow:
    label: str
    count: int
    total: int

    @property
    def percentage(self) -> float:
        return 100 * self.count / self.total

    def rounded(self, digits: int = 2) -> float:
        return float(percent(self.count, self.total, digits))


@dataclass(frozen=True)
class DistributionTable:
    dimension: str
    rows: tuple[DistributionRow, ...]
    total: int

    def share(self, label: str) -> float:
        for row in self.rows:
            if row.label == label:
                return row.percentage
        return 0.0

    def count(self, label: str) -> int:
        return next((r.count for r in self.rows if r.label == label), 0)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.dimension, "count", "percentage"])
        for row in self.rows:
            w.writerow([row.label, row.count, percent(row.count, row.total)])
        return buf.getvalue()

    def to_records(self) -> list[dict]:
        return [{"dimension": self.dimension, "label": r.label, "count": r.count,
                 "percentage": str(percent(r.count, r.total))} for r in self.rows]


def _table(dimension: str, field: str, records: Iterable[CrashRecord]) -> DistributionTable:
    codes = SPECS_BY_NAME[field].codes
    counts = Counter(codes.canonical(getattr(r, field)) for r in records)
    total = sum(counts.values())
    rows = tuple(DistributionRow(codes.label(code), counts[code], total)
                 for code in codes if counts[code])
    return DistributionTable(dimension, rows, total)


def location_distribution(records: Iterable[CrashRecord]) -> DistributionTable:
    return _table("location_type", "location_type", records)


def control_type_distribution(records: Iterable[CrashRecord],
                              controlled_only: bool = True) -> DistributionTable:
    """Control types of intersection-area crashes.

    By default shares are taken over controlled intersections, leaving out
    crashes coded "no control".
    """
    subset = [r for r in records if r.location_type in INTERSECTION_LOCATIONS]
    if controlled_only:
        subset = [r for r in subset if r.traffic_control_type != NO_CONTROL]
    return _table("traffic_control_type", "traffic_control_type", subset)


def severity_distribution(records: Iterable[CrashRecord]) -> DistributionTable:
    return _table("damage_severity", "damage_severity", records)


@dataclass(frozen=True)
class HeatmapMatrix:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def grid(self) -> list[list[int | None]]:
        rows, cols = GRID_SHAPE
        grid: list[list[int | None]] = [[None] * cols for _ in range(rows)]
        for zone, (r, c) in DAMAGE_ZONES.items():
            grid[r][c] = self.counts[zone]
        return grid

    def hottest(self) -> str:
        return max(DAMAGE_ZONES, key=lambda z: (self.counts[z], -list(DAMAGE_ZONES).index(z)))

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zone", "row", "column", "count"])
        for zone, (r, c) in DAMAGE_ZONES.items():
            w.writerow([zone, r, c, self.counts[zone]])
        return buf.getvalue()


def damage_heatmap(records: Iterable[CrashRecord]) -> HeatmapMatrix:
    counts = Counter()
    for record in records:
        counts.update(record.damage_locations)
    return HeatmapMatrix({zone: counts[zone] for zone in DAMAGE_ZONES})


@dataclass(frozen=True)
class ScenarioGroup:
    name: str
    scenarios: frozenset[int]
    # scenarios counted only when the crash is located in an intersection area
    intersection_only: frozenset[int] = frozenset()

    def contains(self, scenario: int, record: CrashRecord) -> bool:
        if scenario not in self.scenarios:
            return False
        if scenario in self.intersection_only:
            return record.location_type in INTERSECTION_LOCATIONS
        return True


INTERSECTION_GROUP = ScenarioGroup(
    "intersection",
    frozenset({27, 28, 29, 30, 33}),
    intersection_only=frozenset({27, 28, 29, 30, 33}),
)
REAR_END_GROUP = ScenarioGroup("rear-end", frozenset({20, 21, 22, 23, 24}))
DEFAULT_GROUPS = (REAR_END_GROUP, INTERSECTION_GROUP)


def severity_by_scenario(
    assignments: Mapping[str, int],
    records: Iterable[CrashRecord],
    groups: Sequence[ScenarioGroup] = DEFAULT_GROUPS,
) -> dict[str, DistributionTable]:
    records = list(records)
    out = {}
    for group in groups:
        members = [r for r in records if group.contains(assignments[r.record_id], r)]
        out[group.name] = severity_distribution(members)
    return out


def moderate_and_above(table: DistributionTable) -> tuple[int, int]:
    """(crashes at least moderately damaged, total) for a severity table."""
    heavy = {DAMAGE_SEVERITY.label(2), DAMAGE_SEVERITY.label(3)}
    return sum(r.count for r in table.rows if r.label in heavy), table.total


def all_tables(records: Sequence[CrashRecord]) -> dict[str, DistributionTable]:
    return {
        "location_type": location_distribution(records),
        "traffic_control_type": control_type_distribution(records),
        "damage_severity": severity_distribution(records),
    }


__all__ = [
    "DistributionRow", "DistributionTable", "HeatmapMatrix", "ScenarioGroup",
    "location_distribution", "control_type_distribution", "severity_distribution",
    "damage_heatmap", "severity_by_scenario", "moderate_and_above",
    "INTERSECTION_GROUP", "REAR_END_GROUP", "DEFAULT_GROUPS",
]
