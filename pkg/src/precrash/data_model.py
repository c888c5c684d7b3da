"""Coded crash records: field code sets, the record type and validation.

Every enumerated field is stored as its integer code.  Labels are the
spellings used when rendering mining tokens (``Field.Name=label``).
"Not applicable" is always ``None``; there is no sentinel code.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Mapping


class CodeSet:
    """A bidirectional code <-> label table for one enumerated field."""

    def __init__(
        self,
        name: str,
        labels: Mapping[int, str],
        aliases: Mapping[int, int] | None = None,
        extensible: bool = False,
    ):
        self.name = name
        self._labels = dict(labels)
        self._codes = {label: code for code, label in self._labels.items()}
        if len(self._codes) != len(self._labels):
            raise ValueError(f"{name}: duplicate labels")
        self.aliases = dict(aliases or {})
        self.extensible = extensible

    def __contains__(self, code: object) -> bool:
        return code in self._labels or code in self.aliases

    def __iter__(self):
        return iter(sorted(self._labels))

    def __len__(self) -> int:
        return len(self._labels)

    def canonical(self, code: int) -> int:
        return self.aliases.get(code, code)

    def label(self, code: int) -> str:
        return self._labels[self.canonical(code)]

    def code(self, label: str) -> int:
        return self._codes[label]

    def describe_range(self) -> str:
        codes = sorted(set(self._labels) | set(self.aliases))
        if codes == list(range(codes[0], codes[-1] + 1)):
            return f"{codes[0]}–{codes[-1]}"
        return "{" + ", ".join(map(str, codes)) + "}"

    def register(self, code: int, label: str) -> None:
        if not self.extensible:
            raise ValueError(f"code set {self.name!r} is closed")
        if code in self._labels or code in self.aliases:
            raise ValueError(f"{self.name}: code {code} already registered")
        if label in self._codes:
            raise ValueError(f"{self.name}: label {label!r} already registered")
        self._labels[code] = label
        self._codes[label] = code


LOCATION_TYPE = CodeSet("location_type", {
    1: "Intersection impact area",
    2: "Intersection center",
    3: "Parking lot",
    4: "Ramp",
    5: "Roadway segment",
})
INTERSECTION_LOCATIONS = frozenset({1, 2})

WEATHER = CodeSet("weather", {
    1: "clear", 2: "cloudy", 3: "raining", 4: "snowing",
    5: "fog/visibility", 6: "wind", 7: "other",
})
CRASH_TYPE = CodeSet("crash_type", {
    1: "head-on", 2: "sideswipe", 3: "rear end", 4: "broadside",
    5: "hit object", 6: "overturned", 7: "vehicle/pedestrian", 8: "other",
})
ROADWAY_SURFACE = CodeSet("roadway_surface", {
    1: "dry", 2: "wet", 3: "snowy-icy", 4: "slippery",
})
ROADWAY_CONDITIONS = CodeSet("roadway_conditions", {
    1: "holes", 2: "loose material", 3: "obstruction", 4: "construction",
    5: "reduced width", 6: "flooded", 7: "other", 8: "no unusual conditions",
})
TRAFFIC_CONTROL_TYPE = CodeSet("traffic_control_type", {
    1: "metering light", 2: "no control", 3: "signal", 4: "stop sign", 5: "yield sign",
})
# The coding sheet prints "Dark-Street Lights" twice (codes 3 and 5); 5 is read as 3.
LIGHTING = CodeSet("lighting", {
    1: "daylight", 2: "dusk-dawn", 3: "dark-street lights", 4: "dark-no street lights",
}, aliases={5: 3})
DARK_LIGHTING = frozenset({3, 4, 5})
TYPE_OF_INTERSECTION = CodeSet("type_of_intersection", {
    1: "cross-shaped", 2: "T-shaped", 3: "X-shaped", 4: "Y-shaped",
    5: "multi-roads", 6: "roundabout",
})
IF_PEAK_TIME = CodeSet("if_peak_time", {
    1: "non-peak", 2: "morning peak", 3: "evening peak",
})
MOVEMENT_PRECEDING = CodeSet("movement_preceding", {
    1: "stopped", 2: "proceeding straight", 3: "ran off road", 4: "making right turn",
    5: "making left turn", 6: "making U turn", 7: "backing", 8: "slowing/stopping",
    9: "passing other vehicle", 10: "changing lanes", 11: "parking maneuver",
    12: "entering traffic", 13: "other unsafe turning", 14: "xing into opposite lane",
    15: "parked", 16: "merging", 17: "traveling wrong way", 18: "other",
})
V1_INTENTION = CodeSet("v1_intention", {
    1: "signal stopped",
    2: "proceed straight&yield",
    3: "right turn&yield",
    4: "left turn&yield",
    5: "stopped in road traffic",
    6: "stopped stop sign",
    7: "merging&yield",
    8: "proceed straight",
}, extensible=True)
# intentions that may carry a V1 yield-for target
YIELDING_INTENTIONS = {2, 3, 4, 7}
V1_YIELD_FOR = CodeSet("v1_yield_for", {
    1: "oncoming traffic", 2: "cross traffic", 3: "front vehicle",
}, extensible=True)
CYCLE_LANE = CodeSet("cycle_lane", {
    1: "no-no cycle lane",
    2: "yes-no separation",
    3: "yes-mark separation",
    4: "yes-mark separation&columns",
    5: "yes-mark separation&barrier",
})
LANE_MARKINGS = CodeSet("lane_markings", {1: "lane markings", 2: "no lane markings"})
ROAD_TYPES = CodeSet("road_types", {
    1: "two-way with marked median",
    2: "two-way with hard median",
    3: "one-way",
    4: "two-way without median",
})
V1_MODE = CodeSet("v1_mode", {
    1: "autonomous engaged", 2: "autonomous disengaged", 3: "conventional",
})
V1_STATE = CodeSet("v1_state", {1: "moving", 2: "stopped in traffic"})
TYPE_OF_OBJECT_COLLIDED = CodeSet("type_of_object_collided", {
    1: "animal", 2: "vehicle", 3: "non-motorized vehicle", 4: "pedestrian",
    5: "object", 6: "none",
})
DIRECTION = CodeSet("direction", {0: "stopped", 1: "forward", 2: "backward"})
SPEED_CHANGE = CodeSet("speed_change", {0: "constant", 1: "accelerating", 2: "decelerating"})
MOVEMENT_TURN = CodeSet("movement_turn", {0: "none", 1: "right turn", 2: "left turn"})
MOVEMENT_OTHER = CodeSet("movement_other", {
    1: "proceeding straight", 2: "passing other vehicle", 3: "changing lanes",
    4: "making U turn", 5: "entering traffic", 6: "merging", 7: "ran off road",
    8: "parking maneuver", 9: "parked", 10: "travelling wrong way",
    11: "lane splitting", 12: "other", 13: "none",
})
RELATIVE_POSITION = CodeSet("relative_position", {
    1: "same lane&direction", 2: "same lane reverse direction",
    3: "lateral lane-right", 4: "lateral lane-left",
})
FRONT_VEHICLE = CodeSet("front_vehicle", {1: "autonomous vehicle", 2: "other vehicle"})
DAMAGE_SEVERITY = CodeSet("damage_severity", {
    0: "none", 1: "slight", 2: "moderate", 3: "severe",
})
BOOLEAN = CodeSet("boolean", {0: "no", 1: "yes"})

# Vehicle-body damage grid, (row, column) with the front of the AV at row 0.
DAMAGE_ZONES: dict[str, tuple[int, int]] = {
    "front_left": (0, 0),
    "front_bumper": (0, 1),
    "front_right": (0, 2),
    "left_side": (1, 0),
    "front_center": (1, 1),
    "right_side": (1, 2),
    "roof": (2, 1),
    "rear_center": (3, 1),
    "rear_left": (4, 0),
    "rear_bumper": (4, 1),
    "rear_right": (4, 2),
    "undercarriage": (5, 1),
}
GRID_SHAPE = (6, 3)


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str  # "code" | "bool" | "count" | "date" | "id" | "zones"
    codes: CodeSet | None = None
    optional: bool = False
    token: str | None = None

    @property
    def token_name(self) -> str:
        if self.token:
            return self.token
        head, *rest = self.name.split("_")
        return ".".join([head.capitalize(), *rest])


FIELD_SPECS: tuple[FieldSpec, ...] = (
    FieldSpec("record_id", "id"),
    FieldSpec("report_date", "date"),
    FieldSpec("location_type", "code", LOCATION_TYPE, token="Location_Type"),
    FieldSpec("weather", "code", WEATHER),
    FieldSpec("crash_type", "code", CRASH_TYPE, token="Type.of.crash"),
    FieldSpec("roadway_surface", "code", ROADWAY_SURFACE),
    FieldSpec("roadway_conditions", "code", ROADWAY_CONDITIONS),
    FieldSpec("traffic_control_type", "code", TRAFFIC_CONTROL_TYPE, optional=True,
              token="Traffic.Control.Type"),
    FieldSpec("lighting", "code", LIGHTING),
    FieldSpec("type_of_intersection", "code", TYPE_OF_INTERSECTION, optional=True),
    FieldSpec("if_peak_time", "code", IF_PEAK_TIME, token="If_peak_time"),
    FieldSpec("movement_preceding_v1", "code", MOVEMENT_PRECEDING),
    FieldSpec("movement_preceding_v2", "code", MOVEMENT_PRECEDING),
    FieldSpec("v1_intention", "code", V1_INTENTION, token="V1.intention"),
    FieldSpec("v1_yield_for", "code", V1_YIELD_FOR, optional=True, token="V1.yield.for"),
    FieldSpec("cycle_lane", "code", CYCLE_LANE),
    FieldSpec("lane_markings", "code", LANE_MARKINGS),
    FieldSpec("road_types", "code", ROAD_TYPES),
    FieldSpec("roadside_parking", "bool", BOOLEAN),
    FieldSpec("number_of_lanes_one_direction", "count"),
    FieldSpec("v1_mode", "code", V1_MODE, token="V1.mode"),
    FieldSpec("v1_state", "code", V1_STATE, token="V1.state"),
    FieldSpec("involved_vehicles", "count"),
    FieldSpec("type_of_object_collided", "code", TYPE_OF_OBJECT_COLLIDED),
    FieldSpec("direction_v1", "code", DIRECTION, token="Direction.V1"),
    FieldSpec("direction_v2", "code", DIRECTION, token="Direction.V2"),
    FieldSpec("speed_change_v1", "code", SPEED_CHANGE, token="Speed.change.V1"),
    FieldSpec("speed_change_v2", "code", SPEED_CHANGE, token="Speed.change.V2"),
    FieldSpec("if_vehicle_failure", "bool", BOOLEAN, token="If_vehicle_failure"),
    FieldSpec("movement_turn_v1", "code", MOVEMENT_TURN, token="Movement.turn.V1"),
    FieldSpec("movement_turn_v2", "code", MOVEMENT_TURN, token="Movement.turn.V2"),
    FieldSpec("movement_other_v1", "code", MOVEMENT_OTHER, token="Movement.other.V1"),
    FieldSpec("movement_other_v2", "code", MOVEMENT_OTHER, token="Movement.other.V2"),
    FieldSpec("relative_position", "code", RELATIVE_POSITION),
    FieldSpec("front_vehicle", "code", FRONT_VEHICLE),
    FieldSpec("damage_severity", "code", DAMAGE_SEVERITY),
    FieldSpec("damage_locations", "zones"),
)
SPECS_BY_NAME: dict[str, FieldSpec] = {spec.name: spec for spec in FIELD_SPECS}
FIELD_NAMES: tuple[str, ...] = tuple(spec.name for spec in FIELD_SPECS)


@dataclass(frozen=True)
class CrashRecord:
    """One coded two-party AV crash.  V1 is always the AV."""

    record_id: str
    report_date: _dt.date
    location_type: int
    weather: int
    crash_type: int
    roadway_surface: int
    roadway_conditions: int
    traffic_control_type: int | None
    lighting: int
    type_of_intersection: int | None
    if_peak_time: int
    movement_preceding_v1: int
    movement_preceding_v2: int
    v1_intention: int
    v1_yield_for: int | None
    cycle_lane: int
    lane_markings: int
    road_types: int
    roadside_parking: bool
    number_of_lanes_one_direction: int
    v1_mode: int
    v1_state: int
    involved_vehicles: int
    type_of_object_collided: int
    direction_v1: int
    direction_v2: int
    speed_change_v1: int
    speed_change_v2: int
    if_vehicle_failure: bool
    movement_turn_v1: int
    movement_turn_v2: int
    movement_other_v1: int
    movement_other_v2: int
    relative_position: int
    front_vehicle: int
    damage_severity: int
    damage_locations: frozenset[str] = field(default_factory=frozenset)

    def get(self, name: str) -> Any:
        return getattr(self, name)

    def replace(self, **changes: Any) -> "CrashRecord":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return CrashRecord(**values)

    @property
    def at_intersection(self) -> bool:
        return self.location_type in INTERSECTION_LOCATIONS

    @property
    def is_dark(self) -> bool:
        return self.lighting in DARK_LIGHTING


@dataclass(frozen=True)
class Violation:
    field: str
    value: Any
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_field(spec: FieldSpec, value: Any) -> str | None:
    if value is None:
        return None if spec.optional else "missing value"
    if spec.kind == "code":
        if not _is_int(value):
            return f"not a code: {value!r}"
        if value not in spec.codes:
            return f"{spec.name} code out of range {spec.codes.describe_range()}"
    elif spec.kind == "bool":
        if not isinstance(value, bool):
            return f"not a boolean: {value!r}"
    elif spec.kind == "count":
        if not _is_int(value) or value < 1:
            return f"not a positive count: {value!r}"
    elif spec.kind == "date":
        if not isinstance(value, _dt.date):
            return f"not a date: {value!r}"
    elif spec.kind == "id":
        if not isinstance(value, str) or not value:
            return "empty record id"
    elif spec.kind == "zones":
        if not isinstance(value, (frozenset, set)):
            return f"not a zone set: {value!r}"
        unknown = sorted(str(z) for z in value if z not in DAMAGE_ZONES)
        if unknown:
            return f"unknown damage zone(s): {', '.join(unknown)}"
    return None


def validate(record: CrashRecord) -> ValidationResult:
    """Check every field against its code set plus the cross-field invariants.

    Never raises: malformed values are reported as violations.
    """
    found: list[Violation] = []
    for spec in FIELD_SPECS:
        value = getattr(record, spec.name, None)
        problem = _check_field(spec, value)
        if problem:
            found.append(Violation(spec.name, value, problem))

    bad = {v.field for v in found}
    location = getattr(record, "location_type", None)
    if "location_type" not in bad and location is not None:
        at_intersection = location in INTERSECTION_LOCATIONS
        for name, what in (("traffic_control_type", "control type"),
                           ("type_of_intersection", "intersection type")):
            value = getattr(record, name, None)
            if name in bad:
                continue
            if value is not None and not at_intersection:
                found.append(Violation(name, value, f"{what} present outside intersection"))
            elif value is None and at_intersection:
                found.append(Violation(name, value, f"{what} absent at intersection"))

    yield_for = getattr(record, "v1_yield_for", None)
    intention = getattr(record, "v1_intention", None)
    if (yield_for is not None and "v1_yield_for" not in bad and "v1_intention" not in bad
            and intention not in YIELDING_INTENTIONS):
        found.append(Violation("v1_yield_for", yield_for,
                               "yield target given for a non-yielding intention"))
    return ValidationResult(tuple(found))


def register_intention(code: int, label: str, yielding: bool = False) -> None:
    """Add a V1 intention code beyond the bundled set."""
    V1_INTENTION.register(code, label)
    if yielding:
        YIELDING_INTENTIONS.add(code)


def register_yield_target(code: int, label: str) -> None:
    V1_YIELD_FOR.register(code, label)


# --- pre-crash scenarios -----------------------------------------------------

# Names of the 24 scenarios observed in the source study are kept verbatim.
# The study prints id 12 twice; the maneuver variant lives at 11, its NHTSA slot.
SCENARIO_NAMES: dict[int, str] = {
    1: "Vehicle Failure",
    2: "Control Loss/With Prior Vehicle Action",
    3: "Control Loss/No Prior Vehicle Action",
    4: "Road Edge Departure/With Prior Vehicle Maneuver",
    5: "Road Edge Departure/No Prior Vehicle Maneuver",
    6: "Road Edge Departure/While Backing Up",
    7: "Animal/Maneuver",
    8: "Animal/No Maneuver",
    9: "Pedestrian/Maneuver",
    10: "Pedestrian/No Maneuver",
    11: "Pedalcyclist/Maneuver",
    12: "Pedalcyclist/No Maneuver",
    13: "Backing into Vehicle",
    14: "Turning/Same Direction",
    15: "Parking/Same Direction",
    16: "Changing Lanes/Same Direction",
    17: "Drifting/Same Direction",
    18: "Opposite Direction/Maneuver",
    19: "Opposite Direction/No Maneuver",
    20: "Rear-end/Following Vehicle Making a Maneuver and Approaching Lead Vehicle (FVM)",
    21: "Rear-end/Lead Vehicle Accelerating (LVA)",
    22: "Rear-end/Lead Vehicle Moving at Lower Constant Speed (LVM)",
    23: "Rear-end/Lead Vehicle Decelerating (LVD)",
    24: "Rear-end/Lead Vehicle Stopped (LVS)",
    25: "Right Turn Into Path (RTIP)",
    26: "Right Turn Across Path/Opposite Direction (RTAP/OD)",
    27: "Straight Crossing Paths (SCP)",
    28: "Left Turn Across Path, Lateral Direction (LTAP/LD)",
    29: "Left Turn Into Path (LTIP)",
    30: "Left Turn Across Path/Opposite Direction (LTAP/OD)",
    31: "Turning at Non-Signalized Junction",
    32: "Evasive Action",
    33: "Non-collision/No Impact",
    34: "Object/Maneuver",
    35: "Object/No Maneuver",
    36: "Other",
}
OTHER_SCENARIO = 36
REAR_END_SCENARIOS = frozenset({20, 21, 22, 23, 24})
INTERSECTION_SCENARIOS = frozenset({27, 28, 29, 30})
# scenarios whose classification needs manual review
LOW_CONFIDENCE_SCENARIOS = frozenset({8, 10, 11, 12})

_ABBREVIATIONS = {
    20: "FVM", 21: "LVA", 22: "LVM", 23: "LVD", 24: "LVS",
    25: "RTIP", 26: "RTAP/OD", 27: "SCP", 28: "LTAP/LD", 29: "LTIP", 30: "LTAP/OD",
}


@dataclass(frozen=True, order=True)
class ScenarioId:
    id: int

    def __post_init__(self):
        if not _is_int(self.id) or not 1 <= self.id <= 36:
            raise ValueError(f"scenario id must be in 1–36, got {self.id!r}")

    @property
    def name(self) -> str:
        return SCENARIO_NAMES[self.id]

    @property
    def short(self) -> str:
        return _ABBREVIATIONS.get(self.id, self.name)

    def __int__(self) -> int:
        return self.id

    def __str__(self) -> str:
        return f"{self.id} {self.name}"


def scenario_name(scenario: int) -> str:
    return SCENARIO_NAMES[scenario]


def parse_scenario_set(text: str) -> frozenset[int]:
    """Parse ``"20-24"``, ``"27,28,30"`` or ``"all"`` into scenario ids."""
    text = text.strip()
    if text.lower() == "all":
        return frozenset(SCENARIO_NAMES)
    if text.lower() in ("rear-end", "rear_end"):
        return REAR_END_SCENARIOS
    ids: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            ids.update(range(lo, hi + 1))
        else:
            ids.add(int(part))
    for sid in ids:
        ScenarioId(sid)
    if not ids:
        raise ValueError(f"empty scenario set: {text!r}")
    return frozenset(ids)


def dark_share(records: Iterable[CrashRecord]) -> tuple[int, int]:
    records = list(records)
    return sum(r.is_dark for r in records), len(records)
