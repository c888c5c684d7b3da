"""Seeded generator for the bundled fixtures under ``precrash/data``.

The real crash reports cannot be redistributed, so the bundled files are
synthetic records built to published marginal counts.  Everything here is
deterministic: ``write_all`` reproduces the bundled files byte for byte.

Files produced:

* ``raw_corpus.csv``      615 coded reports before filtering
* ``corpus.csv``          the 322 AV-engaged two-party crashes kept by the filter
* ``ground_truth.csv``    manual scenario labels for ``corpus.csv``
* ``rear_end_mining.csv`` 184 rear-end crashes for rule mining
* ``intersection_chains.jsonl`` causal chains of the 15 intersection crashes
"""

from __future__ import annotations

import datetime as dt
import random
from collections import Counter
from pathlib import Path
from typing import Any, Iterator

from .data_model import YIELDING_INTENTIONS, CrashRecord, validate
from .dream import dumps_chains
from .ingestion import dumps_records, filter_for_analysis

SEED = 20230401
DATA_DIR = Path(__file__).with_name("data")

# Scenario counts assigned by the reference rules (sum 322).
SCENARIO_COUNTS: dict[int, int] = {
    24: 105, 20: 38, 23: 35, 13: 19, 12: 17, 17: 13, 19: 13, 15: 11,
    22: 7, 28: 7, 35: 7, 36: 7, 27: 7, 16: 7, 14: 7, 21: 6, 34: 5,
    11: 3, 30: 2, 1: 2, 8: 1, 29: 1, 33: 1, 10: 1,
}
# (assigned, true) pairs for the records the reference rules get wrong
MISCLASSIFIED: tuple[tuple[int, int], ...] = (
    (16, 17), (16, 17), (17, 16), (17, 16), (16, 36), (17, 36),
)
RAW_TOTAL = 615
REMOVED_MODE = 190
REMOVED_VEHICLES = 103

_BASE_KINEMATICS: dict[str, Any] = dict(
    crash_type=3, type_of_object_collided=2, if_vehicle_failure=False,
    relative_position=1, front_vehicle=1, direction_v1=1, direction_v2=1,
    speed_change_v1=0, speed_change_v2=0, movement_turn_v1=0, movement_turn_v2=0,
    movement_other_v1=1, movement_other_v2=1, movement_preceding_v1=2,
    movement_preceding_v2=2, v1_state=1,
)
_AV_STOPPED = dict(direction_v1=0, v1_state=2, movement_preceding_v1=1, movement_other_v1=13)

K = dict
KINEMATICS: dict[int, list[dict[str, Any]]] = {
    1: [K(if_vehicle_failure=True, crash_type=2, relative_position=3, front_vehicle=2)],
    7: [K(type_of_object_collided=1, crash_type=8, movement_turn_v1=1, movement_preceding_v1=4)],
    8: [K(type_of_object_collided=1, crash_type=8)],
    9: [K(type_of_object_collided=4, crash_type=7, movement_turn_v1=2, movement_preceding_v1=5)],
    10: [K(type_of_object_collided=4, crash_type=7)],
    11: [K(type_of_object_collided=3, crash_type=2, relative_position=3, movement_turn_v1=1,
           movement_preceding_v1=4)],
    12: [K(type_of_object_collided=3, crash_type=2, relative_position=3),
         K(type_of_object_collided=3, crash_type=3, **_AV_STOPPED),
         K(type_of_object_collided=3, crash_type=4, relative_position=4)],
    13: [K(direction_v2=2, front_vehicle=2, movement_preceding_v2=7, movement_other_v2=12),
         K(crash_type=2, direction_v2=2, movement_preceding_v2=7, movement_other_v2=12,
           **_AV_STOPPED)],
    14: [K(crash_type=2, relative_position=3, movement_turn_v2=1, movement_preceding_v2=4),
         K(crash_type=2, relative_position=4, movement_turn_v2=2, movement_preceding_v2=5)],
    15: [K(crash_type=2, relative_position=3, movement_other_v2=8, movement_preceding_v2=11,
           **_AV_STOPPED)],
    16: [K(crash_type=2, relative_position=4, movement_other_v2=3, movement_preceding_v2=10),
         K(crash_type=2, relative_position=3, movement_other_v2=3, movement_preceding_v2=10)],
    17: [K(crash_type=2, relative_position=3), K(crash_type=2, relative_position=4)],
    19: [K(crash_type=1, relative_position=2, front_vehicle=2, movement_other_v2=10,
           movement_preceding_v2=17),
         K(crash_type=2, relative_position=2, front_vehicle=2, movement_preceding_v2=14)],
    20: [K(movement_other_v2=3, movement_preceding_v2=10, **_AV_STOPPED),
         K(movement_other_v2=6, movement_preceding_v2=16)],
    21: [K(speed_change_v1=1)],
    22: [K()],
    23: [K(speed_change_v1=2, movement_preceding_v1=8)],
    24: [K(**_AV_STOPPED)],
    27: [K(crash_type=4, relative_position=3), K(crash_type=4, relative_position=4)],
    28: [K(crash_type=4, relative_position=4, movement_turn_v2=2, movement_preceding_v2=5),
         K(crash_type=4, relative_position=3, movement_turn_v1=2, movement_preceding_v1=5)],
    29: [K(crash_type=4, relative_position=3, movement_turn_v2=2, movement_other_v2=5,
           movement_preceding_v2=5)],
    30: [K(crash_type=4, relative_position=2, front_vehicle=2, movement_turn_v2=2,
           movement_preceding_v2=5)],
    33: [K(type_of_object_collided=6, crash_type=8)],
    34: [K(type_of_object_collided=5, crash_type=5, movement_other_v1=8,
           movement_preceding_v1=11)],
    35: [K(type_of_object_collided=5, crash_type=5),
         K(type_of_object_collided=5, crash_type=5, **_AV_STOPPED)],
    36: [K(crash_type=8, front_vehicle=2, movement_other_v1=12, movement_other_v2=12,
           movement_preceding_v1=18, movement_preceding_v2=18)],
}
KINEMATICS = {s: [{**_BASE_KINEMATICS, **v} for v in vs] for s, vs in KINEMATICS.items()}

# Locations of the 322 crashes: impact area 164, center 35, segment 95,
# parking lot 15, ramp 13.  Key scenarios are placed explicitly, the rest
# draw from what is left.
_LOCATION_TOTALS = {1: 164, 2: 35, 3: 15, 4: 13, 5: 95}
_LOCATION_PLAN = {
    24: {1: 62, 2: 8, 3: 3, 4: 7, 5: 25},
    20: {1: 18, 2: 4, 4: 4, 5: 12},
    23: {1: 18, 2: 4, 4: 2, 5: 11},
    33: {5: 1},
}

# Rear-end (LVS+FVM+LVD) crashes in the dark: 47 of 178; overall 104 of 322.
_DARK_REAR_END = 47
_DARK_TOTAL = 104

_SEVERITY_TOTALS = {0: 25, 1: 243, 2: 45, 3: 9}
_YEAR_TOTALS = {2018: 28, 2019: 44, 2020: 33, 2021: 50, 2022: 72, 2023: 85, 2024: 10}
# crashes with a non-motorized party or an object placed in 2023
_NONMOTOR_OBJECT_2023 = 19

# Control types at the 199 intersection crashes, outside the 15 chain crashes.
_CONTROL_POOL = {3: 97, 4: 32, 2: 44, 5: 11}
_INTERSECTION_TYPES = ((1, 60), (2, 25), (3, 5), (4, 3), (5, 5), (6, 2))

# The 15 intersection crashes with causal chains:
# (scenario, location, control, night, severity, intersection type, chain)
HSR, MS, MTG = ("habitually-stretching-rules", "misjudgement-of-situation",
                "misjudgement-of-time-gaps")
ECB, ISK = "expectancy-of-certain-behaviours", "insufficient-skills-knowledge"
MO, LO = "missed-observation", "late-observation"
POV, TOV = "permanent-obstruction-of-view", "temporary-obstruction-of-view"
IG, IRG = "insufficient-guidance", "inadequate-road-geometry"
TEA, TNA = "timing/too-early-action", "timing/no-action"

CHAIN_PLAN: tuple[tuple[int, int, int, bool, int, int, tuple[tuple[str, str], ...]], ...] = (
    (27, 1, 4, True, 2, 1, ((HSR, MS), (ECB, MS), (MS, TNA))),
    (27, 1, 4, True, 1, 1, ((HSR, MS), (ECB, MS), (MS, TNA))),
    (27, 2, 4, True, 1, 2, ((HSR, MS), (TOV, LO), (LO, MS), (MS, TNA))),
    (28, 1, 4, True, 1, 1, ((HSR, MS), (TOV, LO), (LO, MS), (MS, TNA))),
    (27, 1, 4, False, 1, 1, ((HSR, MS), (MS, TNA))),
    (27, 2, 3, True, 3, 1, ((HSR, MS), (ECB, MS), (MS, "speed"))),
    (27, 1, 3, True, 3, 1, ((HSR, MS), (TOV, MO), (MO, MS), (MS, "speed"))),
    (28, 1, 3, True, 1, 1, ((HSR, MS), (MS, TNA))),
    (28, 2, 3, False, 2, 2, ((HSR, MTG), (MTG, TEA))),
    (28, 1, 3, True, 1, 1, ((ECB, MTG), (TOV, MO), (MO, MTG), (MTG, TEA))),
    (28, 1, 4, True, 1, 2, ((ECB, MS), (TOV, LO), (LO, MS), (MS, TEA))),
    (29, 1, 2, False, 2, 1, ((ISK, MO), (MO, MS), (MS, "direction"))),
    (30, 2, 2, False, 3, 3, ((IG, MS), (MS, "distance"))),
    (30, 1, 3, True, 1, 3, ((IRG, MO), (TOV, MO), (MO, MS), (MS, "distance"))),
    (28, 1, 3, False, 1, 1, ((POV, LO), (TOV, LO), (LO, MTG), (MTG, TEA))),
)

_ZONES_BY_SCENARIO = {
    "lead": ("rear_bumper", ("rear_left", "rear_right", "rear_center")),
    "follow": ("front_bumper", ("front_left", "front_right", "front_center")),
    3: ("right_side", ("front_right", "rear_right")),
    4: ("left_side", ("front_left", "rear_left")),
    2: ("front_left", ("front_bumper", "left_side")),
}


def _weighted(rng: random.Random, pairs) -> int:
    codes, weights = zip(*pairs)
    return rng.choices(codes, weights)[0]


def _shuffled(rng: random.Random, counts: dict[int, int]) -> list[int]:
    pool = [code for code, n in sorted(counts.items()) for _ in range(n)]
    rng.shuffle(pool)
    return pool


def _intention(rng: random.Random, kin: dict, location: int, control: int | None,
               scenario: int) -> tuple[int, int | None]:
    """V1 intention and yield target consistent with kinematics and setting."""
    if kin["movement_turn_v1"] == 1:
        return 3, 2
    if kin["movement_turn_v1"] == 2:
        return 4, 1
    if kin["direction_v1"] == 0:
        if location == 4:
            return 7, 2
        if control == 3:
            return (1, None) if rng.random() < 0.8 else (3, 2)
        if control == 4:
            return 6, None
        if control in (2, 5):
            return _weighted(rng, ((3, 2), (4, 1), (5, 1))), None
        return 5, None
    if scenario == 23 or kin["speed_change_v1"] == 2:
        if rng.random() < 0.6:
            return 2, 3
        return 8, None
    if location == 4 and rng.random() < 0.5:
        return 7, 2
    return 8, None


def _fix_yield(intention: int, target: int | None) -> int | None:
    return target if intention in YIELDING_INTENTIONS else None


def _zones(rng: random.Random, kin: dict, severity: int) -> frozenset[str]:
    if severity == 0:
        return frozenset()
    if kin["crash_type"] == 3 and kin["type_of_object_collided"] == 2:
        key = "lead" if kin["front_vehicle"] == 1 else "follow"
    elif kin["relative_position"] in (2, 3, 4):
        key = kin["relative_position"]
    else:
        key = "follow"
    main, extras = _ZONES_BY_SCENARIO[key]
    zones = {main}
    for _ in range(severity - 1 + (rng.random() < 0.3)):
        zones.add(rng.choice(extras))
    return frozenset(zones)


def _date(rng: random.Random, year: int) -> dt.date:
    start = dt.date(year, 4, 1) if year == 2018 else dt.date(year, 1, 1)
    end = dt.date(2024, 1, 31) if year == 2024 else dt.date(year, 12, 31)
    return start + dt.timedelta(days=rng.randrange((end - start).days + 1))


def _environment(rng: random.Random, location: int, control: int | None,
                 itype: int | None) -> dict[str, Any]:
    wet = rng.random() < 0.12
    return dict(
        location_type=location,
        weather=3 if wet else _weighted(rng, ((1, 80), (2, 14), (5, 3), (6, 2), (7, 1))),
        roadway_surface=2 if wet else 1,
        roadway_conditions=_weighted(rng, ((8, 90), (4, 4), (1, 2), (5, 2), (3, 2))),
        traffic_control_type=control,
        type_of_intersection=itype,
        if_peak_time=_weighted(rng, ((1, 60), (2, 18), (3, 22))),
        cycle_lane=_weighted(rng, ((1, 62), (2, 14), (3, 16), (4, 5), (5, 3))),
        lane_markings=1 if rng.random() < 0.93 else 2,
        road_types=_weighted(rng, ((1, 40), (2, 15), (3, 20), (4, 25))),
        roadside_parking=rng.random() < 0.4,
        number_of_lanes_one_direction=_weighted(rng, ((1, 30), (2, 40), (3, 22), (4, 8))),
    )


def _lighting(rng: random.Random, dark: bool) -> int:
    if dark:
        return _weighted(rng, ((3, 85), (4, 15)))
    return _weighted(rng, ((1, 88), (2, 12)))


def _record(record_id: str, date: dt.date, kin: dict, env: dict, intention: int,
            yield_for: int | None, lighting: int, severity: int, zones: frozenset[str],
            mode: int = 1, vehicles: int = 2) -> CrashRecord:
    values = dict(_BASE_KINEMATICS)
    values.update(kin)
    values.update(env)
    return CrashRecord(
        record_id=record_id, report_date=date, lighting=lighting,
        v1_intention=intention, v1_yield_for=_fix_yield(intention, yield_for),
        v1_mode=mode, involved_vehicles=vehicles, damage_severity=severity,
        damage_locations=zones, **values)


# --- the 615-report corpus ---------------------------------------------------

def _analysis_slots(rng: random.Random) -> list[dict[str, Any]]:
    """One dict per retained crash: assigned and true scenario, kinematics."""
    slots = []
    wrong = Counter(MISCLASSIFIED)
    for scenario, count in SCENARIO_COUNTS.items():
        variants = KINEMATICS[scenario]
        truths = [truth for (pred, truth), n in wrong.items() if pred == scenario
                  for _ in range(n)]
        truths += [scenario] * (count - len(truths))
        for i, truth in enumerate(truths):
            slots.append({"scenario": scenario, "truth": truth,
                          "kin": variants[i % len(variants)]})
    rng.shuffle(slots)
    return slots


def _place(rng: random.Random, slots: list[dict]) -> None:
    """Location, control, intersection type, lighting and severity per slot."""
    left = Counter(_LOCATION_TOTALS)
    by_scn: dict[int, list[dict]] = {}
    for slot in slots:
        by_scn.setdefault(slot["scenario"], []).append(slot)

    for scenario in (27, 28, 29, 30):
        group = by_scn[scenario]
        n_chain = sum(1 for plan in CHAIN_PLAN if plan[0] == scenario)
        for slot in group[:n_chain]:
            slot["chain"] = True
        for slot in group[n_chain:]:
            slot["location"] = 3  # ambiguous: recorded in a parking lot
            left[3] -= 1
    # hand the chain plan entries to the chained slots in plan order
    chained = [s for s in slots if s.get("chain")]
    remaining = list(CHAIN_PLAN)
    for slot in chained:
        idx = next(i for i, p in enumerate(remaining) if p[0] == slot["scenario"])
        plan = remaining.pop(idx)
        slot["plan"] = plan
        slot["location"], slot["control"], slot["dark"] = plan[1], plan[2], plan[3]
        slot["severity"], slot["itype"] = plan[4], plan[5]
        left[plan[1]] -= 1

    for scenario, plan in _LOCATION_PLAN.items():
        locs = _shuffled(rng, plan)
        for slot, loc in zip(by_scn[scenario], locs):
            slot["location"] = loc
            left[loc] -= 1
    rest = [s for s in slots if "location" not in s]
    pool = _shuffled(rng, dict(left))
    assert len(pool) == len(rest)
    for slot, loc in zip(rest, pool):
        slot["location"] = loc

    controls = iter(_shuffled(rng, _CONTROL_POOL))
    for slot in slots:
        if slot["location"] in (1, 2) and "control" not in slot:
            slot["control"] = next(controls)
            slot["itype"] = _weighted(rng, _INTERSECTION_TYPES)
        slot.setdefault("control", None)
        slot.setdefault("itype", None)

    rear = [s for s in slots if s["scenario"] in (20, 23, 24)]
    other = [s for s in slots if s["scenario"] not in (20, 23, 24) and "plan" not in s]
    dark_chain = sum(1 for s in slots if s.get("dark"))
    for group, n_dark in ((rear, _DARK_REAR_END),
                          (other, _DARK_TOTAL - _DARK_REAR_END - dark_chain)):
        flags = [True] * n_dark + [False] * (len(group) - n_dark)
        rng.shuffle(flags)
        for slot, flag in zip(group, flags):
            slot["dark"] = flag

    sev_left = Counter(_SEVERITY_TOTALS)
    for slot in slots:
        if "severity" in slot:
            sev_left[slot["severity"]] -= 1
    unplaced = [s for s in slots if "severity" not in s]
    for slot, sev in zip(unplaced, _shuffled(rng, dict(sev_left))):
        slot["severity"] = sev


def _years(rng: random.Random, slots: list[dict]) -> None:
    left = Counter(_YEAR_TOTALS)
    special = [s for s in slots if s["kin"].get("type_of_object_collided") in (3, 5)]
    for slot in special[:_NONMOTOR_OBJECT_2023]:
        slot["year"] = 2023
    left[2023] -= _NONMOTOR_OBJECT_2023
    others = {y: n for y, n in left.items() if y != 2023}
    spread = _shuffled(rng, others)
    for slot in special[_NONMOTOR_OBJECT_2023:]:
        slot["year"] = spread.pop()
        left[slot["year"]] -= 1
    pool = _shuffled(rng, dict(left))
    for slot in (s for s in slots if "year" not in s):
        slot["year"] = pool.pop()


def _removed_reports(rng: random.Random) -> list[dict[str, Any]]:
    reports = []
    kinds = [k for k in KINEMATICS if k not in (1, 33)]
    for i in range(REMOVED_MODE + REMOVED_VEHICLES):
        if i < REMOVED_MODE:
            mode, vehicles = rng.choice((2, 2, 3)), rng.choice((1, 2, 2, 2, 3))
        else:
            mode, vehicles = 1, rng.choice((1, 1, 3, 4))
        scenario = rng.choice(kinds)
        reports.append({"kin": rng.choice(KINEMATICS[scenario]), "scenario": scenario,
                        "mode": mode, "vehicles": vehicles,
                        "year": _weighted(rng, tuple(_YEAR_TOTALS.items()))})
    return reports


def build_corpus(seed: int = SEED) -> tuple[list[CrashRecord], dict[str, int], list[dict]]:
    """(all 615 reports, true scenario of each retained crash, chain entries)."""
    rng = random.Random(seed)
    slots = _analysis_slots(rng)
    _place(rng, slots)
    _years(rng, slots)

    drafts = []
    for slot in slots:
        env = _environment(rng, slot["location"], slot["control"], slot["itype"])
        intention, target = _intention(rng, slot["kin"], slot["location"], slot["control"],
                                       slot["scenario"])
        if "plan" in slot:
            intention, target = 8, None
        drafts.append((slot, env, intention, target, slot["severity"],
                       _lighting(rng, slot["dark"]), 1, 2))
    for rep in _removed_reports(rng):
        location = _weighted(rng, tuple(_LOCATION_TOTALS.items()))
        control = itype = None
        if location in (1, 2):
            control = _weighted(rng, ((3, 50), (4, 20), (2, 25), (5, 5)))
            itype = _weighted(rng, _INTERSECTION_TYPES)
        env = _environment(rng, location, control, itype)
        intention, target = _intention(rng, rep["kin"], location, control, rep["scenario"])
        severity = _weighted(rng, ((0, 8), (1, 75), (2, 14), (3, 3)))
        drafts.append((rep, env, intention, target, severity,
                       _lighting(rng, rng.random() < 0.3), rep["mode"], rep["vehicles"]))

    dated = [(_date(rng, d[0]["year"]), i, d) for i, d in enumerate(drafts)]
    dated.sort(key=lambda t: (t[0], t[1]))
    records, truth, chains = [], {}, []
    dark_alias_left = 2
    for n, (date, _, (slot, env, intention, target, severity, lighting, mode, vehicles)) \
            in enumerate(dated, start=1):
        rid = f"AV{n:04d}"
        if lighting == 3 and mode == 1 and vehicles == 2 and dark_alias_left:
            lighting, dark_alias_left = 5, dark_alias_left - 1  # duplicated code on the sheet
        zones = _zones(rng, slot["kin"], severity)
        records.append(_record(rid, date, slot["kin"], env, intention, target, lighting,
                               severity, zones, mode, vehicles))
        if mode == 1 and vehicles == 2:
            truth[rid] = slot["truth"]
            if "plan" in slot:
                chains.append((CHAIN_PLAN.index(slot["plan"]), rid, slot))
    for record in records:
        problems = validate(record)
        assert problems.ok, (record.record_id, problems.violations)

    entries = []
    for _, rid, slot in sorted(chains):
        rec = next(r for r in records if r.record_id == rid)
        plan = slot["plan"]
        entries.append({
            "crash_id": rid,
            "metadata": {"scenario": plan[0], "night": rec.is_dark,
                         "control": plan[2], "severity": plan[4]},
            "links": [list(link) for link in plan[6]],
        })
    return records, truth, entries


# --- rear-end mining fixture -------------------------------------------------

_LVS, _FVM, _LVD, _LVA = 24, 20, 23, 21
_MINING_KIN = {
    _LVS: KINEMATICS[24][0],
    _FVM: KINEMATICS[20][0],
    _LVD: KINEMATICS[23][0],
    _LVA: KINEMATICS[21][0],
}


def _mining_groups() -> Iterator[tuple[int, int, dict[str, Any]]]:
    """(scenario, count, fixed fields) blocks of the mining fixture.

    Fixed fields override the random background; the blocks are sized so
    that {impact area, signal, signal stopped} -> LVS holds with 31 of 32
    crashes and every competing antecedent stays below that confidence.
    """
    iia_signal = dict(location_type=1, traffic_control_type=3)
    yield (_LVS, 31, dict(iia_signal, v1_intention=1, _signal_lvs=True))
    yield (_FVM, 1, dict(iia_signal, v1_intention=1, _copy_signal_lvs=True))
    # signal-stopped outside the pattern
    yield (_FVM, 5, dict(location_type=2, traffic_control_type=3, v1_intention=1))
    yield (_LVD, 3, dict(location_type=2, traffic_control_type=3, v1_intention=1))
    yield (_FVM, 2, dict(location_type=1, traffic_control_type=1, v1_intention=1))
    # impact area + signal, other intentions
    yield (_LVD, 14, dict(iia_signal, v1_intention=2, v1_yield_for=3))
    yield (_FVM, 8, dict(iia_signal, v1_intention=8))
    yield (_LVS, 3, dict(iia_signal, v1_intention=4, v1_yield_for=1))
    # other LVS patterns
    yield (_LVS, 12, dict(location_type=1, traffic_control_type=2, type_of_intersection=1,
                          v1_intention=3, v1_yield_for=2, cycle_lane=1))
    yield (_LVS, 1, dict(location_type=5, v1_intention=3, v1_yield_for=2, cycle_lane=1))
    yield (_LVD, 1, dict(location_type=5, v1_intention=3, v1_yield_for=2, cycle_lane=2))
    yield (_LVS, 8, dict(location_type=1, traffic_control_type=4, type_of_intersection=1,
                         v1_intention=6))
    yield (_LVS, 7, dict(location_type=4, v1_intention=7, if_peak_time=1,
                         roadside_parking=False))
    yield (_LVS, 4, dict(location_type=1, traffic_control_type=5, v1_intention=4,
                         v1_yield_for=1, cycle_lane=1))
    yield (_LVS, 36, dict(location_type=5, v1_intention=5))
    # FVM on segments with roadside parking
    yield (_FVM, 8, dict(location_type=5, v1_intention=8, roadside_parking=True,
                         lane_markings=1))
    yield (_FVM, 17, dict(location_type=5, v1_intention=5, roadside_parking=False))
    # LVD in the dark yielding to the car in front
    yield (_LVD, 5, dict(location_type=5, lighting=3, v1_intention=2, v1_yield_for=3,
                         roadside_parking=True, lane_markings=1))
    yield (_LVS, 1, dict(location_type=5, lighting=3, v1_intention=2, v1_yield_for=3,
                         roadside_parking=False, lane_markings=1))
    yield (_LVD, 12, dict(location_type=5, v1_intention=8))
    yield (_LVA, 5, dict(location_type=5, v1_intention=8))


def build_mining_fixture(seed: int = SEED) -> list[CrashRecord]:
    rng = random.Random(seed + 1)
    records: list[CrashRecord] = []
    signal_lvs_env: dict[str, Any] | None = None
    n = 0
    for scenario, count, fixed in _mining_groups():
        for _ in range(count):
            n += 1
            fixed = dict(fixed)
            copy = fixed.pop("_copy_signal_lvs", False)
            keep = fixed.pop("_signal_lvs", False)
            location = fixed.get("location_type", 5)
            control = fixed.get("traffic_control_type")
            itype = fixed.get("type_of_intersection")
            if location in (1, 2):
                itype = itype or _weighted(rng, _INTERSECTION_TYPES)
            env = _environment(rng, location, control, itype)
            env["lighting"] = _lighting(rng, rng.random() < 0.25)
            env["v1_yield_for"] = None
            env.update({k: v for k, v in fixed.items()})
            if copy:
                env = dict(signal_lvs_env)
            elif keep and signal_lvs_env is None:
                signal_lvs_env = dict(env)
            lighting = env.pop("lighting")
            intention = env.pop("v1_intention")
            target = env.pop("v1_yield_for")
            severity = _weighted(rng, ((0, 6), (1, 80), (2, 12), (3, 2)))
            kin = _MINING_KIN[scenario]
            year = _weighted(rng, tuple(_YEAR_TOTALS.items()))
            records.append(_record(f"RE{n:04d}", _date(rng, year), kin, env, intention,
                                   target, lighting, severity, _zones(rng, kin, severity)))
    order = list(range(len(records)))
    rng.shuffle(order)
    out = []
    for new_id, i in enumerate(order, start=1):
        out.append(records[i].replace(record_id=f"RE{new_id:04d}"))
    out.sort(key=lambda r: r.record_id)
    for record in out:
        assert validate(record).ok, (record.record_id, validate(record).violations)
    return out


# --- files -------------------------------------------------------------------

def render_all(seed: int = SEED) -> dict[str, str]:
    records, truth, chains = build_corpus(seed)
    kept = filter_for_analysis(records).retained
    truth_lines = ["record_id,scenario"] + [f"{rid},{truth[rid]}" for rid in sorted(truth)]
    return {
        "raw_corpus.csv": dumps_records(records),
        "corpus.csv": dumps_records(kept),
        "ground_truth.csv": "\n".join(truth_lines) + "\n",
        "rear_end_mining.csv": dumps_records(build_mining_fixture(seed)),
        "intersection_chains.jsonl": dumps_chains(chains),
    }


def write_all(directory: str | Path = DATA_DIR, seed: int = SEED) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in render_all(seed).items():
        path = directory / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


if __name__ == "__main__":
    for path in write_all():
        print(path)
