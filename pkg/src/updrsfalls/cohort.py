"""Participant data model: schema, validation, CSV ingestion, aggregates, views.

The reference schema follows the standard 42-item UPDRS layout: Part I is
items 1-4, Part II items 5-17, Part III items 18-31, Part IV items 32-42.
Most items are scored 0-4; the Part IV yes/no items (35-38, 40-42) are 0-1.
Published versions of the instrument vary slightly in the id-to-part table,
so this layout is an informed default and everything accepts a custom schema.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateParticipant,
    EmptyFile,
    InvalidFieldValue,
    MissingColumn,
    OutOfRangeScore,
    UnknownItem,
)

GENDERS = ("male", "female")
LIVING = ("alone", "with_family")
SCHEMES = ("updrs1", "updrs2", "updrs3", "updrs4", "all_items", "subtotal", "composite")
HORIZONS = ("m6", "m12")

_PART_RANGES = {"I": (1, 4), "II": (5, 17), "III": (18, 31), "IV": (32, 42)}
_BINARY_ITEMS = frozenset({35, 36, 37, 38, 40, 41, 42})

_ITEM_NAMES = {
    1: "intellectual_impairment", 2: "thought_disorder", 3: "depression",
    4: "motivation_initiative",
    5: "speech_adl", 6: "salivation", 7: "swallowing", 8: "handwriting",
    9: "cutting_food", 10: "dressing", 11: "hygiene", 12: "turning_in_bed",
    13: "falling", 14: "freezing_when_walking", 15: "walking",
    16: "tremor_adl", 17: "sensory_complaints",
    18: "speech_motor", 19: "facial_expression", 20: "tremor_at_rest",
    21: "action_tremor", 22: "rigidity_item", 23: "finger_taps",
    24: "hand_movements", 25: "hand_pronate_supinate", 26: "leg_agility",
    27: "arising_from_chair", 28: "posture", 29: "gait",
    30: "postural_stability", 31: "body_bradykinesia",
    32: "dyskinesia_duration", 33: "dyskinesia_disability",
    34: "dyskinesia_pain", 35: "early_morning_dystonia",
    36: "offs_predictable", 37: "offs_unpredictable", 38: "offs_sudden",
    39: "off_duration", 40: "anorexia_nausea", 41: "sleep_disturbance",
    42: "symptomatic_orthostasis",
}

COMPOSITES = {
    "tremor": (20, 21),
    "rigidity": (22,),
    "bradykinesia": (23, 25, 26, 31),
    "pigd": (13, 14, 15, 27, 28, 29, 30),
}

DEMOGRAPHIC_COLUMNS = (
    "participant_id", "gender", "age", "living", "duration", "previous_falls", "hy",
)
LABEL_COLUMNS = ("fell_6m", "fell_12m")


@dataclass(frozen=True)
class ItemSchema:
    item_id: int
    part: str
    name: str
    min_score: int
    max_score: int

    def __post_init__(self):
        if not (0 <= self.min_score < self.max_score <= 4):
            raise ValueError(
                f"item {self.item_id}: scores must satisfy 0 <= min < max <= 4")


def reference_schema() -> list[ItemSchema]:
    """The standard 42-item layout described in the module docstring."""
    items = []
    for part, (lo, hi) in _PART_RANGES.items():
        for i in range(lo, hi + 1):
            top = 1 if i in _BINARY_ITEMS else 4
            items.append(ItemSchema(i, part, _ITEM_NAMES[i], 0, top))
    return items


@dataclass
class ParticipantRecord:
    participant_id: str
    gender: str
    age_years: float
    living: str
    duration_years: float
    previous_falls: int
    hy_score: float
    item_scores: dict[int, int]
    fell_6m: int
    fell_12m: int


@dataclass
class CohortDataset:
    schema: list[ItemSchema]
    records: list[ParticipantRecord]

    def __post_init__(self):
        if not self.records:
            raise EmptyFile("<in-memory>")
        seen = set()
        by_id = {s.item_id: s for s in self.schema}
        for row, rec in enumerate(self.records, start=1):
            if rec.participant_id in seen:
                raise DuplicateParticipant(rec.participant_id)
            seen.add(rec.participant_id)
            validate_record(rec, by_id, row)

    def __len__(self):
        return len(self.records)


def validate_record(rec: ParticipantRecord, schema_by_id: dict, row: int = 0):
    if rec.gender not in GENDERS:
        raise InvalidFieldValue("gender", row, rec.gender)
    if rec.living not in LIVING:
        raise InvalidFieldValue("living", row, rec.living)
    if rec.previous_falls < 0:
        raise InvalidFieldValue("previous_falls", row, rec.previous_falls)
    if not (0.0 <= rec.hy_score <= 3.0):
        raise InvalidFieldValue("hy", row, rec.hy_score)
    if rec.fell_6m not in (0, 1):
        raise InvalidFieldValue("fell_6m", row, rec.fell_6m)
    if rec.fell_12m not in (0, 1):
        raise InvalidFieldValue("fell_12m", row, rec.fell_12m)
    for item_id, spec in schema_by_id.items():
        if item_id not in rec.item_scores:
            raise MissingColumn(f"item_{item_id}")
        score = rec.item_scores[item_id]
        if not (spec.min_score <= score <= spec.max_score):
            raise OutOfRangeScore(item_id, row)


# ---- CSV ingestion and writing -------------------------------------------

def _columns(schema):
    return (list(DEMOGRAPHIC_COLUMNS)
            + [f"item_{s.item_id}" for s in schema]
            + list(LABEL_COLUMNS))


def load_cohort(path, schema: list[ItemSchema] | None = None) -> CohortDataset:
    """Read a cohort CSV. Leading ``#`` comment lines are skipped, so files
    produced by the CLI (which carry a config header) round-trip.

    Row numbers in errors are 1-based over data rows.
    """
    if schema is None:
        schema = reference_schema()
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise EmptyFile(path)
    have = set(reader.fieldnames)
    for col in _columns(schema):
        if col not in have:
            raise MissingColumn(col)

    records = []
    for row_num, raw in enumerate(reader, start=1):
        records.append(_parse_row(raw, schema, row_num))
    if not records:
        raise EmptyFile(path)
    return CohortDataset(schema=schema, records=records)


def _parse_row(raw, schema, row_num) -> ParticipantRecord:
    def intfield(col):
        try:
            return int(raw[col])
        except (TypeError, ValueError):
            raise InvalidFieldValue(col, row_num, raw[col]) from None

    def floatfield(col):
        try:
            return float(raw[col])
        except (TypeError, ValueError):
            raise InvalidFieldValue(col, row_num, raw[col]) from None

    scores = {}
    for spec in schema:
        col = f"item_{spec.item_id}"
        val = intfield(col)
        if not (spec.min_score <= val <= spec.max_score):
            raise OutOfRangeScore(spec.item_id, row_num)
        scores[spec.item_id] = val

    rec = ParticipantRecord(
        participant_id=raw["participant_id"],
        gender=raw["gender"],
        age_years=floatfield("age"),
        living=raw["living"],
        duration_years=floatfield("duration"),
        previous_falls=intfield("previous_falls"),
        hy_score=floatfield("hy"),
        item_scores=scores,
        fell_6m=intfield("fell_6m"),
        fell_12m=intfield("fell_12m"),
    )
    validate_record(rec, {s.item_id: s for s in schema}, row_num)
    return rec


def write_cohort(dataset: CohortDataset, path, header_comment: str | None = None):
    """Write the cohort as CSV (atomically: temp file + rename).

    Floats are serialized with ``repr`` so a write/load round-trip reproduces
    every value exactly.
    """
    cols = _columns(dataset.schema)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            if header_comment is not None:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(cols)
            for rec in dataset.records:
                row = [rec.participant_id, rec.gender, repr(rec.age_years),
                       rec.living, repr(rec.duration_years),
                       rec.previous_falls, repr(rec.hy_score)]
                row += [rec.item_scores[s.item_id] for s in dataset.schema]
                row += [rec.fell_6m, rec.fell_12m]
                writer.writerow(row)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- aggregates ------------------------------------------------------------

@dataclass(frozen=True)
class AggregateSpec:
    name: str
    item_ids: tuple[int, ...]


def aggregate_specs(schema: list[ItemSchema]) -> list[AggregateSpec]:
    """Subtotals 1-4, total, and the four symptom composites."""
    parts = {"I": [], "II": [], "III": [], "IV": []}
    for s in schema:
        parts[s.part].append(s.item_id)
    specs = [AggregateSpec(f"subtotal{k}", tuple(parts[p]))
             for k, p in enumerate(("I", "II", "III", "IV"), start=1)]
    specs.append(AggregateSpec("total", tuple(s.item_id for s in schema)))
    specs += [AggregateSpec(name, ids) for name, ids in COMPOSITES.items()]
    return specs


def derive_aggregates(record: ParticipantRecord,
                      specs: list[AggregateSpec]) -> dict[str, float]:
    out = {}
    for spec in specs:
        total = 0.0
        for item_id in spec.item_ids:
            if item_id not in record.item_scores:
                raise UnknownItem(item_id)
            total += record.item_scores[item_id]
        out[spec.name] = total
    return out


# ---- feature views ---------------------------------------------------------

@dataclass
class FeatureView:
    scheme: str
    feature_names: list[str]
    matrix: np.ndarray
    labels: np.ndarray
    horizon: str
    participant_ids: list[str] = field(default_factory=list)

    @property
    def n(self):
        return self.matrix.shape[0]


def build_view(dataset: CohortDataset, scheme: str, horizon: str) -> FeatureView:
    """Project the cohort onto one predictor scheme.

    ``updrs1``-``updrs4`` use the raw item columns of that part, ``all_items``
    every item, ``subtotal`` the four part subtotals, and ``composite`` the
    tremor/rigidity/bradykinesia/pigd sums.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if horizon not in HORIZONS:
        raise ValueError(f"unknown horizon {horizon!r}; expected one of {HORIZONS}")

    specs = aggregate_specs(dataset.schema)
    part_of = {"updrs1": "I", "updrs2": "II", "updrs3": "III", "updrs4": "IV"}

    if scheme in part_of:
        ids = [s.item_id for s in dataset.schema if s.part == part_of[scheme]]
        names = [f"item_{i}" for i in ids]
        rows = [[rec.item_scores[i] for i in ids] for rec in dataset.records]
    elif scheme == "all_items":
        ids = [s.item_id for s in dataset.schema]
        names = [f"item_{i}" for i in ids]
        rows = [[rec.item_scores[i] for i in ids] for rec in dataset.records]
    elif scheme == "subtotal":
        names = ["subtotal1", "subtotal2", "subtotal3", "subtotal4"]
        rows = [[derive_aggregates(rec, specs)[n] for n in names]
                for rec in dataset.records]
    else:  # composite
        names = list(COMPOSITES)
        rows = [[derive_aggregates(rec, specs)[n] for n in names]
                for rec in dataset.records]

    labels = np.array(
        [rec.fell_6m if horizon == "m6" else rec.fell_12m for rec in dataset.records],
        dtype=np.int64)
    return FeatureView(
        scheme=scheme,
        feature_names=names,
        matrix=np.array(rows, dtype=np.float64),
        labels=labels,
        horizon=horizon,
        participant_ids=[rec.participant_id for rec in dataset.records],
    )
