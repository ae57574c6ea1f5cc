"""Domain types shared by the audit engines.

Everything here is an in-memory value object: no I/O, no metric math.
``validate`` checks the construction invariants of any domain value and
returns human-readable violations instead of raising, so callers can
collect problems across a whole file before deciding to abort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

FITZPATRICK_SCALE = ("I", "II", "III", "IV", "V", "VI")
REGIONS = ("Africa", "Asia", "Europe", "Americas")
AGE_BANDS = ("18-30", "30-45", "45-70", "70+")
SKIN_GROUPS = ("lighter", "darker")
INCOME_BUCKET_NAMES = {1: "low", 2: "medium", 3: "high"}


class AuditError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(AuditError):
    """Raised when input data violates its declared invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class AssociationType(Enum):
    """Category a predicted label maps to for harm analysis."""

    HUMAN = "Human"
    POSSIBLY_HUMAN = "PossiblyHuman"
    NON_HUMAN = "NonHuman"
    POSSIBLY_NON_HUMAN = "PossiblyNonHuman"
    CRIME = "Crime"
    UNMAPPED = "Unmapped"


# Fixed derived sets: these never vary per dataset or configuration.
HARMFUL_TYPES = frozenset({AssociationType.NON_HUMAN, AssociationType.CRIME})
NON_HARMFUL_TYPES = frozenset({AssociationType.HUMAN})


@dataclass(frozen=True)
class GroupKey:
    """A subgroup identifier: one or more (attribute, value) pairs.

    Components are canonically sorted by attribute name, so keys built
    from the same pairs in any order compare and hash equal. The empty
    key denotes the whole population.
    """

    components: tuple = ()

    def __init__(self, components: Iterable[tuple] = ()):
        comps = tuple(sorted((str(a), str(v)) for a, v in components))
        names = [a for a, _ in comps]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute in group key: {names}")
        object.__setattr__(self, "components", comps)

    @property
    def attributes(self) -> tuple:
        return tuple(a for a, _ in self.components)

    def __str__(self) -> str:
        if not self.components:
            return "all"
        return ",".join(f"{a}={v}" for a, v in self.components)

    @classmethod
    def parse(cls, text: str) -> "GroupKey":
        text = text.strip()
        if text in ("", "all", "*"):
            return cls()
        pairs = []
        for part in text.split(","):
            if "=" not in part:
                raise ValueError(f"bad group key component {part!r}")
            a, v = part.split("=", 1)
            pairs.append((a.strip(), v.strip()))
        return cls(pairs)


@dataclass(frozen=True)
class IncomeBucket:
    """Coarse household-income class derived from income in USD."""

    index: int

    def __post_init__(self):
        if self.index not in INCOME_BUCKET_NAMES:
            raise ValueError(f"income bucket index must be 1..3, got {self.index}")

    @property
    def name(self) -> str:
        return INCOME_BUCKET_NAMES[self.index]

    def __str__(self) -> str:
        return self.name


class EmbeddingMatrix:
    """Ids plus dense row-major float32 feature vectors for one dataset split."""

    def __init__(self, ids, values):
        self.ids = list(ids)
        values = np.asarray(values, dtype=np.float32)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        self.values = values

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingMatrix)
            and self.ids == other.ids
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def validate(self):
        errs = []
        if len(self.ids) != self.n:
            errs.append(f"ids count {len(self.ids)} != n {self.n}")
        if len(set(self.ids)) != len(self.ids):
            errs.append("ids not unique")
        if self.d <= 0:
            errs.append(f"d must be > 0, got {self.d}")
        if self.values.size and not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))
            r, c = bad[0]
            errs.append(f"values[{r}][{c}] not finite")
        return errs


@dataclass
class PredictionRecord:
    """Ranked (label, confidence) predictions for one image."""

    image_id: str
    preds: list  # of (label, score), scores non-increasing

    def validate(self):
        errs = []
        if not self.preds:
            errs.append("preds empty")
            return errs
        scores = [s for _, s in self.preds]
        labels = [l for l, _ in self.preds]
        if any(not (0.0 <= s <= 1.0) for s in scores):
            errs.append("score outside [0,1]")
        if any(b > a for a, b in zip(scores, scores[1:])):
            errs.append("scores not non-increasing")
        if len(set(labels)) != len(labels):
            errs.append("duplicate label within record")
        return errs


@dataclass
class BoundingBox:
    """Axis-aligned pixel rectangle, corners (x0, y0) and (x1, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def validate(self, frame_w=None, frame_h=None):
        errs = []
        if not (self.x1 > self.x0):
            errs.append(f"x1 {self.x1} not > x0 {self.x0}")
        if not (self.y1 > self.y0):
            errs.append(f"y1 {self.y1} not > y0 {self.y0}")
        if frame_w is not None and (self.x0 < 0 or self.x1 > frame_w):
            errs.append("box outside frame width")
        if frame_h is not None and (self.y0 < 0 or self.y1 > frame_h):
            errs.append("box outside frame height")
        return errs


@dataclass
class SubjectRow:
    """One row of a people-image manifest. Absent attributes stay None;
    the literal string "unknown" is a real attribute value, not absence."""

    image_id: str
    gender: Optional[str] = None
    age_group: Optional[str] = None
    skin_tone: Optional[str] = None  # Fitzpatrick I..VI where the dataset has it
    box: Optional[BoundingBox] = None
    source_image: Optional[str] = None


@dataclass
class SubjectManifest:
    """Sensitive-attribute table for a people-image dataset (CC/UTK/MIAP)."""

    dataset_name: str
    rows: list = field(default_factory=list)
    vocabularies: dict = field(default_factory=dict)  # attribute -> allowed values

    def validate(self):
        errs = []
        seen = set()
        for i, row in enumerate(self.rows):
            if row.image_id in seen:
                errs.append(f"row {i}: duplicate image_id {row.image_id!r}")
            seen.add(row.image_id)
            for attr in ("gender", "age_group", "skin_tone"):
                value = getattr(row, attr)
                vocab = self.vocabularies.get(attr)
                if value is not None and vocab is not None and value not in vocab:
                    errs.append(f"row {i}: {attr} {value!r} not in vocabulary")
            if row.box is not None:
                errs.extend(f"row {i}: {e}" for e in row.box.validate())
        return errs

    def attribute_value(self, row: SubjectRow, name: str):
        """Resolve a grouping attribute for a row, including derived ones.

        "skin_tone" resolves to the two-way lighter/darker grouping when the
        stored value is a Fitzpatrick grade; "fitzpatrick" gives the raw grade.
        """
        if name == "gender":
            return row.gender
        if name in ("age_group", "age"):
            return row.age_group
        if name == "fitzpatrick":
            return row.skin_tone
        if name == "skin_tone":
            if row.skin_tone in FITZPATRICK_SCALE:
                return derive_skin_group(row.skin_tone)
            return row.skin_tone
        raise ValidationError(f"unknown attribute {name!r} for dataset {self.dataset_name}")

    def row_by_id(self):
        return {row.image_id: row for row in self.rows}


@dataclass
class HouseholdRow:
    """One image annotation row of the household dataset. The same image_id
    may appear on several rows (one per ground-truth label)."""

    image_id: str
    household_id: str
    country: str
    region: str
    income_usd: float
    labels: frozenset


@dataclass
class HouseholdManifest:
    """Annotation table for the geographically diverse household dataset."""

    dataset_name: str
    rows: list = field(default_factory=list)

    def validate(self):
        errs = []
        for i, row in enumerate(self.rows):
            if row.income_usd <= 0 or not math.isfinite(row.income_usd):
                errs.append(f"row {i}: income_usd must be positive, got {row.income_usd}")
            if row.region not in REGIONS:
                errs.append(f"row {i}: region {row.region!r} not in {REGIONS}")
            if not row.labels:
                errs.append(f"row {i}: labels empty")
        return errs


def derive_age_group(age: int) -> str:
    """Band an adult age in years into 18-30 / 30-45 / 45-70 / 70+.

    Bands are half-open with the boundary going up: 30 falls in 30-45.
    """
    if age < 18:
        raise ValueError(f"age {age} below the adult bands")
    if age < 30:
        return "18-30"
    if age < 45:
        return "30-45"
    if age < 70:
        return "45-70"
    return "70+"


def derive_skin_group(fitzpatrick: str) -> str:
    """Two-way grouping of the six-point Fitzpatrick scale: I-III lighter, IV-VI darker."""
    if fitzpatrick not in FITZPATRICK_SCALE:
        raise ValueError(f"not a Fitzpatrick grade: {fitzpatrick!r}")
    return "lighter" if FITZPATRICK_SCALE.index(fitzpatrick) < 3 else "darker"


def validate(entity) -> list:
    """Return the invariant violations of any domain value (empty list when valid)."""
    if hasattr(entity, "validate"):
        return entity.validate()
    raise TypeError(f"not a validatable domain value: {type(entity).__name__}")
