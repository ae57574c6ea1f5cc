"""Schema-typed CSV manifest readers and distribution validation.

Each supported dataset has a fixed column schema and per-attribute value
vocabulary. Parsing is strict: UTF-8 only, RFC-4180 quoting, unknown or
out-of-vocabulary values are rejected with their row number. Absent
optional values (empty cells) become None, which is distinct from the
literal "unknown" category some datasets carry.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .model import (
    REGIONS,
    FITZPATRICK_SCALE,
    BoundingBox,
    GroupKey,
    HouseholdManifest,
    HouseholdRow,
    SubjectManifest,
    SubjectRow,
    ValidationError,
    derive_age_group,
)

CC_GENDERS = ("female", "male", "other", "n/a")
UTK_GENDERS = ("female", "male")
MIAP_GENDERS = ("predominantly feminine", "predominantly masculine", "unknown")
MIAP_AGES = ("young", "middle", "older", "unknown")
AGE_BANDS = ("18-30", "30-45", "45-70", "70+")


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple
    kind: str  # "subject" or "household"


SCHEMAS = {
    "CC": DatasetSchema("CC", ("id", "gender", "age", "skin_tone"), "subject"),
    "UTK": DatasetSchema("UTK", ("id", "gender", "age"), "subject"),
    "MIAP": DatasetSchema(
        "MIAP", ("id", "image_id", "x0", "y0", "x1", "y1", "gender", "age"), "subject"
    ),
    "DollarStreet": DatasetSchema(
        "DollarStreet",
        ("id", "household_id", "country", "region", "income_usd", "labels"),
        "household",
    ),
}

_CANONICAL_NAMES = {k.lower(): k for k in SCHEMAS}


def resolve_dataset_name(name: str) -> str:
    try:
        return _CANONICAL_NAMES[name.strip().lower()]
    except KeyError:
        raise ValidationError(f"unknown dataset schema {name!r}; known: {sorted(SCHEMAS)}") from None


def read_manifest(path, schema: str):
    """Parse a manifest CSV into a typed, validated manifest.

    ``schema`` names the dataset (CC, UTK, MIAP or DollarStreet) and
    selects columns and vocabularies. Returns SubjectManifest or
    HouseholdManifest accordingly.
    """
    name = resolve_dataset_name(schema)
    spec = SCHEMAS[name]
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in spec.columns if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing} for schema {name}")
        rows = list(reader)

    if spec.kind == "household":
        manifest = _parse_household(path, name, rows)
    else:
        manifest = _parse_subject(path, name, rows)
    errs = manifest.validate()
    if errs:
        raise ValidationError([f"{path}: {e}" for e in errs])
    return manifest


def _cell(row, column):
    value = row.get(column)
    return value.strip() if value is not None else ""


def _parse_age_band(raw, path, lineno):
    """Years -> band; under-18 ages exist in some datasets and band to absence."""
    try:
        age = int(raw)
    except ValueError:
        raise ValidationError(f"{path}: row {lineno}: age {raw!r} is not an integer") from None
    if age < 0:
        raise ValidationError(f"{path}: row {lineno}: negative age {age}")
    return derive_age_group(age) if age >= 18 else None


def _parse_subject(path, name, rows) -> SubjectManifest:
    out = []
    for lineno, row in enumerate(rows, start=2):  # 1 is the header
        gender = _cell(row, "gender") or None
        if name == "CC":
            if gender is not None and gender not in CC_GENDERS:
                raise ValidationError(f"{path}: row {lineno}: gender {gender!r} not in {CC_GENDERS}")
            skin = _cell(row, "skin_tone") or None
            if skin is not None and skin not in FITZPATRICK_SCALE:
                raise ValidationError(
                    f"{path}: row {lineno}: skin_tone {skin!r} not in {FITZPATRICK_SCALE}"
                )
            age_raw = _cell(row, "age")
            band = _parse_age_band(age_raw, path, lineno) if age_raw else None
            out.append(SubjectRow(_cell(row, "id"), gender=gender, age_group=band, skin_tone=skin))
        elif name == "UTK":
            if gender is not None and gender not in UTK_GENDERS:
                raise ValidationError(f"{path}: row {lineno}: gender {gender!r} not in {UTK_GENDERS}")
            age_raw = _cell(row, "age")
            band = _parse_age_band(age_raw, path, lineno) if age_raw else None
            out.append(SubjectRow(_cell(row, "id"), gender=gender, age_group=band))
        elif name == "MIAP":
            if gender is not None and gender not in MIAP_GENDERS:
                raise ValidationError(f"{path}: row {lineno}: gender {gender!r} not in {MIAP_GENDERS}")
            age = _cell(row, "age") or None
            if age is not None and age not in MIAP_AGES:
                raise ValidationError(f"{path}: row {lineno}: age {age!r} not in {MIAP_AGES}")
            try:
                box = BoundingBox(*(float(_cell(row, c)) for c in ("x0", "y0", "x1", "y1")))
            except ValueError:
                raise ValidationError(f"{path}: row {lineno}: non-numeric box coordinate") from None
            out.append(
                SubjectRow(
                    _cell(row, "id"),
                    gender=gender,
                    age_group=age,
                    box=box,
                    source_image=_cell(row, "image_id"),
                )
            )
    vocab = {
        "CC": {"gender": set(CC_GENDERS), "age_group": set(AGE_BANDS), "skin_tone": set(FITZPATRICK_SCALE)},
        "UTK": {"gender": set(UTK_GENDERS), "age_group": set(AGE_BANDS)},
        "MIAP": {"gender": set(MIAP_GENDERS), "age_group": set(MIAP_AGES)},
    }[name]
    return SubjectManifest(dataset_name=name, rows=out, vocabularies=vocab)


def _parse_household(path, name, rows) -> HouseholdManifest:
    out = []
    for lineno, row in enumerate(rows, start=2):
        region = _cell(row, "region")
        if region not in REGIONS:
            raise ValidationError(f"{path}: row {lineno}: region {region!r} not in {REGIONS}")
        try:
            income = float(_cell(row, "income_usd"))
        except ValueError:
            raise ValidationError(f"{path}: row {lineno}: non-numeric income_usd") from None
        labels = frozenset(l.strip() for l in _cell(row, "labels").split("|") if l.strip())
        if not labels:
            raise ValidationError(f"{path}: row {lineno}: labels empty")
        out.append(
            HouseholdRow(
                image_id=_cell(row, "id"),
                household_id=_cell(row, "household_id"),
                country=_cell(row, "country"),
                region=region,
                income_usd=income,
                labels=labels,
            )
        )
    return HouseholdManifest(dataset_name=name, rows=out)


def validate_distribution(manifest, expected: dict) -> list:
    """Compare group counts in a manifest against expected counts.

    ``expected`` maps GroupKey -> count. For subject manifests the counted
    unit is rows (images); for household manifests it is distinct
    households. The empty GroupKey counts the whole manifest. Returns a
    list of (GroupKey, expected, actual) mismatches; empty means all match.
    """
    mismatches = []
    for key in sorted(expected, key=str):
        want = expected[key]
        got = _count_group(manifest, key)
        if got != want:
            mismatches.append((key, want, got))
    return mismatches


def _count_group(manifest, key: GroupKey) -> int:
    if isinstance(manifest, HouseholdManifest):
        from .geodiversity import household_table  # lazy: avoids import cycle

        households = household_table(manifest)
        if not key.components:
            return len(households)
        count = 0
        for info in households.values():
            if all(_household_attr(info, a) == v for a, v in key.components):
                count += 1
        return count
    if not key.components:
        return len(manifest.rows)
    count = 0
    for row in manifest.rows:
        if all(manifest.attribute_value(row, a) == v for a, v in key.components):
            count += 1
    return count


def _household_attr(info, name):
    if name == "region":
        return info.region
    if name in ("income_bucket", "income"):
        return info.bucket.name
    raise KeyError(f"unknown household attribute {name!r}")
