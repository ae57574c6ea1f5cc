"""Geographical-diversity hit rates over household images.

Duplicate annotation rows for one image are merged first (labels
unioned), an image counts as a hit when any top-5 prediction matches any
of its ground-truth labels, hit rates are averaged per household, and
group statistics average those per-household rates. That keeps one
prolific household from dominating its region or income bucket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .model import (
    GroupKey,
    HouseholdManifest,
    IncomeBucket,
    PredictionRecord,
    ValidationError,
)
from .taxonomy import canonical_label

TOP_K = 5
GEO_ATTRIBUTES = ("region", "income_bucket")


@dataclass
class DedupedImage:
    image_id: str
    household_id: str
    labels: frozenset  # union of ground-truth labels across duplicate rows


@dataclass(frozen=True)
class HouseholdInfo:
    household_id: str
    country: str
    region: str
    income_usd: float
    bucket: IncomeBucket


@dataclass
class BootstrapSpec:
    resamples: int = 1000
    seed: int = 0


@dataclass
class GeoCell:
    mean_hit_rate: float
    household_count: int
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


@dataclass
class GeoReport:
    group_specs: tuple
    cells: dict = field(default_factory=dict)  # GroupKey -> GeoCell
    warnings: list = field(default_factory=list)


def load_concept_map() -> dict:
    """The bundled household-concept to ImageNet-class mapping (concept -> class).

    Shipped so classifiers can be adapted to the household label space; the
    hit-rate engine itself consumes predictions already in that space.
    """
    import csv
    from importlib import resources

    ref = resources.files("fairaudit.data") / "dollarstreet_imagenet_map.csv"
    with ref.open("r", encoding="utf-8") as f:
        return {row["concept"]: row["imagenet_class"] for row in csv.DictReader(f)}


def income_bucket(income_usd: float, log_base: float = math.e) -> IncomeBucket:
    """Bucket a household income: round(log(income)/3), clamped to 1..3.

    Rounding is half-away-from-zero and the logarithm is natural by
    default; with those choices incomes up to ~90 USD are low, ~90-1808
    medium, above high. The log base is configurable for sensitivity
    checks.
    """
    if not (income_usd > 0) or not math.isfinite(income_usd):
        raise ValidationError(f"income must be positive and finite, got {income_usd}")
    v = math.log(income_usd, log_base) / 3.0
    index = math.floor(v + 0.5) if v >= 0 else math.ceil(v - 0.5)
    return IncomeBucket(min(3, max(1, index)))


def dedupe(manifest: HouseholdManifest) -> list:
    """Merge duplicate image rows, unioning their labels.

    Merged rows must agree on household, region and income; a conflict is
    a data error, not something to silently pick a winner for.
    """
    merged = {}
    origin = {}
    for row in manifest.rows:
        if row.image_id not in merged:
            merged[row.image_id] = DedupedImage(row.image_id, row.household_id, row.labels)
            origin[row.image_id] = (row.household_id, row.region, row.income_usd)
        else:
            if origin[row.image_id] != (row.household_id, row.region, row.income_usd):
                raise ValidationError(
                    f"conflicting household/region/income for image {row.image_id!r}"
                )
            img = merged[row.image_id]
            img.labels = img.labels | row.labels
    return [merged[i] for i in sorted(merged)]


def household_table(manifest: HouseholdManifest, log_base: float = math.e) -> dict:
    """household_id -> HouseholdInfo, checking attribute consistency across rows."""
    table = {}
    for row in manifest.rows:
        info = HouseholdInfo(
            household_id=row.household_id,
            country=row.country,
            region=row.region,
            income_usd=row.income_usd,
            bucket=income_bucket(row.income_usd, log_base),
        )
        existing = table.get(row.household_id)
        if existing is None:
            table[row.household_id] = info
        elif existing != info:
            raise ValidationError(
                f"household {row.household_id!r} has inconsistent country/region/income"
            )
    return table


def image_hit(record: PredictionRecord, image: DedupedImage, tau: Optional[float] = None) -> bool:
    """True when any retained top-5 prediction is one of the image's labels."""
    truth = {canonical_label(l) for l in image.labels}
    for label, score in record.preds[:TOP_K]:
        if tau is not None and score < tau:
            continue
        if canonical_label(label) in truth:
            return True
    return False


def household_hit_rates(
    records: Iterable[PredictionRecord],
    images: list,
    manifest: Optional[HouseholdManifest] = None,
    tau: Optional[float] = None,
) -> dict:
    """Mean hit over each household's de-duplicated images."""
    by_id = records if isinstance(records, dict) else {r.image_id: r for r in records}
    hits = {}
    counts = {}
    for image in images:
        record = by_id.get(image.image_id)
        if record is None:
            raise ValidationError(f"image {image.image_id!r} has no prediction")
        counts[image.household_id] = counts.get(image.household_id, 0) + 1
        if image_hit(record, image, tau):
            hits[image.household_id] = hits.get(image.household_id, 0) + 1
    return {h: hits.get(h, 0) / counts[h] for h in sorted(counts)}


def _household_attr(info: HouseholdInfo, name: str) -> str:
    if name == "region":
        return info.region
    if name in ("income_bucket", "income"):
        return info.bucket.name
    raise ValidationError(f"unknown household attribute {name!r}; known: {GEO_ATTRIBUTES}")


def aggregate_geo(
    rates: dict,
    manifest: HouseholdManifest,
    group_by: Iterable[str] = GEO_ATTRIBUTES,
    bootstrap: Optional[BootstrapSpec] = None,
    log_base: float = math.e,
) -> GeoReport:
    """Unweighted group means of per-household hit rates.

    Group specs are region, income_bucket, or region_x_income_bucket.
    With a bootstrap spec, a 95% percentile confidence interval over
    household resamples is attached; results are bit-reproducible for a
    fixed seed.
    """
    households = household_table(manifest, log_base)
    missing = [h for h in households if h not in rates]
    if missing:
        raise ValidationError([f"no hit rate for household {h!r}" for h in missing[:10]])

    group_specs = tuple(group_by)
    report = GeoReport(group_specs)
    rng = np.random.default_rng(bootstrap.seed) if bootstrap else None

    for spec in group_specs:
        attrs = tuple(a.strip() for a in spec.split("_x_") if a.strip())
        values = {
            attr: sorted({_household_attr(info, attr) for info in households.values()})
            for attr in attrs
        }
        combos = [[]]
        for attr in attrs:
            combos = [c + [(attr, v)] for c in combos for v in values[attr]]
        for combo in combos:
            key = GroupKey(combo)
            members = sorted(
                h
                for h, info in households.items()
                if all(_household_attr(info, a) == v for a, v in combo)
            )
            if not members:
                report.warnings.append(f"empty group {key} omitted")
                continue
            member_rates = np.array([rates[h] for h in members], dtype=np.float64)
            cell = GeoCell(float(member_rates.mean()), len(members))
            if bootstrap:
                idx = rng.integers(0, len(members), size=(bootstrap.resamples, len(members)))
                means = member_rates[idx].mean(axis=1)
                cell.ci_low = float(np.percentile(means, 2.5))
                cell.ci_high = float(np.percentile(means, 97.5))
            report.cells[key] = cell
    return report
