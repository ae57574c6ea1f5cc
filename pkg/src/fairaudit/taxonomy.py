"""Label-to-association-type mapping with dataset-scoped overrides.

A taxonomy is a list of (label, type, scope) entries; scope is "*" for
all datasets or a dataset name. A scoped entry shadows the global one
for its dataset. Labels compare after canonicalization (casefold +
trim), so "Gorilla" and "gorilla" are the same label. The bundled
default file covers the commonly audited slice of the ImageNet
taxonomy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

from .model import AssociationType, ValidationError

GLOBAL_SCOPE = "*"
DEFAULT_TAXONOMY_RESOURCE = "imagenet_association_taxonomy.csv"

_TYPE_BY_NAME = {t.value: t for t in AssociationType}


def canonical_label(label: str) -> str:
    return label.strip().casefold()


@dataclass
class AssociationTaxonomy:
    """Immutable-after-load map from (label, scope) to association type."""

    entries: dict = field(default_factory=dict)  # (canonical label, scope) -> AssociationType

    def add(self, label: str, assoc_type: AssociationType, scope: str = GLOBAL_SCOPE) -> None:
        key = (canonical_label(label), scope)
        if key in self.entries:
            raise ValidationError(f"duplicate taxonomy entry for label {label!r} scope {scope!r}")
        self.entries[key] = assoc_type

    def labels(self):
        return sorted({label for label, _ in self.entries})


def classify_label(tax: AssociationTaxonomy, label: str, dataset: str) -> AssociationType:
    """Scoped entry if present, else global entry, else Unmapped."""
    canon = canonical_label(label)
    scoped = tax.entries.get((canon, dataset))
    if scoped is not None:
        return scoped
    return tax.entries.get((canon, GLOBAL_SCOPE), AssociationType.UNMAPPED)


def load_taxonomy(path) -> AssociationTaxonomy:
    """Load a taxonomy from a CSV with columns label,type,scope."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return _parse_taxonomy(f, str(path))


def load_default_taxonomy() -> AssociationTaxonomy:
    """Load the taxonomy asset bundled with the toolkit."""
    ref = resources.files("fairaudit.data") / DEFAULT_TAXONOMY_RESOURCE
    with ref.open("r", encoding="utf-8") as f:
        return _parse_taxonomy(f, DEFAULT_TAXONOMY_RESOURCE)


def _parse_taxonomy(f, source) -> AssociationTaxonomy:
    reader = csv.DictReader(f)
    header = reader.fieldnames or []
    for col in ("label", "type", "scope"):
        if col not in header:
            # a completely empty file is a legal taxonomy where everything is Unmapped
            if not header:
                return AssociationTaxonomy()
            raise ValidationError(f"{source}: missing column {col!r}")
    tax = AssociationTaxonomy()
    for lineno, row in enumerate(reader, start=2):
        type_name = (row.get("type") or "").strip()
        if type_name not in _TYPE_BY_NAME:
            raise ValidationError(
                f"{source}: row {lineno}: unknown type {type_name!r}; known: {sorted(_TYPE_BY_NAME)}"
            )
        scope = (row.get("scope") or "").strip() or GLOBAL_SCOPE
        try:
            tax.add((row.get("label") or ""), _TYPE_BY_NAME[type_name], scope)
        except ValidationError as e:
            raise ValidationError(f"{source}: row {lineno}: {e.violations[0]}") from None
    return tax
