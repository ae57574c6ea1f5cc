"""Same-attribute retrieval precision, stratified by query subgroups.

Each query image retrieves its K most similar database images; its
precision is the fraction of those neighbors sharing the query's match
attribute (gender by default). Strata average per-query precisions, so
database composition influences results only through retrieval, never
through weighting. Queries whose match-attribute value does not occur
in the database at all (e.g. non-binary genders against a binary-labeled
database) are excluded from precision and tallied separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .association import parse_group_spec
from .knn import NeighborList, top_k
from .model import EmbeddingMatrix, GroupKey, SubjectManifest, ValidationError


@dataclass
class RetrievalCell:
    mean_precision: float
    query_count: int


@dataclass
class RetrievalReport:
    match_attribute: str
    ks: tuple
    stratify_specs: tuple
    cells: dict = field(default_factory=dict)  # (GroupKey, k) -> RetrievalCell
    excluded: dict = field(default_factory=dict)  # GroupKey -> unscored query count
    warnings: list = field(default_factory=list)


def _db_attr_by_index(database_ids, db_manifest, match_attribute):
    """Attribute value per database matrix index (None where the row or value is absent)."""
    rows = db_manifest.row_by_id()
    out = []
    for image_id in database_ids:
        row = rows.get(image_id)
        out.append(None if row is None else db_manifest.attribute_value(row, match_attribute))
    return out


def _precision(neighbors: NeighborList, query_attr_value, attr_by_index, k: int) -> float:
    if k > len(neighbors.neighbors):
        raise ValidationError(f"K={k} exceeds neighbor list length {len(neighbors.neighbors)}")
    same = 0
    for idx, _ in neighbors.neighbors[:k]:
        value = attr_by_index[idx]
        if value is None:
            raise ValidationError(f"retrieved db row {idx} has no match attribute")
        if value == query_attr_value:
            same += 1
    return same / k


def precision_at_k(
    neighbors: NeighborList,
    query_attr_value,
    db_manifest: SubjectManifest,
    match_attribute: str,
    k: int,
    db_ids: Optional[list] = None,
) -> float:
    """Fraction of the first K neighbors sharing the query's attribute value.

    ``db_ids`` maps database matrix indices to manifest image ids; when
    omitted, manifest row order is assumed to match index order. A
    retrieved row without the match attribute is an error.
    """
    if db_ids is None:
        db_ids = [row.image_id for row in db_manifest.rows]
    return _precision(neighbors, query_attr_value, _db_attr_by_index(db_ids, db_manifest, match_attribute), k)


def retrieval_report(
    queries: EmbeddingMatrix,
    query_manifest: SubjectManifest,
    database: EmbeddingMatrix,
    db_manifest: SubjectManifest,
    match_attribute: str = "gender",
    stratify_by: Iterable[str] = ("gender",),
    ks: Iterable[int] = (10, 50),
    threads: int = 1,
) -> "tuple[RetrievalReport, list]":
    """Mean precision@K per stratum of the query set.

    Query and database manifests must not share image ids. Embeddings are
    expected row-normalized. Returns the report plus the per-query
    neighbor lists (at max K) for optional dumping.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks:
        raise ValidationError("at least one K required")
    overlap = {r.image_id for r in query_manifest.rows} & {r.image_id for r in db_manifest.rows}
    if overlap:
        raise ValidationError(f"query and database manifests share ids: {sorted(overlap)[:5]}")

    query_rows = query_manifest.row_by_id()
    missing = [i for i in queries.ids if i not in query_rows]
    if missing:
        raise ValidationError([f"query id {i!r} not in query manifest" for i in missing[:10]])

    db_match_values = {
        v
        for row in db_manifest.rows
        if (v := db_manifest.attribute_value(row, match_attribute)) is not None
    }
    if not db_match_values:
        raise ValidationError(f"match attribute {match_attribute!r} absent from db manifest")

    neighbor_lists = top_k(queries, database, max(ks), threads=threads)
    attr_by_index = _db_attr_by_index(database.ids, db_manifest, match_attribute)

    # per-query precision for scored queries; None marks excluded ones
    precisions = {}
    for nl in neighbor_lists:
        row = query_rows[nl.query_id]
        value = query_manifest.attribute_value(row, match_attribute)
        if value is None or value not in db_match_values:
            precisions[nl.query_id] = None
            continue
        precisions[nl.query_id] = {k: _precision(nl, value, attr_by_index, k) for k in ks}

    stratify_specs = tuple(stratify_by)
    report = RetrievalReport(match_attribute, ks, stratify_specs)
    queried_rows = [query_rows[i] for i in queries.ids]
    for spec in stratify_specs:
        attrs = parse_group_spec(spec)
        values = {}
        for attr in attrs:
            observed = {
                v
                for row in queried_rows
                if (v := query_manifest.attribute_value(row, attr)) is not None
            }
            if not observed:
                raise ValidationError(f"stratify attribute {attr!r} absent from query manifest")
            values[attr] = sorted(observed)
        combos = [[]]
        for attr in attrs:
            combos = [c + [(attr, v)] for c in combos for v in values[attr]]
        for combo in combos:
            key = GroupKey(combo)
            members = [
                row.image_id
                for row in queried_rows
                if all(query_manifest.attribute_value(row, a) == v for a, v in combo)
            ]
            if not members:
                report.warnings.append(f"empty stratum {key} omitted")
                continue
            scored = [i for i in members if precisions[i] is not None]
            unscored = len(members) - len(scored)
            if unscored:
                report.excluded[key] = unscored
            if not scored:
                continue
            for k in ks:
                mean = sum(precisions[i][k] for i in scored) / len(scored)
                report.cells[(key, k)] = RetrievalCell(float(mean), len(scored))
    return report, neighbor_lists
