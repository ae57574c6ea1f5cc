"""Deterministic synthetic fixtures with closed-form metric values.

A fixture spec plants exact hit rates per subgroup (association), exact
per-household hit fractions (geodiversity) and well-separated
same-gender embedding clusters (retrieval), so every downstream metric
is known before the engines run. The same seed and spec always produce
byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .formats import write_embeddings, write_predictions
from .knn import normalize_rows
from .model import EmbeddingMatrix, PredictionRecord, ValidationError

_TYPE_LABELS = {
    "Human": "face",
    "PossiblyHuman": "beard",
    "NonHuman": "gorilla",
    "PossiblyNonHuman": "cat",
    "Crime": "prison",
}
_AGE_CYCLE = (23, 34, 47, 72, 29, 55, 61, 19)
_SKIN_CYCLE = ("I", "II", "III", "IV", "V", "VI")
FILLER_LABEL = "fixture-filler"
MISS_LABEL = "fixture-miss"


def _planted_count(rate: float, size: int, what: str) -> int:
    count = rate * size
    if abs(count - round(count)) > 1e-9:
        raise ValidationError(f"inconsistent spec: {what} rate {rate} not integral over size {size}")
    return int(round(count))


def make_fixture(seed: int, spec: dict, out_dir) -> dict:
    """Write the fixture files described by ``spec`` into ``out_dir``.

    Recognized sections: "association" (CC-style manifest + predictions
    with planted per-gender type rates), "geo" (household manifest +
    predictions with planted per-household hit fractions) and
    "retrieval" (two gender clusters of embeddings for query and
    database sides). Returns written paths plus the planted truth, which
    is also saved as fixture_truth.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = {}
    truth = {"seed": seed}

    if "association" in spec:
        truth["association"] = _make_association(spec["association"], out_dir, paths)
    if "geo" in spec:
        truth["geo"] = _make_geo(spec["geo"], out_dir, paths)
    if "retrieval" in spec:
        truth["retrieval"] = _make_retrieval(spec["retrieval"], rng, out_dir, paths)
    if not paths:
        raise ValidationError("inconsistent spec: no fixture sections requested")

    truth_path = os.path.join(out_dir, "fixture_truth.json")
    with open(truth_path, "w", encoding="utf-8", newline="") as f:
        f.write(json.dumps(truth, sort_keys=True, indent=2) + "\n")
    paths["truth"] = truth_path
    return {"paths": paths, "truth": truth}


def _make_association(section: dict, out_dir, paths) -> dict:
    dataset = section.get("dataset", "CC")
    if dataset != "CC":
        raise ValidationError("inconsistent spec: association fixtures are CC-style only")
    groups = section["groups"]
    planted = section.get("planted", {})
    confidence = float(section.get("confidence", 0.9))
    if not (0.0 < confidence <= 1.0):
        raise ValidationError(f"inconsistent spec: confidence {confidence} outside (0,1]")

    records = []
    manifest_rows = []
    truth = {}
    for gender in sorted(groups):
        size = int(groups[gender])
        if size < 1:
            raise ValidationError(f"inconsistent spec: group {gender!r} size {size} < 1")
        rates = planted.get(gender, {})
        counts = {}
        for type_name, rate in sorted(rates.items()):
            if type_name not in _TYPE_LABELS:
                raise ValidationError(f"inconsistent spec: unknown type {type_name!r}")
            if type_name == "PossiblyNonHuman":
                raise ValidationError("inconsistent spec: PossiblyNonHuman is not scored on CC")
            counts[type_name] = _planted_count(rate, size, f"{gender}/{type_name}")
        truth[gender] = counts
        for i in range(size):
            image_id = f"{gender}-{i:04d}"
            manifest_rows.append(
                (
                    image_id,
                    gender,
                    _AGE_CYCLE[i % len(_AGE_CYCLE)],
                    _SKIN_CYCLE[i % len(_SKIN_CYCLE)],
                )
            )
            preds = [
                (_TYPE_LABELS[t], confidence)
                for t in sorted(counts)
                if i < counts[t]
            ]
            preds.append((FILLER_LABEL, min(confidence, 0.05)))
            records.append(PredictionRecord(image_id, preds))

    manifest_path = os.path.join(out_dir, "association_manifest.csv")
    with open(manifest_path, "w", encoding="utf-8", newline="") as f:
        f.write("id,gender,age,skin_tone\n")
        for image_id, gender, age, skin in manifest_rows:
            f.write(f"{image_id},{gender},{age},{skin}\n")
    preds_path = os.path.join(out_dir, "association_preds.jsonl")
    write_predictions(records, preds_path)
    paths["association_manifest"] = manifest_path
    paths["association_preds"] = preds_path
    return {"dataset": dataset, "confidence": confidence, "planted_counts": truth}


def _make_geo(section: dict, out_dir, paths) -> dict:
    households = section["households"]
    rows = []
    records = []
    truth = {}
    for hh in households:
        hid = hh["id"]
        n_images = int(hh["images"])
        hits = _planted_count(float(hh["hit_fraction"]), n_images, f"household {hid}")
        copies = int(hh.get("row_copies", 1))
        if n_images < 1 or copies < 1:
            raise ValidationError(f"inconsistent spec: household {hid!r} needs images and copies >= 1")
        truth[hid] = {"images": n_images, "hits": hits, "rate": hits / n_images}
        for i in range(n_images):
            image_id = f"{hid}-img{i:03d}"
            label = f"obj-{hid}-{i:03d}"
            for _ in range(copies):
                rows.append((image_id, hid, hh.get("country", "Fixtureland"), hh["region"], hh["income"], label))
            predicted = label if i < hits else MISS_LABEL
            records.append(PredictionRecord(image_id, [(predicted, 0.9)]))

    manifest_path = os.path.join(out_dir, "geo_manifest.csv")
    with open(manifest_path, "w", encoding="utf-8", newline="") as f:
        f.write("id,household_id,country,region,income_usd,labels\n")
        for image_id, hid, country, region, income, label in rows:
            f.write(f"{image_id},{hid},{country},{region},{income},{label}\n")
    preds_path = os.path.join(out_dir, "geo_preds.jsonl")
    write_predictions(records, preds_path)
    paths["geo_manifest"] = manifest_path
    paths["geo_preds"] = preds_path
    return {"households": truth}


def _make_retrieval(section: dict, rng, out_dir, paths) -> dict:
    dim = int(section.get("dim", 8))
    n_db = int(section.get("db_per_gender", 20))
    n_q = int(section.get("queries_per_gender", 5))
    jitter = float(section.get("jitter", 0.1))
    if dim < 2 or n_db < 1 or n_q < 1:
        raise ValidationError("inconsistent spec: retrieval needs dim >= 2 and cluster sizes >= 1")
    if not (0.0 <= jitter < 0.5):
        raise ValidationError(f"inconsistent spec: jitter {jitter} must be in [0, 0.5)")

    centers = {"female": np.eye(dim, dtype=np.float64)[0], "male": np.eye(dim, dtype=np.float64)[1]}

    def cluster_point(center):
        z = rng.standard_normal(dim)
        z -= np.dot(z, center) * center
        norm = np.linalg.norm(z)
        if norm > 0 and jitter > 0:
            z = z / norm * jitter
        else:
            z = np.zeros(dim)
        return center + z

    db_ids, db_rows, db_manifest = [], [], []
    q_ids, q_rows, q_manifest = [], [], []
    for gender in sorted(centers):
        center = centers[gender]
        for i in range(n_db):
            db_ids.append(f"db-{gender}-{i:04d}")
            db_rows.append(cluster_point(center))
            db_manifest.append((db_ids[-1], gender, 30))
        for i in range(n_q):
            q_ids.append(f"q-{gender}-{i:04d}")
            q_rows.append(cluster_point(center))
            q_manifest.append((q_ids[-1], gender, 25, _SKIN_CYCLE[i % len(_SKIN_CYCLE)]))

    db = normalize_rows(EmbeddingMatrix(db_ids, np.array(db_rows, dtype=np.float32)))
    queries = normalize_rows(EmbeddingMatrix(q_ids, np.array(q_rows, dtype=np.float32)))

    paths["db_emb"] = os.path.join(out_dir, "db.emb")
    paths["db_ids"] = os.path.join(out_dir, "db.ids")
    paths["query_emb"] = os.path.join(out_dir, "query.emb")
    paths["query_ids"] = os.path.join(out_dir, "query.ids")
    write_embeddings(db, paths["db_emb"], paths["db_ids"])
    write_embeddings(queries, paths["query_emb"], paths["query_ids"])

    db_manifest_path = os.path.join(out_dir, "db_manifest.csv")
    with open(db_manifest_path, "w", encoding="utf-8", newline="") as f:
        f.write("id,gender,age\n")
        for image_id, gender, age in db_manifest:
            f.write(f"{image_id},{gender},{age}\n")
    q_manifest_path = os.path.join(out_dir, "query_manifest.csv")
    with open(q_manifest_path, "w", encoding="utf-8", newline="") as f:
        f.write("id,gender,age,skin_tone\n")
        for image_id, gender, age, skin in q_manifest:
            f.write(f"{image_id},{gender},{age},{skin}\n")
    paths["db_manifest"] = db_manifest_path
    paths["query_manifest"] = q_manifest_path
    return {"dim": dim, "db_per_gender": n_db, "queries_per_gender": n_q, "jitter": jitter}
