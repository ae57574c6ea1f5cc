"""Bit-exact readers/writers for the interchange formats.

Embeddings travel in the FAIREMB1 container: a 20-byte header (8-byte
ASCII magic ``FAIREMB1``, then version, row count n and dimensionality d
as unsigned 32-bit little-endian integers) followed by n*d float32
little-endian values in row-major order. Row ids live in a sibling UTF-8
text file, one id per line, exactly n lines, no BOM.

Predictions travel as JSON lines: one object per image,
``{"id": ..., "preds": [{"label": ..., "score": ...}, ...]}`` with scores
sorted non-increasing.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterator

import numpy as np

from .model import EmbeddingMatrix, PredictionRecord, ValidationError

MAGIC = b"FAIREMB1"
VERSION = 1
HEADER = struct.Struct("<8sIII")  # magic, version, n, d
HEADER_SIZE = HEADER.size  # 20 bytes


def write_embeddings(matrix: EmbeddingMatrix, matrix_path, ids_path) -> None:
    """Write a matrix to FAIREMB1 + ids files, readable back bit-exactly."""
    errs = matrix.validate()
    if errs:
        raise ValidationError(errs)
    payload = np.ascontiguousarray(matrix.values, dtype="<f4")
    with open(matrix_path, "wb") as f:
        f.write(HEADER.pack(MAGIC, VERSION, matrix.n, matrix.d))
        f.write(payload.tobytes())
    with open(ids_path, "w", encoding="utf-8", newline="") as f:
        for image_id in matrix.ids:
            f.write(image_id + "\n")


def read_embeddings(matrix_path, ids_path) -> EmbeddingMatrix:
    """Read a FAIREMB1 file and its ids file into a validated matrix.

    Rejects bad magic/version, size mismatches, id-count mismatches and
    non-finite values.
    """
    raw = Path(matrix_path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise ValidationError(f"{matrix_path}: file shorter than {HEADER_SIZE}-byte header")
    magic, version, n, d = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValidationError(f"{matrix_path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValidationError(f"{matrix_path}: unsupported version {version}")
    expected = HEADER_SIZE + 4 * n * d
    if len(raw) != expected:
        raise ValidationError(
            f"{matrix_path}: size mismatch, expected {expected} bytes for n={n} d={d}, got {len(raw)}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(n, d)

    ids_raw = Path(ids_path).read_bytes()
    if ids_raw.startswith(b"\xef\xbb\xbf"):
        raise ValidationError(f"{ids_path}: BOM not allowed")
    text = ids_raw.decode("utf-8")
    ids = text.splitlines()
    if len(ids) != n:
        raise ValidationError(f"{ids_path}: id-count mismatch, header n={n} but {len(ids)} lines")

    matrix = EmbeddingMatrix(ids, values)
    errs = matrix.validate()
    if errs:
        raise ValidationError([f"{matrix_path}: {e}" for e in errs])
    return matrix


def read_predictions(path) -> Iterator[PredictionRecord]:
    """Stream validated prediction records from a JSON-lines file.

    Memory stays constant in file size apart from the seen-id set needed
    to reject duplicate image ids. Malformed lines are reported with
    their 1-based line number.
    """
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}:{lineno}: malformed JSON ({e.msg})") from e
            record = _record_from_obj(obj, path, lineno)
            if record.image_id in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate image_id {record.image_id!r}")
            seen.add(record.image_id)
            errs = record.validate()
            if errs:
                raise ValidationError([f"{path}:{lineno}: {e}" for e in errs])
            yield record


def _record_from_obj(obj, path, lineno) -> PredictionRecord:
    if not isinstance(obj, dict) or "id" not in obj or "preds" not in obj:
        raise ValidationError(f"{path}:{lineno}: record must be an object with 'id' and 'preds'")
    preds = []
    if not isinstance(obj["preds"], list):
        raise ValidationError(f"{path}:{lineno}: 'preds' must be a list")
    for p in obj["preds"]:
        if not isinstance(p, dict) or "label" not in p or "score" not in p:
            raise ValidationError(f"{path}:{lineno}: each prediction needs 'label' and 'score'")
        if not isinstance(p["score"], (int, float)) or isinstance(p["score"], bool):
            raise ValidationError(f"{path}:{lineno}: score must be a number")
        preds.append((str(p["label"]), float(p["score"])))
    return PredictionRecord(image_id=str(obj["id"]), preds=preds)


def write_predictions(records, path) -> None:
    """Write prediction records as JSON lines (inverse of read_predictions)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for record in records:
            errs = record.validate()
            if errs:
                raise ValidationError([f"{record.image_id}: {e}" for e in errs])
            obj = {
                "id": record.image_id,
                "preds": [{"label": l, "score": s} for l, s in record.preds],
            }
            f.write(json.dumps(obj, sort_keys=True) + "\n")
