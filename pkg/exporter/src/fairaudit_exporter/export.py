"""Export arrays and score matrices into the audit toolkit's file formats.

The embedding container is written against its public definition: 20-byte
header (magic ``FAIREMB1``, version 1, n, d as u32 little-endian) plus
n*d float32 little-endian row-major values, with ids in a sibling text
file, one per line. Predictions are JSON lines with per-image top-k
(label, score) pairs sorted by descending score.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FAIREMB1"
HEADER = struct.Struct("<8sIII")


class ExportError(ValueError):
    pass


def load_array(path, npz_key=None) -> np.ndarray:
    """Load a 2-D numeric array from .npy, .npz or delimited text."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        arr = np.load(path, allow_pickle=False)
    elif suffix == ".npz":
        with np.load(path, allow_pickle=False) as bundle:
            keys = list(bundle.keys())
            if npz_key is None:
                if len(keys) != 1:
                    raise ExportError(f"{path}: pick one of {keys} with --npz-key")
                npz_key = keys[0]
            if npz_key not in keys:
                raise ExportError(f"{path}: no array named {npz_key!r}; has {keys}")
            arr = bundle[npz_key]
    elif suffix in (".csv", ".txt", ".tsv"):
        arr = np.loadtxt(path, delimiter="\t" if suffix == ".tsv" else ",", ndmin=2)
    else:
        raise ExportError(f"{path}: unsupported array format {suffix!r} (.npy/.npz/.csv/.txt/.tsv)")
    if not np.issubdtype(arr.dtype, np.number):
        raise ExportError(f"{path}: array dtype {arr.dtype} is not numeric")
    return arr


def read_ids(path) -> list:
    text = Path(path).read_text(encoding="utf-8")
    return text.splitlines()


def export_embeddings(array, ids, emb_path, ids_path) -> None:
    """Write a FAIREMB1 file plus ids file readable by the audit toolkit.

    Values are cast to float32 with round-to-nearest-even; non-finite rows
    are refused with their ids.
    """
    array = np.asarray(array)
    if array.ndim != 2:
        raise ExportError(f"embeddings must be 2-D, got shape {array.shape}")
    n, d = array.shape
    if len(ids) != n:
        raise ExportError(f"row count {n} != id count {len(ids)}")
    if len(set(ids)) != n:
        raise ExportError("ids are not unique")
    if d < 1:
        raise ExportError("dimensionality must be >= 1")
    finite = np.isfinite(array).all(axis=1)
    if not finite.all():
        bad = [ids[i] for i in np.nonzero(~finite)[0][:10]]
        raise ExportError(f"non-finite values in rows: {bad}")
    payload = np.ascontiguousarray(array, dtype="<f4")  # nearest-even cast
    with open(emb_path, "wb") as f:
        f.write(HEADER.pack(MAGIC, 1, n, d))
        f.write(payload.tobytes())
    with open(ids_path, "w", encoding="utf-8", newline="") as f:
        for image_id in ids:
            f.write(str(image_id) + "\n")


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def export_predictions(score_matrix, ids, vocabulary, out_path, top_k=5, apply_softmax=False) -> None:
    """Write per-image top-k predictions as JSON lines.

    Rows must be probability vectors (each summing to 1 within 1e-3)
    unless ``apply_softmax`` converts raw scores first. Ties in score are
    broken by vocabulary order so output is deterministic.
    """
    scores = np.asarray(score_matrix, dtype=np.float64)
    if scores.ndim != 2:
        raise ExportError(f"score matrix must be 2-D, got shape {scores.shape}")
    n, width = scores.shape
    if len(ids) != n:
        raise ExportError(f"row count {n} != id count {len(ids)}")
    vocabulary = [str(v) for v in vocabulary]
    if len(vocabulary) != width:
        raise ExportError(f"vocabulary size {len(vocabulary)} != score-vector width {width}")
    if len(set(vocabulary)) != width:
        raise ExportError("vocabulary labels are not unique")
    if not np.isfinite(scores).all():
        raise ExportError("score matrix contains non-finite values")
    if apply_softmax:
        scores = softmax(scores)
    else:
        sums = scores.sum(axis=1)
        off = np.nonzero(np.abs(sums - 1.0) > 1e-3)[0]
        if off.size:
            raise ExportError(
                f"rows {[ids[i] for i in off[:10]]} do not sum to 1 (use --softmax for raw scores)"
            )
        if scores.min() < 0.0 or scores.max() > 1.0:
            raise ExportError("probabilities outside [0,1]")
    top_k = min(int(top_k), width)
    if top_k < 1:
        raise ExportError("top_k must be >= 1")

    with open(out_path, "w", encoding="utf-8", newline="") as f:
        for i in range(n):
            # stable sort on negated scores keeps vocabulary order on ties
            order = np.argsort(-scores[i], kind="stable")[:top_k]
            preds = [{"label": vocabulary[j], "score": float(scores[i][j])} for j in order]
            f.write(json.dumps({"id": str(ids[i]), "preds": preds}, sort_keys=True) + "\n")
