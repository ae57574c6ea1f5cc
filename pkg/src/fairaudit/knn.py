"""Deterministic exact top-K cosine similarity search.

Similarities are dot products of row-normalized vectors, accumulated in
float64 over a fixed index order and rounded to float32 before ranking,
which removes summation-order effects from the results. Queries are
processed in fixed-size blocks regardless of the worker count, so the
output is bit-identical for any number of threads. Ties are broken by
ascending database index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import EmbeddingMatrix, ValidationError

NORM_EPSILON = 1e-12
QUERY_BLOCK = 256  # fixed: a performance knob must never change results


@dataclass
class NeighborList:
    query_id: str
    neighbors: list  # of (db_index, score), scores non-increasing, ties by index


def normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit L2 norm; rows with near-zero norm are rejected."""
    values = m.values.astype(np.float32, copy=True)
    norms = np.linalg.norm(values.astype(np.float64), axis=1)
    bad = np.nonzero(norms <= NORM_EPSILON)[0]
    if bad.size:
        ids = [m.ids[i] for i in bad[:10]]
        raise ValidationError([f"zero-norm row for id {i!r}" for i in ids])
    values /= norms[:, None].astype(np.float32)
    return EmbeddingMatrix(m.ids, values)


def top_k(queries: EmbeddingMatrix, database: EmbeddingMatrix, k: int, threads: int = 1) -> list:
    """Exact K most similar database rows for every query.

    Both matrices must share the dimensionality and be row-normalized by
    the caller (the ranking is by dot product). Returns one NeighborList
    per query, in query order.
    """
    if queries.d != database.d:
        raise ValidationError(f"dimension mismatch: queries d={queries.d}, database d={database.d}")
    if not (1 <= k <= database.n):
        raise ValidationError(f"K must be in 1..{database.n}, got {k}")

    db64t = database.values.astype(np.float64).T
    starts = range(0, queries.n, QUERY_BLOCK)

    def run_block(start):
        block = queries.values[start : start + QUERY_BLOCK].astype(np.float64)
        scores = (block @ db64t).astype(np.float32)
        return [_select(scores[i], k) for i in range(scores.shape[0])]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run_block, starts))
    else:
        chunks = [run_block(s) for s in starts]

    out = []
    i = 0
    for chunk in chunks:
        for indices, scores in chunk:
            out.append(
                NeighborList(queries.ids[i], list(zip(indices.tolist(), scores.tolist())))
            )
            i += 1
    return out


def _select(row: np.ndarray, k: int):
    """Indices and scores of the K largest entries; ties go to smaller indices."""
    n = row.shape[0]
    if k == n:
        sel = np.arange(n)
    else:
        thresh = np.partition(row, n - k)[n - k]
        above = np.nonzero(row > thresh)[0]
        ties = np.nonzero(row == thresh)[0][: k - above.size]
        sel = np.concatenate([above, ties])
    order = np.lexsort((sel, -row[sel]))
    sel = sel[order]
    return sel, row[sel]


def write_neighbors(neighbor_lists: list, db_ids: list, path) -> None:
    """Dump neighbor lists as CSV: query_id, rank, db_id, score (9 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("query_id,rank,db_id,score\n")
        for nl in neighbor_lists:
            for rank, (idx, score) in enumerate(nl.neighbors, start=1):
                f.write(f"{nl.query_id},{rank},{db_ids[idx]},{score:.9g}\n")
