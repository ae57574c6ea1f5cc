import json

import numpy as np
import pytest

from fairaudit.formats import (
    HEADER_SIZE,
    read_embeddings,
    read_predictions,
    write_embeddings,
    write_predictions,
)
from fairaudit.model import EmbeddingMatrix, PredictionRecord, ValidationError


def _paths(tmp_path):
    return tmp_path / "m.emb", tmp_path / "m.ids"


def test_header_is_20_bytes():
    assert HEADER_SIZE == 20


def test_round_trip_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    m = EmbeddingMatrix([f"id{i}" for i in range(7)], rng.standard_normal((7, 5)).astype(np.float32))
    p1, i1 = _paths(tmp_path)
    write_embeddings(m, p1, i1)
    back = read_embeddings(p1, i1)
    assert back == m
    p2, i2 = tmp_path / "m2.emb", tmp_path / "m2.ids"
    write_embeddings(back, p2, i2)
    assert p1.read_bytes() == p2.read_bytes()
    assert i1.read_bytes() == i2.read_bytes()


def test_known_payload(tmp_path):
    p, i = _paths(tmp_path)
    m = EmbeddingMatrix(["a", "b"], np.array([[1, 0, 0], [0, 1, 0]], dtype=np.float32))
    write_embeddings(m, p, i)
    back = read_embeddings(p, i)
    assert back.ids == ["a", "b"]
    assert np.array_equal(back.values, np.eye(2, 3, dtype=np.float32))


def test_empty_matrix_is_header_only(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix([], np.zeros((0, 4), dtype=np.float32)), p, i)
    assert p.stat().st_size == 20
    assert i.read_bytes() == b""
    back = read_embeddings(p, i)
    assert back.n == 0 and back.d == 4


def test_file_length_formula(tmp_path):
    p, i = _paths(tmp_path)
    m = EmbeddingMatrix(["a"], np.zeros((1, 2048), dtype=np.float32))
    write_embeddings(m, p, i)
    assert p.stat().st_size == 20 + 8192


def test_bad_magic(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix(["a"], np.ones((1, 2), dtype=np.float32)), p, i)
    raw = bytearray(p.read_bytes())
    raw[0] = ord("X")
    p.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="bad magic"):
        read_embeddings(p, i)


def test_bad_version(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix(["a"], np.ones((1, 2), dtype=np.float32)), p, i)
    raw = bytearray(p.read_bytes())
    raw[8] = 2
    p.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="version"):
        read_embeddings(p, i)


def test_size_mismatch(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix(["a"], np.ones((1, 2), dtype=np.float32)), p, i)
    p.write_bytes(p.read_bytes() + b"\x00")
    with pytest.raises(ValidationError, match="size mismatch"):
        read_embeddings(p, i)


def test_id_count_mismatch(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix(["a", "b"], np.ones((2, 3), dtype=np.float32)), p, i)
    i.write_text("a\nb\nc\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="id-count mismatch"):
        read_embeddings(p, i)


def test_bom_rejected(tmp_path):
    p, i = _paths(tmp_path)
    write_embeddings(EmbeddingMatrix(["a"], np.ones((1, 2), dtype=np.float32)), p, i)
    i.write_bytes(b"\xef\xbb\xbfa\n")
    with pytest.raises(ValidationError, match="BOM"):
        read_embeddings(p, i)


def test_non_finite_rejected(tmp_path):
    p, i = _paths(tmp_path)
    m = EmbeddingMatrix(["a"], np.ones((1, 2), dtype=np.float32))
    write_embeddings(m, p, i)
    raw = bytearray(p.read_bytes())
    raw[20:24] = np.array([np.inf], dtype="<f4").tobytes()
    p.write_bytes(bytes(raw))
    with pytest.raises(ValidationError, match="not finite"):
        read_embeddings(p, i)


def test_write_rejects_invalid_matrix(tmp_path):
    p, i = _paths(tmp_path)
    bad = EmbeddingMatrix(["a", "a"], np.ones((2, 2), dtype=np.float32))
    with pytest.raises(ValidationError):
        write_embeddings(bad, p, i)


# ---------------------------------------------------------- predictions

def test_read_predictions_single(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text('{"id":"x","preds":[{"label":"face","score":0.9}]}\n', encoding="utf-8")
    records = list(read_predictions(p))
    assert len(records) == 1
    assert records[0].image_id == "x"
    assert records[0].preds == [("face", 0.9)]


def test_read_predictions_empty_file(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text("", encoding="utf-8")
    assert list(read_predictions(p)) == []


def test_read_predictions_score_order_with_line_number(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text(
        '{"id":"a","preds":[{"label":"x","score":0.9}]}\n'
        '{"id":"b","preds":[{"label":"x","score":0.2},{"label":"y","score":0.8}]}\n',
        encoding="utf-8",
    )
    with pytest.raises(ValidationError, match=r":2: scores not non-increasing"):
        list(read_predictions(p))


def test_read_predictions_duplicate_id(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text(
        '{"id":"a","preds":[{"label":"x","score":0.9}]}\n'
        '{"id":"a","preds":[{"label":"y","score":0.9}]}\n',
        encoding="utf-8",
    )
    with pytest.raises(ValidationError, match="duplicate image_id"):
        list(read_predictions(p))


def test_read_predictions_malformed_json_line(tmp_path):
    p = tmp_path / "p.jsonl"
    p.write_text('{"id":"a","preds":[{"label":"x","score":0.9}]}\n{oops\n', encoding="utf-8")
    with pytest.raises(ValidationError, match=":2: malformed JSON"):
        list(read_predictions(p))


def test_predictions_round_trip(tmp_path):
    p = tmp_path / "p.jsonl"
    records = [
        PredictionRecord("a", [("face", 0.9), ("gorilla", 0.1)]),
        PredictionRecord("b", [("prison", 0.5)]),
    ]
    write_predictions(records, p)
    back = list(read_predictions(p))
    assert back == records


def test_streaming_is_buffer_size_independent(tmp_path):
    # same records whether the file is read in one gulp or line by line
    p = tmp_path / "p.jsonl"
    records = [PredictionRecord(f"im{i}", [("face", 0.5)]) for i in range(50)]
    write_predictions(records, p)
    assert [json.loads(l)["id"] for l in p.read_text().splitlines()] == [r.image_id for r in records]
    assert list(read_predictions(p)) == records
