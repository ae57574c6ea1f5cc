"""End-to-end: exporter output consumed by the audit CLI via real files."""

import json
import subprocess

import numpy as np
import pytest


def run(cmd):
    return subprocess.run([str(c) for c in cmd], capture_output=True, text=True)


@pytest.fixture()
def workspace(tmp_path):
    rng = np.random.default_rng(0)
    d = 6
    # two separated gender clusters so the audited precision is exactly 1.0
    def cluster(center, n):
        z = rng.standard_normal((n, d)) * 0.05
        z[:, :2] = 0.0
        return center + z

    e0, e1 = np.eye(d)[0], np.eye(d)[1]
    q = np.vstack([cluster(e0, 3), cluster(e1, 3)])
    db = np.vstack([cluster(e0, 8), cluster(e1, 8)])
    np.save(tmp_path / "q.npy", q)
    np.save(tmp_path / "db.npy", db)
    (tmp_path / "q.txt").write_text("".join(f"q{i}\n" for i in range(6)), encoding="utf-8")
    (tmp_path / "db.txt").write_text("".join(f"d{i}\n" for i in range(16)), encoding="utf-8")
    (tmp_path / "q_manifest.csv").write_text(
        "id,gender,age,skin_tone\n"
        + "".join(f"q{i},{'female' if i < 3 else 'male'},30,II\n" for i in range(6)),
        encoding="utf-8",
    )
    (tmp_path / "db_manifest.csv").write_text(
        "id,gender,age\n"
        + "".join(f"d{i},{'female' if i < 8 else 'male'},40\n" for i in range(16)),
        encoding="utf-8",
    )
    return tmp_path


def test_exported_embeddings_drive_indicator3(workspace):
    for side in ("q", "db"):
        out = run([
            "fairaudit-export", "export-emb",
            "--input", workspace / f"{side}.npy", "--ids", workspace / f"{side}.txt",
            "--out-emb", workspace / f"{side}.emb", "--out-ids", workspace / f"{side}.ids",
        ])
        assert out.returncode == 0, out.stderr

    report_path = workspace / "r3.json"
    out = run([
        "fairaudit", "indicator3",
        "--query-emb", workspace / "q.emb", "--query-ids", workspace / "q.ids",
        "--query-manifest", workspace / "q_manifest.csv",
        "--db-emb", workspace / "db.emb", "--db-ids", workspace / "db.ids",
        "--db-manifest", workspace / "db_manifest.csv",
        "--k", "5", "--stratify", "gender", "--out", report_path,
    ])
    assert out.returncode == 0, out.stderr
    payload = json.loads(report_path.read_text())["payload"]
    assert {c["mean_precision"] for c in payload["cells"]} == {1.0}


def test_exported_predictions_drive_validation(workspace):
    rng = np.random.default_rng(1)
    scores = rng.random((6, 4))
    np.save(workspace / "scores.npy", scores)
    (workspace / "vocab.txt").write_text("face\npeople\ngorilla\nprison\n", encoding="utf-8")
    out = run([
        "fairaudit-export", "export-preds",
        "--scores", workspace / "scores.npy", "--ids", workspace / "q.txt",
        "--vocab", workspace / "vocab.txt", "--softmax", "--out", workspace / "preds.jsonl",
    ])
    assert out.returncode == 0, out.stderr
    out = run(["fairaudit", "validate", "--preds", workspace / "preds.jsonl"])
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout)["checked"]["prediction_records"] == 6
