import json
from pathlib import Path

import pytest

from fairaudit.association import ThresholdGrid, association_rates
from fairaudit.fixtures import make_fixture
from fairaudit.formats import read_embeddings, read_predictions
from fairaudit.geodiversity import dedupe, household_hit_rates
from fairaudit.manifests import read_manifest
from fairaudit.model import GroupKey, ValidationError
from fairaudit.retrieval import retrieval_report
from fairaudit.taxonomy import load_default_taxonomy

SPEC = {
    "association": {
        "dataset": "CC",
        "groups": {"female": 8, "male": 4},
        "planted": {"female": {"NonHuman": 0.25}, "male": {"Human": 0.5, "Crime": 0.25}},
    },
    "geo": {
        "households": [
            {"id": "h1", "region": "Africa", "income": 50, "images": 4, "hit_fraction": 0.75},
            {"id": "h2", "region": "Europe", "income": 5000, "images": 2, "hit_fraction": 0.5},
        ]
    },
    "retrieval": {"dim": 6, "db_per_gender": 10, "queries_per_gender": 3, "jitter": 0.1},
}


def test_fixture_planted_association_rates(tmp_path):
    out = make_fixture(3, SPEC, tmp_path)
    manifest = read_manifest(out["paths"]["association_manifest"], "CC")
    records = list(read_predictions(out["paths"]["association_preds"]))
    report = association_rates(records, manifest, load_default_taxonomy(), ThresholdGrid([0.0]), ["gender"])
    assert report.cell(GroupKey([("gender", "female")]), "NonHuman", 0.0).rate == 25.0
    assert report.cell(GroupKey([("gender", "male")]), "Human", 0.0).rate == 50.0
    assert report.cell(GroupKey([("gender", "male")]), "Crime", 0.0).rate == 25.0
    assert report.cell(GroupKey([("gender", "female")]), "Crime", 0.0).rate == 0.0


def test_fixture_planted_household_rates(tmp_path):
    out = make_fixture(3, SPEC, tmp_path)
    m = read_manifest(out["paths"]["geo_manifest"], "DollarStreet")
    records = list(read_predictions(out["paths"]["geo_preds"]))
    rates = household_hit_rates(records, dedupe(m), m)
    assert rates == {"h1": 0.75, "h2": 0.5}


def test_fixture_cluster_retrieval_precision(tmp_path):
    out = make_fixture(3, SPEC, tmp_path)
    q = read_embeddings(out["paths"]["query_emb"], out["paths"]["query_ids"])
    db = read_embeddings(out["paths"]["db_emb"], out["paths"]["db_ids"])
    qm = read_manifest(out["paths"]["query_manifest"], "CC")
    dbm = read_manifest(out["paths"]["db_manifest"], "UTK")
    report, _ = retrieval_report(q, qm, db, dbm, ks=(5, 10), stratify_by=("gender",))
    for cell in report.cells.values():
        assert cell.mean_precision == 1.0


def test_fixture_seed_determinism(tmp_path):
    a = make_fixture(9, SPEC, tmp_path / "a")
    b = make_fixture(9, SPEC, tmp_path / "b")
    for key in a["paths"]:
        pa, pb = Path(a["paths"][key]), Path(b["paths"][key])
        assert pa.read_bytes() == pb.read_bytes(), key
    c = make_fixture(10, SPEC, tmp_path / "c")
    assert Path(a["paths"]["query_emb"]).read_bytes() != Path(c["paths"]["query_emb"]).read_bytes()


def test_fixture_rejects_non_integral_rate(tmp_path):
    bad = {"association": {"groups": {"female": 3}, "planted": {"female": {"NonHuman": 0.5}}}}
    with pytest.raises(ValidationError, match="not integral"):
        make_fixture(0, bad, tmp_path)


def test_fixture_rejects_empty_spec(tmp_path):
    with pytest.raises(ValidationError, match="no fixture sections"):
        make_fixture(0, {}, tmp_path)


def test_fixture_truth_file(tmp_path):
    out = make_fixture(3, SPEC, tmp_path)
    truth = json.loads(Path(out["paths"]["truth"]).read_text())
    assert truth["association"]["planted_counts"]["female"]["NonHuman"] == 2
    assert truth["geo"]["households"]["h1"]["rate"] == 0.75
