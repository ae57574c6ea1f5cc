from fractions import Fraction

import numpy as np
import pytest

from fairaudit.association import (
    TYPE_NAMES,
    ThresholdGrid,
    association_rates,
    derive_age_group,
    derive_skin_group,
    image_hits,
    parse_group_spec,
)
from fairaudit.model import (
    AssociationType,
    GroupKey,
    PredictionRecord,
    SubjectManifest,
    SubjectRow,
    ValidationError,
)
from fairaudit.taxonomy import classify_label, load_default_taxonomy

FITZ = ("I", "II", "III", "IV", "V", "VI")
LABEL_POOL = ("gorilla", "face", "prison", "beard", "people", "banana", "widget", "snake", "cat", "dog")


@pytest.fixture(scope="module")
def tax():
    return load_default_taxonomy()


def _manifest(rows):
    return SubjectManifest("CC", rows=rows, vocabularies={})


# ------------------------------------------------------------- image_hits

def test_image_hits_thresholds(tax):
    rec = PredictionRecord("x", [("gorilla", 0.4), ("face", 0.3)])
    assert image_hits(rec, tax, "CC", 0.1) == {AssociationType.NON_HUMAN, AssociationType.HUMAN}
    assert image_hits(rec, tax, "CC", 0.35) == {AssociationType.NON_HUMAN}
    assert image_hits(rec, tax, "CC", 0.5) == set()


def test_image_hits_excludes_unmapped(tax):
    rec = PredictionRecord("x", [("banana", 0.9)])
    assert image_hits(rec, tax, "CC", 0.0) == set()


def test_image_hits_top5_cap(tax):
    preds = [("banana", 0.9), ("widget", 0.8), ("thing", 0.7), ("stuff", 0.6), ("其他", 0.5)]
    base = PredictionRecord("x", list(preds))
    extended = PredictionRecord("x", preds + [("gorilla", 0.4)])
    for tau in (0.0, 0.3, 0.6):
        assert image_hits(base, tax, "CC", tau) == image_hits(extended, tax, "CC", tau)


def test_threshold_grid_validation():
    assert ThresholdGrid.default().thresholds == tuple(i / 10 for i in range(10))
    with pytest.raises(ValidationError):
        ThresholdGrid([0.5, 0.1])
    with pytest.raises(ValidationError):
        ThresholdGrid([0.1, 1.5])


def test_parse_group_spec():
    assert parse_group_spec("gender") == ("gender",)
    assert parse_group_spec("gender_x_skin_tone") == ("gender", "skin_tone")
    with pytest.raises(ValidationError):
        parse_group_spec("gender_x_gender")


def test_reexported_derivations():
    assert derive_age_group(30) == "30-45"
    assert derive_skin_group("III") == "lighter"


# ---------------------------------------------------------- simple rates

def test_rate_of_half_group(tax):
    rows = [SubjectRow(f"i{k}", gender="female") for k in range(4)]
    records = [
        PredictionRecord("i0", [("gorilla", 0.9)]),
        PredictionRecord("i1", [("snake", 0.9)]),
        PredictionRecord("i2", [("face", 0.9)]),
        PredictionRecord("i3", [("banana", 0.9)]),
    ]
    report = association_rates(records, _manifest(rows), tax, ThresholdGrid([0.0]), ["gender"])
    cell = report.cell(GroupKey([("gender", "female")]), "NonHuman", 0.0)
    assert (cell.hit_count, cell.group_size, cell.rate) == (2, 4, 50.0)


def test_harmful_is_union_not_sum(tax):
    # 6-image fixture with overlapping Crime/NonHuman hits; oracle = brute union count
    rows = [SubjectRow(f"i{k}", gender="female") for k in range(6)]
    preds = {
        "i0": [("gorilla", 0.9), ("prison", 0.8)],  # both harmful types
        "i1": [("gorilla", 0.9)],
        "i2": [("prison", 0.9)],
        "i3": [("prison", 0.9), ("snake", 0.8)],    # both again
        "i4": [("face", 0.9)],
        "i5": [("banana", 0.9)],
    }
    records = [PredictionRecord(i, p) for i, p in preds.items()]
    union = 0
    for p in preds.values():
        types = {classify_label(tax, l, "CC") for l, _ in p[:5]}
        union += bool(types & {AssociationType.CRIME, AssociationType.NON_HUMAN})
    assert union == 4  # i0, i1, i2, i3

    report = association_rates(records, _manifest(rows), tax, ThresholdGrid([0.0]), ["gender"])
    key = GroupKey([("gender", "female")])
    assert report.cell(key, "Harmful", 0.0).hit_count == union
    crime = report.cell(key, "Crime", 0.0).hit_count
    nonhuman = report.cell(key, "NonHuman", 0.0).hit_count
    assert (crime, nonhuman) == (3, 3)
    assert union < crime + nonhuman  # the overlap is why union != sum


def test_tau_zero_equals_plain_top5(tax):
    rows = [SubjectRow(f"i{k}", gender="female") for k in range(3)]
    records = [
        PredictionRecord("i0", [("gorilla", 0.01)]),
        PredictionRecord("i1", [("face", 0.0)]),
        PredictionRecord("i2", [("prison", 0.3)]),
    ]
    report = association_rates(records, _manifest(rows), tax, ThresholdGrid([0.0]), ["gender"])
    key = GroupKey([("gender", "female")])
    # every score >= 0, so each image counts exactly as unthresholded top-5
    assert report.cell(key, "NonHuman", 0.0).hit_count == 1
    assert report.cell(key, "Human", 0.0).hit_count == 1
    assert report.cell(key, "Crime", 0.0).hit_count == 1


def test_empty_intersection_cell_reported_with_null_rate(tax):
    rows = [
        SubjectRow("i0", gender="female", skin_tone="II"),
        SubjectRow("i1", gender="male", skin_tone="V"),
    ]
    records = [PredictionRecord("i0", [("face", 0.9)]), PredictionRecord("i1", [("face", 0.9)])]
    report = association_rates(
        records, _manifest(rows), tax, ThresholdGrid([0.0]), ["gender_x_skin_tone"]
    )
    empty = report.cell(GroupKey([("gender", "female"), ("skin_tone", "darker")]), "Human", 0.0)
    assert empty.group_size == 0 and empty.rate is None
    full = report.cell(GroupKey([("gender", "female"), ("skin_tone", "lighter")]), "Human", 0.0)
    assert full.rate == 100.0


def test_unmatched_and_missing_ids_are_errors(tax):
    rows = [SubjectRow("i0", gender="female")]
    with pytest.raises(ValidationError, match="unknown image_id"):
        association_rates(
            [PredictionRecord("zz", [("face", 0.9)])], _manifest(rows), tax,
            ThresholdGrid([0.0]), ["gender"],
        )
    with pytest.raises(ValidationError, match="no prediction"):
        association_rates([], _manifest(rows), tax, ThresholdGrid([0.0]), ["gender"])


# ------------------------------------------------- randomized oracle suite

def _random_fixture(rng):
    n = int(rng.integers(1, 21))
    rows = []
    records = []
    for i in range(n):
        gender = rng.choice(["female", "male", "other"])
        skin = rng.choice(FITZ)
        rows.append(SubjectRow(f"im{i}", gender=str(gender), skin_tone=str(skin)))
        n_preds = int(rng.integers(1, 9))
        labels = rng.choice(LABEL_POOL, size=n_preds, replace=False)
        scores = np.sort(rng.random(n_preds))[::-1]
        records.append(PredictionRecord(f"im{i}", list(zip(labels.tolist(), scores.tolist()))))
    taus = sorted({0.0} | {float(rng.random()) for _ in range(int(rng.integers(1, 4)))})
    return rows, records, taus


def _oracle_recount(records, rows, tax, dataset, taus, group_specs):
    """Exhaustive per-image recount, independent of the engine's code path."""
    def resolve(row, attr):
        if attr == "gender":
            return row.gender
        if attr == "skin_tone":
            return "lighter" if row.skin_tone in ("I", "II", "III") else "darker"
        raise AssertionError(attr)

    recs = {r.image_id: r for r in records}
    cells = {}
    for spec in group_specs:
        attrs = spec.split("_x_")
        observed = {a: sorted({resolve(r, a) for r in rows}) for a in attrs}
        combos = [()]
        for a in attrs:
            combos = [c + ((a, v),) for c in combos for v in observed[a]]
        for combo in combos:
            members = [r for r in rows if all(resolve(r, a) == v for a, v in combo)]
            for tau in taus:
                for type_name in TYPE_NAMES:
                    hits = 0
                    for row in members:
                        types = set()
                        for label, score in recs[row.image_id].preds[:5]:
                            if score >= tau:
                                types.add(classify_label(tax, label, dataset).value)
                        if type_name == "Harmful":
                            hit = bool({"NonHuman", "Crime"} & types)
                        elif type_name == "NonHarmful":
                            hit = "Human" in types
                        else:
                            hit = type_name in types
                        hits += hit
                    cells[(GroupKey(combo), type_name, tau)] = (hits, len(members))
    return cells


def test_oracle_equivalence_on_random_fixtures(tax):
    group_specs = ("gender", "skin_tone", "gender_x_skin_tone")
    for seed in range(50):
        rng = np.random.default_rng(seed)
        rows, records, taus = _random_fixture(rng)
        report = association_rates(records, _manifest(rows), tax, ThresholdGrid(taus), group_specs)
        expected = _oracle_recount(records, rows, tax, "CC", taus, group_specs)
        assert set(report.cells) == set(expected)
        for key, (hits, size) in expected.items():
            cell = report.cells[key]
            assert (cell.hit_count, cell.group_size) == (hits, size), key
            if size:
                # exact rational agreement, not approximate
                assert cell.rate == float(Fraction(100 * hits, size) * 1.0)
                assert Fraction(cell.hit_count, cell.group_size) == Fraction(hits, size)


def test_monotonicity_and_union_bound_on_random_fixtures(tax):
    group_specs = ("gender", "gender_x_skin_tone")
    for seed in range(50, 80):
        rng = np.random.default_rng(seed)
        rows, records, taus = _random_fixture(rng)
        report = association_rates(records, _manifest(rows), tax, ThresholdGrid(taus), group_specs)
        for group in report.groups():
            size = report.cells[(group, "Human", taus[0])].group_size
            for type_name in TYPE_NAMES:
                rates = [report.cell(group, type_name, t).rate for t in taus]
                if size == 0:
                    assert all(r is None for r in rates)
                    continue
                assert all(a >= b for a, b in zip(rates, rates[1:])), (group, type_name)
            if size:
                for tau in taus:
                    harmful = report.cell(group, "Harmful", tau).rate
                    crime = report.cell(group, "Crime", tau).rate
                    nonhuman = report.cell(group, "NonHuman", tau).rate
                    assert harmful <= crime + nonhuman + 1e-12
                    assert harmful >= max(crime, nonhuman) - 1e-12
