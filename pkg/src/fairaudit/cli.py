"""Command-line interface.

Exit codes: 0 on success, 1 on validation failures (bad flags or invalid
input data, with a machine-readable error list on stdout), 2 on I/O
errors. Reports are written as deterministic JSON by default; --format
csv exports the flat cell table instead, and --figures renders the same
numbers as PNG charts next to the data output.
"""

from __future__ import annotations

import json
import math
import sys

import click

from . import __version__
from .association import ThresholdGrid, association_rates
from .fixtures import make_fixture
from .formats import read_embeddings, read_predictions
from .geodiversity import BootstrapSpec, aggregate_geo, dedupe, household_hit_rates
from .geometry import cc_face_crop_plan, miap_crop_plan
from .knn import normalize_rows, write_neighbors
from .manifests import read_manifest, resolve_dataset_name, validate_distribution
from .model import BoundingBox, GroupKey, SubjectManifest, ValidationError
from .reporting import (
    association_payload,
    association_report_from_payload,
    build_report,
    curves_to_csv,
    curves_to_json,
    emit_curves,
    geo_payload,
    payload_to_csv,
    retrieval_payload,
    to_json,
)
from .retrieval import retrieval_report
from .taxonomy import load_default_taxonomy, load_taxonomy


@click.group()
@click.version_option(__version__, prog_name="fairaudit")
def cli():
    """Fairness audit toolkit for model prediction and embedding dumps."""


def _split_csv(text):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _parse_thresholds(text) -> ThresholdGrid:
    try:
        values = sorted({float(t) for t in _split_csv(text)})
    except ValueError:
        raise ValidationError(f"bad threshold list {text!r}") from None
    return ThresholdGrid(values)


def _parse_log_base(text) -> float:
    if text.strip().lower() == "e":
        return math.e
    try:
        base = float(text)
    except ValueError:
        raise ValidationError(f"bad log base {text!r}") from None
    if base <= 1.0:
        raise ValidationError(f"log base must be > 1, got {base}")
    return base


def _geo_specs(text):
    # the short forms "income" and "region_x_income" are accepted on the CLI
    specs = []
    for spec in _split_csv(text):
        attrs = ["income_bucket" if a == "income" else a for a in spec.split("_x_")]
        specs.append("_x_".join(attrs))
    return tuple(specs)


def _emit(report: dict, indicator: str, out, fmt: str):
    if fmt == "csv":
        text = payload_to_csv(indicator, report["payload"])
    else:
        text = to_json(report)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


_out_option = click.option("--out", type=click.Path(), default=None, help="Output file (stdout when omitted).")
_format_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
_figures_option = click.option("--figures", type=click.Path(), default=None, help="Directory for rendered PNG figures.")
_timestamp_option = click.option("--timestamp", default=None, help="Timestamp to embed in the report (omitted: null, keeps reports byte-reproducible).")


@cli.command("validate")
@click.option("--manifest", type=click.Path(), default=None)
@click.option("--dataset", default=None, help="Manifest schema: CC, UTK, MIAP or DollarStreet.")
@click.option("--preds", type=click.Path(), default=None)
@click.option("--emb", type=click.Path(), default=None)
@click.option("--ids", type=click.Path(), default=None)
@click.option("--expected", type=click.Path(), default=None, help="JSON of expected group counts to check the manifest against.")
def validate_cmd(manifest, dataset, preds, emb, ids, expected):
    """Validate manifests, prediction dumps and embedding files."""
    checked = {}
    if manifest:
        if not dataset:
            raise click.UsageError("--manifest requires --dataset")
        m = read_manifest(manifest, dataset)
        checked["manifest_rows"] = len(m.rows)
        if expected:
            with open(expected, "r", encoding="utf-8") as f:
                raw = json.load(f)
            want = {GroupKey.parse(k): int(v) for k, v in raw.items()}
            mismatches = validate_distribution(m, want)
            if mismatches:
                raise ValidationError(
                    [f"group {key}: expected {want_n}, got {got_n}" for key, want_n, got_n in mismatches]
                )
            checked["distribution_groups"] = len(want)
    if preds:
        checked["prediction_records"] = sum(1 for _ in read_predictions(preds))
    if emb or ids:
        if not (emb and ids):
            raise click.UsageError("--emb and --ids must be given together")
        matrix = read_embeddings(emb, ids)
        checked["embedding_rows"] = matrix.n
        checked["embedding_dim"] = matrix.d
    if not checked:
        raise click.UsageError("nothing to validate; pass --manifest, --preds or --emb/--ids")
    click.echo(json.dumps({"ok": True, "checked": checked}, sort_keys=True))


@cli.command("crop-plan")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--dataset", required=True, help="MIAP (boxes in the manifest) or CC (separate --boxes file).")
@click.option("--boxes", type=click.Path(), default=None, help="CC only: CSV with id,x0,y0,x1,y1,frame_w,frame_h.")
@click.option("--out", required=True, type=click.Path())
def crop_plan_cmd(manifest, dataset, boxes, out):
    """Compute deterministic crop plans, leaving pixel work to external tools."""
    name = resolve_dataset_name(dataset)
    rows = []
    if name == "MIAP":
        m = read_manifest(manifest, name)
        for row in m.rows:
            plan = miap_crop_plan(row.box, row.gender, row.age_group)
            rows.append((row.image_id, plan))
    elif name == "CC":
        if not boxes:
            raise click.UsageError("CC crop plans need --boxes (the CC manifest carries no geometry)")
        read_manifest(manifest, name)  # checked for validity; ids come from the boxes file
        import csv as _csv

        with open(boxes, "r", encoding="utf-8", newline="") as f:
            reader = _csv.DictReader(f)
            needed = ["id", "x0", "y0", "x1", "y1", "frame_w", "frame_h"]
            missing = [c for c in needed if c not in (reader.fieldnames or [])]
            if missing:
                raise ValidationError(f"{boxes}: missing column(s) {missing}")
            for rec in reader:
                box = BoundingBox(float(rec["x0"]), float(rec["y0"]), float(rec["x1"]), float(rec["y1"]))
                plan = cc_face_crop_plan(box, float(rec["frame_w"]), float(rec["frame_h"]))
                rows.append((rec["id"], plan))
    else:
        raise ValidationError(f"crop-plan supports MIAP and CC, not {name}")

    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write("id,x0,y0,x1,y1,target_w,target_h,keep,reason\n")
        for image_id, plan in rows:
            if plan.keep:
                r = plan.rounded_rect()
                tw, th = plan.target_size
                f.write(f"{image_id},{r.x0},{r.y0},{r.x1},{r.y1},{tw},{th},true,\n")
            else:
                f.write(f"{image_id},,,,,,,false,{plan.reason}\n")
    click.echo(json.dumps({"ok": True, "plans": len(rows)}, sort_keys=True))


@cli.command("indicator1")
@click.option("--preds", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--dataset", required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(), default=None, help="Taxonomy CSV; bundled default when omitted.")
@click.option("--thresholds", default=None, help="Comma-separated taus; default 0.0..0.9 step 0.1.")
@click.option("--group-by", default="gender", show_default=True)
@_out_option
@_format_option
@_figures_option
@_timestamp_option
def indicator1_cmd(preds, manifest, dataset, taxonomy_path, thresholds, group_by, out, fmt, figures, timestamp):
    """Harmful label association rates per subgroup and confidence threshold."""
    tax = load_taxonomy(taxonomy_path) if taxonomy_path else load_default_taxonomy()
    m = read_manifest(manifest, dataset)
    if not isinstance(m, SubjectManifest):
        raise ValidationError(f"indicator1 needs a subject manifest, not {dataset}")
    grid = _parse_thresholds(thresholds) if thresholds else ThresholdGrid.default()
    records = list(read_predictions(preds))
    report = association_rates(records, m, tax, grid, _split_csv(group_by))
    payload = association_payload(report)
    inputs = {"preds": preds, "manifest": manifest}
    if taxonomy_path:
        inputs["taxonomy"] = taxonomy_path
    audit = build_report(
        "indicator1",
        inputs,
        {
            "dataset": m.dataset_name,
            "thresholds": list(grid.thresholds),
            "group_by": list(_split_csv(group_by)),
            "taxonomy": taxonomy_path or "bundled-default",
        },
        payload,
        created_at=timestamp,
    )
    _emit(audit, "indicator1", out, fmt)
    if figures:
        from .figures import save_curve_figures

        if len(grid.thresholds) >= 2:
            save_curve_figures(emit_curves(report), figures)


@cli.command("indicator2")
@click.option("--preds", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--group-by", default="region,income_bucket", show_default=True)
@click.option("--bootstrap", default=1000, show_default=True, help="Bootstrap resamples for the CIs; 0 disables.")
@click.option("--seed", default=0, show_default=True)
@click.option("--tau", type=float, default=None, help="Optional confidence threshold for hits.")
@click.option("--log-base", default="e", show_default=True, help="Base of the income-bucket logarithm.")
@_out_option
@_format_option
@_figures_option
@_timestamp_option
def indicator2_cmd(preds, manifest, group_by, bootstrap, seed, tau, log_base, out, fmt, figures, timestamp):
    """Geographical-diversity hit rates per region and income bucket."""
    m = read_manifest(manifest, "DollarStreet")
    images = dedupe(m)
    records = {r.image_id: r for r in read_predictions(preds)}
    rates = household_hit_rates(records, images, m, tau)
    base = _parse_log_base(log_base)
    spec = BootstrapSpec(bootstrap, seed) if bootstrap > 0 else None
    specs = _geo_specs(group_by)
    report = aggregate_geo(rates, m, specs, spec, base)
    payload = geo_payload(report)
    audit = build_report(
        "indicator2",
        {"preds": preds, "manifest": manifest},
        {
            "group_by": list(specs),
            "bootstrap": bootstrap,
            "seed": seed,
            "tau": tau,
            "log_base": log_base,
            "deduped_images": len(images),
            "households": len(rates),
        },
        payload,
        created_at=timestamp,
    )
    _emit(audit, "indicator2", out, fmt)
    if figures:
        from .figures import save_geo_figures

        save_geo_figures(payload, figures)


@cli.command("indicator3")
@click.option("--query-emb", required=True, type=click.Path())
@click.option("--query-ids", required=True, type=click.Path())
@click.option("--query-manifest", required=True, type=click.Path())
@click.option("--query-dataset", default="CC", show_default=True)
@click.option("--db-emb", required=True, type=click.Path())
@click.option("--db-ids", required=True, type=click.Path())
@click.option("--db-manifest", required=True, type=click.Path())
@click.option("--db-dataset", default="UTK", show_default=True)
@click.option("--k", "ks", default="10,50", show_default=True)
@click.option("--stratify", default="gender", show_default=True)
@click.option("--match-attribute", default="gender", show_default=True)
@click.option("--threads", default=1, show_default=True)
@click.option("--neighbors-out", type=click.Path(), default=None, help="Optional CSV dump of the neighbor lists.")
@_out_option
@_format_option
@_figures_option
@_timestamp_option
def indicator3_cmd(
    query_emb, query_ids, query_manifest, query_dataset, db_emb, db_ids, db_manifest,
    db_dataset, ks, stratify, match_attribute, threads, neighbors_out, out, fmt, figures, timestamp,
):
    """Same-attribute retrieval precision per query subgroup."""
    queries = normalize_rows(read_embeddings(query_emb, query_ids))
    database = normalize_rows(read_embeddings(db_emb, db_ids))
    qm = read_manifest(query_manifest, query_dataset)
    dbm = read_manifest(db_manifest, db_dataset)
    try:
        k_values = [int(k) for k in _split_csv(ks)]
    except ValueError:
        raise ValidationError(f"bad K list {ks!r}") from None
    report, neighbor_lists = retrieval_report(
        queries, qm, database, dbm,
        match_attribute=match_attribute,
        stratify_by=_split_csv(stratify),
        ks=k_values,
        threads=threads,
    )
    if neighbors_out:
        write_neighbors(neighbor_lists, database.ids, neighbors_out)
    payload = retrieval_payload(report)
    audit = build_report(
        "indicator3",
        {
            "query_emb": query_emb, "query_ids": query_ids, "query_manifest": query_manifest,
            "db_emb": db_emb, "db_ids": db_ids, "db_manifest": db_manifest,
        },
        {
            "match_attribute": match_attribute,
            "ks": sorted(set(k_values)),
            "stratify_by": list(_split_csv(stratify)),
            "threads": threads,
            "queries": queries.n,
            "database_rows": database.n,
        },
        payload,
        created_at=timestamp,
    )
    _emit(audit, "indicator3", out, fmt)
    if figures:
        from .figures import save_retrieval_figures

        save_retrieval_figures(payload, figures)


@cli.command("curves")
@click.option("--report", "report_path", required=True, type=click.Path(), help="indicator1 JSON report.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@_figures_option
def curves_cmd(report_path, out, fmt, figures):
    """Export threshold-sweep series (and optionally figures) from an indicator1 report."""
    with open(report_path, "r", encoding="utf-8") as f:
        audit = json.load(f)
    if audit.get("indicator") != "indicator1":
        raise ValidationError(f"{report_path}: not an indicator1 report")
    report = association_report_from_payload(audit["payload"])
    series = emit_curves(report)
    text = curves_to_csv(series) if fmt == "csv" else json.dumps(curves_to_json(series), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)
    if figures:
        from .figures import save_curve_figures

        save_curve_figures(series, figures)


@cli.command("fixture")
@click.option("--spec", "spec_path", required=True, type=click.Path(), help="Fixture spec JSON.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Overrides the seed in the spec (default 0).")
def fixture_cmd(spec_path, out_dir, seed):
    """Generate deterministic synthetic inputs with known metric values."""
    with open(spec_path, "r", encoding="utf-8") as f:
        spec = json.load(f)
    effective_seed = seed if seed is not None else int(spec.get("seed", 0))
    result = make_fixture(effective_seed, spec, out_dir)
    click.echo(json.dumps({"ok": True, "paths": result["paths"]}, sort_keys=True))


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.UsageError as e:
        e.show(file=sys.stderr)
        sys.exit(1)
    except click.ClickException as e:
        e.show(file=sys.stderr)
        sys.exit(1)
    except ValidationError as e:
        click.echo(json.dumps({"errors": e.violations}, sort_keys=True))
        sys.exit(1)
    except OSError as e:
        click.echo(f"I/O error: {e}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
