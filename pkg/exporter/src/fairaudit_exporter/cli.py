"""Command-line entry point: export-emb and export-preds."""

from __future__ import annotations

import sys

import click

from .export import ExportError, export_embeddings, export_predictions, load_array, read_ids


@click.group()
def cli():
    """Export model outputs into the audit toolkit's interchange formats."""


@cli.command("export-emb")
@click.option("--input", "input_path", required=True, type=click.Path(), help="Array file (.npy/.npz/.csv/.txt/.tsv).")
@click.option("--npz-key", default=None, help="Array name inside a .npz bundle.")
@click.option("--ids", "ids_path", required=True, type=click.Path(), help="Text file, one image id per line.")
@click.option("--out-emb", required=True, type=click.Path())
@click.option("--out-ids", required=True, type=click.Path())
def export_emb_cmd(input_path, npz_key, ids_path, out_emb, out_ids):
    """Convert a 2-D array dump to the FAIREMB1 embedding container."""
    array = load_array(input_path, npz_key)
    ids = read_ids(ids_path)
    export_embeddings(array, ids, out_emb, out_ids)
    click.echo(f"wrote {array.shape[0]} rows (d={array.shape[1]}) to {out_emb}")


@cli.command("export-preds")
@click.option("--scores", "scores_path", required=True, type=click.Path(), help="Per-image score matrix (.npy/.npz/.csv/.txt/.tsv).")
@click.option("--npz-key", default=None)
@click.option("--ids", "ids_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path(), help="Label vocabulary, one label per line.")
@click.option("--top-k", default=5, show_default=True)
@click.option("--softmax", "apply_softmax", is_flag=True, help="Scores are raw logits; convert to probabilities.")
@click.option("--out", required=True, type=click.Path())
def export_preds_cmd(scores_path, npz_key, ids_path, vocab_path, top_k, apply_softmax, out):
    """Convert a score matrix to top-k predictions JSON lines."""
    scores = load_array(scores_path, npz_key)
    ids = read_ids(ids_path)
    vocab = read_ids(vocab_path)
    export_predictions(scores, ids, vocab, out, top_k=top_k, apply_softmax=apply_softmax)
    click.echo(f"wrote {scores.shape[0]} records to {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.ClickException as e:
        e.show(file=sys.stderr)
        sys.exit(1)
    except ExportError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    except OSError as e:
        click.echo(f"I/O error: {e}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
