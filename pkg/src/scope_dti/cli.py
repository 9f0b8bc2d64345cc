"""`scope` command line: curation through serving.

Pipeline commands read/write corpus directories (three TSVs). Search/predict
emit exactly the JSON payloads the HTTP API returns for the same inputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from .balance import balance_filter, load_manifest, ratio_histogram, semi_inductive_split, split_interactions
from .core import CompoundRecord, Corpus, ProteinRecord, load_corpus, save_corpus, canonicalize_ids
from .curation import (
    DEFAULT_LABEL_RULES,
    apply_label_rules,
    corpus_stats,
    ingest_source,
    load_label_rules,
    merge_sources,
)
from .export import export_dataset
from .service import ServiceConfig, ServiceState, serve as run_server


def _structure_provider(synthetic_seed: int | None):
    if synthetic_seed is None:
        return None
    from .synthetic import SyntheticStructureProvider

    return SyntheticStructureProvider(synthetic_seed)


def _load_store(corpus, conformer_dir, synthetic_seed, fingerprint_bits=2048):
    from .chem.conformer import default_conformer_provider
    from .training import FeatureStore

    return FeatureStore(
        corpus,
        conformer_provider=default_conformer_provider(conformer_dir),
        structure_provider=_structure_provider(synthetic_seed),
        fingerprint_bits=fingerprint_bits,
    )


@click.group()
def main():
    """SCOPE drug-target interaction toolkit."""


@main.command()
@click.option("--sources", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--rules", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--schema", type=click.Path(exists=True, dir_okay=False), required=True,
              help="YAML: default schema map and optional per-file overrides")
@click.option("--aliases", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TSV local_id<TAB>canonical_id")
@click.option("--allowlist", type=click.Path(exists=True, dir_okay=False), default=None,
              help="one canonical protein id per line")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def curate(sources, rules, schema, aliases, allowlist, out):
    """Ingest source tables, label, merge conservatively, write a corpus dir.

    The sources directory must contain proteins.tsv and compounds.tsv
    sidecars plus any number of evidence tables."""
    sources = Path(sources)
    schema_cfg = yaml.safe_load(Path(schema).read_text(encoding="utf-8")) or {}
    default_map = schema_cfg.get("default", {})
    per_file = schema_cfg.get("sources", {})
    label_rules = load_label_rules(rules) if rules else DEFAULT_LABEL_RULES

    sidecar = {"proteins.tsv", "compounds.tsv"}
    records = []
    for path in sorted(sources.iterdir()):
        if path.name in sidecar or path.suffix.lower() not in (".tsv", ".csv", ".tab"):
            continue
        schema_map = per_file.get(path.name, default_map)
        table = ingest_source(path, schema_map)
        labeled, report = apply_label_rules(table, label_rules)
        records.extend(labeled)
        click.echo(
            f"{path.name}: {len(labeled)} labeled, {table.skipped} malformed, "
            f"{report.indeterminate_dropped} indeterminate, {report.no_rule_dropped} no-rule"
        )

    from .core import _read_tsv, PROTEIN_COLUMNS, COMPOUND_COLUMNS
    from .core import Family

    proteins = [
        ProteinRecord(r["protein_id"], r["sequence"], Family(r["family"]), r["structure_path"] or None)
        for r in _read_tsv(sources / "proteins.tsv", PROTEIN_COLUMNS)
    ]
    compounds = [
        CompoundRecord(r["compound_id"], r["smiles"], r["conformer_path"] or None)
        for r in _read_tsv(sources / "compounds.tsv", COMPOUND_COLUMNS)
    ]
    corpus = merge_sources(records, proteins, compounds)
    if aliases:
        alias_pairs = [
            tuple(line.split("\t"))
            for line in Path(aliases).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        allow = None
        if allowlist:
            allow = [l.strip() for l in Path(allowlist).read_text(encoding="utf-8").splitlines() if l.strip()]
        corpus, report = canonicalize_ids(corpus, alias_pairs, allow)
        click.echo(
            f"canonicalized: dropped {report.dropped_proteins} proteins, "
            f"{report.dropped_compounds} compounds, {report.dropped_interactions} interactions"
        )
    save_corpus(corpus, out)
    click.echo(corpus_stats(corpus).as_table(), nl=False)


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-interactions", type=int, default=4, show_default=True)
def balance(corpus_dir, out, seed, min_interactions):
    """Filter target-level class imbalance into the 25-75% band."""
    corpus = load_corpus(corpus_dir)
    before = ratio_histogram(corpus)
    filtered, report = balance_filter(corpus, seed=seed, min_interactions=min_interactions)
    after = ratio_histogram(filtered)
    out = Path(out)
    save_corpus(filtered, out)
    (out / "filter_report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    hist_lines = ["bin_lo\tbin_hi\tbefore\tafter"]
    for (lo, hi), b, a in zip(before.edges(), before.counts, after.counts):
        hist_lines.append(f"{lo:.2f}\t{hi:.2f}\t{b}\t{a}")
    (out / "ratio_histogram.tsv").write_text("\n".join(hist_lines) + "\n", encoding="utf-8")
    click.echo(
        f"removed {report.removed_interactions} interactions, dropped "
        f"{len(report.dropped_proteins)} proteins; corpus written to {out}"
    )


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--ratio", nargs=3, type=float, default=(0.7, 0.1, 0.2), show_default=True)
def split(corpus_dir, seed, out, ratio):
    """Deterministic semi-inductive compound split."""
    corpus = load_corpus(corpus_dir)
    manifest = semi_inductive_split(corpus, seed, tuple(ratio))
    manifest.save(out)
    counts = manifest.counts()
    click.echo(
        f"train {counts['train']} / val {counts['val']} / test {counts['test']} compounds"
        + (f"; moved for containment: {len(manifest.moved_for_containment)}" if manifest.moved_for_containment else "")
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--conformer-dir", type=click.Path(file_okay=False), default=None)
@click.option("--synthetic-structures", type=int, default=None,
              help="seed for synthetic residue traces instead of PDB files")
def train(config_path, corpus_dir, out, conformer_dir, synthetic_structures):
    """Train one model; writes checkpoint.pt, history.jsonl, split.tsv, metrics.json."""
    from .training import load_train_config, run_single, save_run

    synthetic_seed = synthetic_structures
    config = load_train_config(config_path)
    corpus = load_corpus(corpus_dir)
    store = _load_store(corpus, conformer_dir, synthetic_seed, config.model.fingerprint_bits)
    result, report, manifest = run_single(corpus, store, config)
    checkpoint = save_run(result, report, manifest, config, out)
    click.echo(f"best epoch {result.best_epoch} (val AUROC {result.best_val_auroc:.3f})")
    click.echo(json.dumps(report.as_dict(), indent=2))
    click.echo(f"checkpoint: {checkpoint}")


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--split", "split_name", type=click.Choice(["train", "val", "test"]), default="test")
@click.option("--conformer-dir", type=click.Path(file_okay=False), default=None)
@click.option("--synthetic-structures", type=int, default=None)
def eval_cmd(checkpoint, corpus_dir, manifest_path, split_name, conformer_dir, synthetic_structures):
    """Evaluate a checkpoint on one split of a corpus."""
    from .models import load_checkpoint
    from .training import evaluate

    corpus = load_corpus(corpus_dir)
    model, _ = load_checkpoint(checkpoint)
    manifest = load_manifest(manifest_path)
    pairs = split_interactions(corpus, manifest)[split_name]
    store = _load_store(corpus, conformer_dir, synthetic_structures, model.config.fingerprint_bits)
    report = evaluate(model, pairs, store)
    click.echo(json.dumps(report.as_dict(), indent=2))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--runs", type=int, default=5, show_default=True)
@click.option("--conformer-dir", type=click.Path(file_okay=False), default=None)
@click.option("--synthetic-structures", type=int, default=None)
def ablation(config_path, corpus_dir, out, runs, conformer_dir, synthetic_structures):
    """Run the 7-row encoder/backbone ablation grid."""
    from .training import ablation_grid, ablation_table, load_train_config

    config = load_train_config(config_path)
    corpus = load_corpus(corpus_dir)
    store = _load_store(corpus, conformer_dir, synthetic_structures, config.model.fingerprint_bits)
    rows = ablation_grid(corpus, store, config, n_runs=runs)
    table = ablation_table(rows)
    Path(out).write_text(table, encoding="utf-8")
    click.echo(table, nl=False)


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.argument("smiles")
def search(corpus_dir, smiles):
    """Similarity search (> 0.9 Tanimoto); JSON identical to POST /api/v1/search."""
    state = ServiceState(load_corpus(corpus_dir))
    try:
        click.echo(json.dumps(state.search_payload(smiles), indent=2))
    except Exception as exc:  # parse diagnostics go to stderr, like the API's 400
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--checkpoint", "checkpoints", type=click.Path(exists=True, dir_okay=False),
              multiple=True, required=True)
@click.option("--top-k", type=int, default=None)
@click.option("--conformer-dir", type=click.Path(file_okay=False), default=None)
@click.option("--synthetic-structures", type=int, default=None)
@click.argument("smiles")
def predict(corpus_dir, checkpoints, top_k, conformer_dir, synthetic_structures, smiles):
    """Ensemble all-target prediction; JSON identical to POST /api/v1/predict."""
    from .models import load_checkpoint

    corpus = load_corpus(corpus_dir)
    models = [load_checkpoint(p)[0] for p in checkpoints]
    store = _load_store(
        corpus, conformer_dir, synthetic_structures, models[0].config.fingerprint_bits
    )
    state = ServiceState(corpus, models, store)
    try:
        click.echo(json.dumps(state.predict_payload(smiles, top_k), indent=2))
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--family", default=None)
@click.option("--split", "split_name", default=None)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False), default=None)
def export(corpus_dir, out, family, split_name, manifest_path):
    """Export the corpus as a gzip TSV archive."""
    corpus = load_corpus(corpus_dir)
    manifest = load_manifest(manifest_path) if manifest_path else None
    payload = export_dataset(corpus, family=family, split=split_name, manifest=manifest, out_path=out)
    click.echo(f"{out}: {len(payload)} bytes")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
def stats(corpus_dir):
    """Corpus statistics table."""
    click.echo(corpus_stats(load_corpus(corpus_dir)).as_table(), nl=False)


@main.command("demo-corpus")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--proteins", type=int, default=8, show_default=True)
@click.option("--compounds", type=int, default=40, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def demo_corpus(out, proteins, compounds, seed):
    """Write a synthetic corpus (for demos and pipeline dry runs)."""
    from .synthetic import synthetic_corpus

    corpus = synthetic_corpus(n_proteins=proteins, n_compounds=compounds, seed=seed)
    save_corpus(corpus, out)
    click.echo(corpus_stats(corpus).as_table(), nl=False)
    click.echo(f"\nsynthetic corpus written to {out} (use --synthetic-structures {seed} downstream)")


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--protein", "protein_ids", multiple=True, help="restrict to these proteins")
@click.option("--plot/--no-plot", default=False)
@click.option("--conformer-dir", type=click.Path(file_okay=False), default=None)
@click.option("--synthetic-structures", type=int, default=None)
def interpret(checkpoint, corpus_dir, manifest_path, out, protein_ids, plot, conformer_dir, synthetic_structures):
    """Attention clustering per protein + accuracy-vs-count curve."""
    from .interpret import accuracy_vs_count, cluster_protein, extract_attention
    from .models import load_checkpoint
    from .training import predict_scores

    corpus = load_corpus(corpus_dir)
    model, _ = load_checkpoint(checkpoint)
    manifest = load_manifest(manifest_path)
    splits = split_interactions(corpus, manifest)
    store = _load_store(corpus, conformer_dir, synthetic_structures, model.config.fingerprint_bits)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    test_pairs = splits["test"]
    scores = predict_scores(model, test_pairs, store)
    train_counts: dict[str, int] = {}
    for rec in splits["train"]:
        train_counts[rec.protein_id] = train_counts.get(rec.protein_id, 0) + 1
    curve = accuracy_vs_count(test_pairs, scores, train_counts)
    (out / "accuracy_vs_count.tsv").write_text(curve.to_tsv(), encoding="utf-8")

    wanted = set(protein_ids) if protein_ids else None
    by_protein: dict[str, list] = {}
    vectors = extract_attention(model, test_pairs, store)
    for vec in vectors:
        if wanted is None or vec.protein_id in wanted:
            by_protein.setdefault(vec.protein_id, []).append(vec)
    for pid, vecs in sorted(by_protein.items()):
        assignment = cluster_protein(vecs)
        lines = ["compound_id\tcluster\tx\ty\tpredicted_p\tlabel"]
        for row in assignment.to_rows(vecs):
            lines.append(
                f"{row['compound_id']}\t{row['cluster']}\t{row['x']:.6f}\t{row['y']:.6f}"
                f"\t{row['predicted_p']:.6f}\t{row['label']}"
            )
        (out / f"clusters_{pid}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if plot:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, ax = plt.subplots(figsize=(5, 4))
            sc = ax.scatter(
                assignment.coordinates[:, 0],
                assignment.coordinates[:, 1],
                c=assignment.cluster_ids,
                cmap="tab10",
                s=14,
            )
            ax.set_title(pid)
            fig.colorbar(sc, label="cluster")
            fig.savefig(out / f"clusters_{pid}.png", dpi=150, bbox_inches="tight")
            plt.close(fig)
    click.echo(f"wrote {len(by_protein)} cluster tables and the accuracy curve to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
def serve(config_path):
    """Start the HTTP service."""
    run_server(ServiceConfig.load(config_path))


if __name__ == "__main__":
    main()
