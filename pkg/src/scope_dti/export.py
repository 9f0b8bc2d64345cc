"""Deterministic dataset export: gzip tar of the corpus TSVs plus a manifest.

All archive metadata (mtimes, owners, ordering) is pinned so an identical
corpus always exports byte-identical bytes.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import tarfile
from pathlib import Path

from .balance import SplitManifest
from .core import (
    Corpus,
    CorpusError,
    Family,
    compounds_to_tsv,
    interactions_to_tsv,
    proteins_to_tsv,
)
from .curation import corpus_stats

EXPORT_FORMAT_VERSION = 1


def corpus_hash(corpus: Corpus) -> str:
    h = hashlib.blake2b(digest_size=16)
    order = sorted(corpus.interactions, key=lambda r: (r.protein_id, r.compound_id, r.source))
    h.update(interactions_to_tsv(order).encode())
    h.update(proteins_to_tsv(sorted(corpus.proteins.values(), key=lambda p: p.protein_id)).encode())
    h.update(compounds_to_tsv(sorted(corpus.compounds.values(), key=lambda c: c.compound_id)).encode())
    return h.hexdigest()


def filter_corpus(
    corpus: Corpus,
    family: str | None = None,
    split: str | None = None,
    manifest: SplitManifest | None = None,
) -> Corpus:
    if family is not None:
        try:
            family_enum = Family(family)
        except ValueError as exc:
            raise CorpusError(
                f"unknown family {family!r}; valid: {[f.value for f in Family]}"
            ) from exc
        keep_pids = {p for p, rec in corpus.proteins.items() if rec.family == family_enum}
    else:
        keep_pids = set(corpus.proteins)
    if split is not None:
        if manifest is None:
            raise CorpusError("split filter needs a split manifest")
        keep_cids = {c for c, s in manifest.assignment.items() if s == split}
    else:
        keep_cids = set(corpus.compounds)
    interactions = tuple(
        r for r in corpus.interactions if r.protein_id in keep_pids and r.compound_id in keep_cids
    )
    return Corpus(
        proteins={p: rec for p, rec in corpus.proteins.items() if p in keep_pids},
        compounds={c: rec for c, rec in corpus.compounds.items() if c in keep_cids},
        interactions=interactions,
    )


def export_dataset(
    corpus: Corpus,
    family: str | None = None,
    split: str | None = None,
    manifest: SplitManifest | None = None,
    out_path: str | Path | None = None,
) -> bytes:
    """Gzip tar archive: interactions.tsv, proteins.tsv, compounds.tsv,
    manifest.json (stats + format version). Byte-identical per corpus."""
    filtered = filter_corpus(corpus, family, split, manifest)
    stats = corpus_stats(filtered)
    files = {
        "interactions.tsv": interactions_to_tsv(
            sorted(filtered.interactions, key=lambda r: (r.protein_id, r.compound_id, r.source))
        ).encode(),
        "proteins.tsv": proteins_to_tsv(
            sorted(filtered.proteins.values(), key=lambda p: p.protein_id)
        ).encode(),
        "compounds.tsv": compounds_to_tsv(
            sorted(filtered.compounds.values(), key=lambda c: c.compound_id)
        ).encode(),
        "manifest.json": json.dumps(
            {
                "format_version": EXPORT_FORMAT_VERSION,
                "filter": {"family": family, "split": split},
                "stats": {
                    "compounds": stats.n_compounds,
                    "targets": stats.n_targets,
                    "interactions": stats.n_interactions,
                    "positive_interactions": stats.n_positive,
                    "family_breakdown": dict(sorted(stats.family_breakdown.items())),
                },
                "corpus_hash": corpus_hash(filtered),
            },
            indent=2,
            sort_keys=True,
        ).encode(),
    }
    tar_buf = io.BytesIO()
    with tarfile.open(fileobj=tar_buf, mode="w") as tar:
        for name in sorted(files):
            info = tarfile.TarInfo(name=name)
            info.size = len(files[name])
            info.mtime = 0
            info.uid = info.gid = 0
            info.uname = info.gname = ""
            tar.addfile(info, io.BytesIO(files[name]))
    gz_buf = io.BytesIO()
    with gzip.GzipFile(fileobj=gz_buf, mode="wb", mtime=0) as gz:
        gz.write(tar_buf.getvalue())
    payload = gz_buf.getvalue()
    if out_path is not None:
        Path(out_path).write_bytes(payload)
    return payload
