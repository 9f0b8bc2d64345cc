#!/usr/bin/env python3
"""Build the fixture corpus + checkpoints + service config for UI acceptance."""

import sys
from pathlib import Path

import numpy as np
import torch
import yaml

from scope_dti.core import CompoundRecord, Corpus, Family, InteractionRecord, ProteinRecord, save_corpus
from scope_dti.models import ModelConfig, ScopeModel, save_checkpoint

SMILES = [
    "CCO", "CCC", "CCCC", "CCN", "CCOC", "CC(C)O", "c1ccccc1", "c1ccccc1O",
    "CC(=O)O", "CCS", "CCCl", "c1ccncc1",
]


def main(out_dir: str, port: int) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    proteins = [
        ProteinRecord(f"P{i:02d}", "ACDEFGHIKLMNPQRSTVWY", list(Family)[i % 5])
        for i in range(12)
    ]
    compounds = [CompoundRecord(f"C{i:02d}", s) for i, s in enumerate(SMILES)]
    rng = np.random.default_rng(0)
    interactions = [
        InteractionRecord(p.protein_id, c.compound_id, int(rng.random() < 0.5), "fixture")
        for p in proteins
        for c in compounds[:8]
    ]
    corpus = Corpus.build(proteins, compounds, interactions)
    save_corpus(corpus, out / "corpus")

    config = ModelConfig(
        protein_dim=16, protein_layers=2, node_hidden=(12, 4), edge_hidden=(6, 1),
        gvp_layers=2, dropout=0.0, latent_dim=9, n_heads=2, pool_window=3, decoder_hidden=8,
    )
    checkpoints = []
    for seed in (0, 1):
        torch.manual_seed(seed)
        model = ScopeModel(config)
        model.eval()
        path = out / f"model{seed}.pt"
        save_checkpoint(model, path, seed=seed)
        checkpoints.append(str(path))

    service_config = {
        "corpus_dir": str(out / "corpus"),
        "checkpoints": checkpoints,
        "host": "127.0.0.1",
        "port": port,
        "synthetic_structures": 0,
    }
    (out / "service.yaml").write_text(yaml.safe_dump(service_config), encoding="utf-8")
    print(out / "service.yaml")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "/tmp/scope-ui-fixtures",
         int(sys.argv[2]) if len(sys.argv) > 2 else 8765)
