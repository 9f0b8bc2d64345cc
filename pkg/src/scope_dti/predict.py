"""All-target ensemble prediction: pair one query compound against every
protein in the library, score with each checkpoint, and rank by mean score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .chem.conformer import ConformerError
from .core import Corpus
from .featurize import build_molecule_graph
from .models import PairBatch, ScopeModel, batch_molecules, batch_proteins
from .training import FeatureStore


@dataclass(frozen=True)
class PredictionRow:
    protein_id: str
    family: str
    score: float  # arithmetic mean of per_model_scores
    per_model_scores: tuple[float, ...]
    rank: int


def _score_library(
    model: ScopeModel,
    molecule_graph,
    fingerprint_vec: np.ndarray | None,
    store: FeatureStore,
    protein_ids: list[str],
    batch_size: int = 16,
) -> np.ndarray:
    model.eval()
    scores = []
    with torch.no_grad():
        for start in range(0, len(protein_ids), batch_size):
            chunk = protein_ids[start : start + batch_size]
            proteins = batch_proteins([store.protein_graph(pid) for pid in chunk])
            molecules = batch_molecules([molecule_graph] * len(chunk))
            fingerprints = None
            if fingerprint_vec is not None:
                fingerprints = torch.as_tensor(
                    np.tile(fingerprint_vec, (len(chunk), 1)), dtype=torch.get_default_dtype()
                )
            batch = PairBatch(
                molecules=molecules,
                proteins=proteins,
                protein_slot=torch.arange(len(chunk), dtype=torch.long),
                fingerprints=fingerprints,
            )
            scores.append(model(batch).numpy())
    return np.concatenate(scores)


def predict_targets(
    smiles: str,
    models: list[ScopeModel],
    corpus: Corpus,
    store: FeatureStore,
    top_k: int | None = None,
    batch_size: int = 16,
) -> list[PredictionRow]:
    """Rank every library protein by the ensemble mean probability.

    The compound is featurized once; ties on the mean break by protein_id so
    rankings are a deterministic function of (smiles, checkpoints, library)."""
    if not models:
        raise ValueError("need at least one model checkpoint")
    try:
        conformer = store.conformers.conformer(smiles, None)
    except ConformerError:
        raise
    molecule_graph = build_molecule_graph(conformer)
    need_fp = any(m.config.compound_variant == "fingerprint1d" for m in models)
    fingerprint_vec = None
    if need_fp:
        from .featurize import fingerprint

        bits = fingerprint(smiles)
        n_bits = models[0].config.fingerprint_bits
        fingerprint_vec = np.zeros(n_bits, dtype=np.float32)
        for b in range(n_bits):
            if bits >> b & 1:
                fingerprint_vec[b] = 1.0

    protein_ids = sorted(corpus.proteins)
    per_model = np.stack(
        [
            _score_library(m, molecule_graph, fingerprint_vec, store, protein_ids, batch_size)
            for m in models
        ]
    )  # (n_models, n_proteins)
    means = per_model.mean(axis=0)

    order = sorted(range(len(protein_ids)), key=lambda i: (-means[i], protein_ids[i]))
    rows = [
        PredictionRow(
            protein_id=protein_ids[i],
            family=corpus.proteins[protein_ids[i]].family.value,
            score=float(means[i]),
            per_model_scores=tuple(float(s) for s in per_model[:, i]),
            rank=rank + 1,
        )
        for rank, i in enumerate(order)
    ]
    if top_k is not None:
        rows = rows[:top_k]
    return rows
