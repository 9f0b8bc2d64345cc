"""Training loop, evaluation harness, repeated runs, and the ablation grid.

Training is plain minibatch Adam on the summed cross entropy plus L2 term.
After every epoch the validation AUROC is computed and the best-epoch weights
are kept; there is no early stopping beyond the epoch cap. All shuffles,
parameter draws, and dropout masks flow from the run seed, so two runs with
one seed on one machine produce identical histories.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
import yaml

from .balance import SplitManifest, semi_inductive_split, split_interactions
from .chem.conformer import default_conformer_provider
from .core import Corpus, InteractionRecord, ProteinRecord
from .featurize import (
    MoleculeGraph,
    ProteinGraph,
    build_molecule_graph,
    build_protein_graph,
    fingerprint,
    parse_protein_structure,
)
from .metrics import EvalReport, auroc_score, compute_metrics, summarize_runs
from .models import (
    ModelConfig,
    PairBatch,
    ScopeModel,
    batch_molecules,
    batch_proteins,
    save_checkpoint,
)


@dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 5e-5
    max_epochs: int = 100
    seed: int = 0
    weight_decay: float = 1e-4
    split_seed: int = 0
    split_ratio: tuple[float, float, float] = (0.7, 0.1, 0.2)
    resplit_per_seed: bool = False
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        for name in ("batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


def load_train_config(path: str | Path) -> TrainConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    model_raw = raw.pop("model", {})
    for key in ("node_hidden", "edge_hidden", "cnn_kernels"):
        if key in model_raw:
            model_raw[key] = tuple(model_raw[key])
    if "split_ratio" in raw:
        raw["split_ratio"] = tuple(raw["split_ratio"])
    return TrainConfig(model=ModelConfig(**model_raw), **raw)


class FeatureStore:
    """Memoized per-entity featurization for one corpus.

    Protein centroids come from the record's structure file unless a
    structure_provider hook is injected (synthetic corpora, tests).
    Molecule coordinates come from the conformer provider chain."""

    def __init__(
        self,
        corpus: Corpus,
        conformer_provider=None,
        structure_provider: Callable[[ProteinRecord], np.ndarray] | None = None,
        radius_cutoff: float = 10.0,
        fingerprint_bits: int = 2048,
    ):
        self.corpus = corpus
        self.conformers = conformer_provider or default_conformer_provider()
        self.structure_provider = structure_provider
        self.radius_cutoff = radius_cutoff
        self.fingerprint_bits = fingerprint_bits
        self._protein_graphs: dict[str, ProteinGraph] = {}
        self._molecule_graphs: dict[str, MoleculeGraph] = {}
        self._fingerprints: dict[str, np.ndarray] = {}

    def protein_graph(self, protein_id: str) -> ProteinGraph:
        if protein_id not in self._protein_graphs:
            record = self.corpus.proteins[protein_id]
            if self.structure_provider is not None:
                centroids = self.structure_provider(record)
            elif record.structure_path:
                centroids = parse_protein_structure(record.structure_path, record.sequence)
            else:
                raise ValueError(f"protein {protein_id} has no structure_path and no provider")
            self._protein_graphs[protein_id] = build_protein_graph(
                record.sequence, centroids, self.radius_cutoff
            )
        return self._protein_graphs[protein_id]

    def molecule_graph(self, compound_id: str) -> MoleculeGraph:
        if compound_id not in self._molecule_graphs:
            record = self.corpus.compounds[compound_id]
            conformer = self.conformers.conformer(record.smiles, compound_id)
            self._molecule_graphs[compound_id] = build_molecule_graph(conformer)
        return self._molecule_graphs[compound_id]

    def fingerprint_vector(self, compound_id: str) -> np.ndarray:
        if compound_id not in self._fingerprints:
            bits = fingerprint(self.corpus.compounds[compound_id].smiles, n_bits=self.fingerprint_bits)
            vec = np.zeros(self.fingerprint_bits, dtype=np.float32)
            for b in range(self.fingerprint_bits):
                if bits >> b & 1:
                    vec[b] = 1.0
            self._fingerprints[compound_id] = vec
        return self._fingerprints[compound_id]


def make_pair_batch(
    pairs: Sequence[InteractionRecord],
    store: FeatureStore,
    need_fingerprints: bool = False,
    with_labels: bool = True,
    dtype: torch.dtype | None = None,
) -> PairBatch:
    dtype = dtype or torch.get_default_dtype()
    unique_pids: list[str] = []
    slot_of: dict[str, int] = {}
    for rec in pairs:
        if rec.protein_id not in slot_of:
            slot_of[rec.protein_id] = len(unique_pids)
            unique_pids.append(rec.protein_id)
    molecules = batch_molecules([store.molecule_graph(r.compound_id) for r in pairs])
    proteins = batch_proteins([store.protein_graph(pid) for pid in unique_pids])
    fingerprints = None
    if need_fingerprints:
        fingerprints = torch.as_tensor(
            np.stack([store.fingerprint_vector(r.compound_id) for r in pairs]), dtype=dtype
        )
    labels = (
        torch.as_tensor([r.label for r in pairs], dtype=dtype) if with_labels else None
    )
    if dtype != torch.float32:
        molecules = molecules.to(dtype)
    return PairBatch(
        molecules=molecules,
        proteins=proteins,
        protein_slot=torch.as_tensor([slot_of[r.protein_id] for r in pairs], dtype=torch.long),
        fingerprints=fingerprints,
        labels=labels,
    )


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_auroc: float

    def as_json(self) -> str:
        return json.dumps({"epoch": self.epoch, "loss": self.loss, "val_auroc": self.val_auroc})


@dataclass
class TrainResult:
    model: ScopeModel
    history: list[EpochRecord]
    best_epoch: int
    best_val_auroc: float

    def save_history(self, path: str | Path) -> None:
        Path(path).write_text(
            "".join(rec.as_json() + "\n" for rec in self.history), encoding="utf-8"
        )


def predict_scores(
    model: ScopeModel,
    pairs: Sequence[InteractionRecord],
    store: FeatureStore,
    batch_size: int = 64,
) -> np.ndarray:
    model.eval()
    need_fp = model.config.compound_variant == "fingerprint1d"
    scores = []
    with torch.no_grad():
        for start in range(0, len(pairs), batch_size):
            chunk = pairs[start : start + batch_size]
            batch = make_pair_batch(chunk, store, need_fp, with_labels=False)
            scores.append(model(batch).numpy())
    return np.concatenate(scores) if scores else np.zeros(0)


def evaluate(
    model: ScopeModel,
    pairs: Sequence[InteractionRecord],
    store: FeatureStore,
    batch_size: int = 64,
    seed: int | None = None,
) -> EvalReport:
    scores = predict_scores(model, pairs, store, batch_size)
    labels = np.array([r.label for r in pairs])
    return compute_metrics(scores, labels, seed=seed)


def train(
    splits: dict[str, list[InteractionRecord]],
    store: FeatureStore,
    config: TrainConfig,
) -> TrainResult:
    """Minibatch Adam with per-epoch validation AUROC checkpoint selection."""
    train_pairs = list(splits["train"])
    val_pairs = list(splits.get("val", []))
    if not train_pairs:
        raise ValueError("empty training split")
    if not val_pairs:
        raise ValueError("empty validation split")
    forbidden = {r.compound_id for r in splits.get("test", [])}

    torch.manual_seed(config.seed)
    model = ScopeModel(config.model)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    shuffler = np.random.default_rng(config.seed)
    need_fp = config.model.compound_variant == "fingerprint1d"

    history: list[EpochRecord] = []
    best_state, best_auroc, best_epoch = None, -1.0, -1
    val_labels = np.array([r.label for r in val_pairs])

    for epoch in range(config.max_epochs):
        model.train()
        order = shuffler.permutation(len(train_pairs))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_pairs[i] for i in order[start : start + config.batch_size]]
            overlap = {r.compound_id for r in chunk} & forbidden
            if overlap:
                raise RuntimeError(f"test compounds leaked into a training batch: {sorted(overlap)[:5]}")
            batch = make_pair_batch(chunk, store, need_fp)
            optimizer.zero_grad()
            loss, _ = model.loss(batch, config.weight_decay)
            if not torch.isfinite(loss):
                ids = [(r.protein_id, r.compound_id) for r in chunk]
                raise RuntimeError(f"non-finite loss at epoch {epoch}; last batch pairs: {ids[:8]}")
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())

        val_scores = predict_scores(model, val_pairs, store, config.batch_size)
        val_auroc = auroc_score(val_scores, val_labels)
        history.append(EpochRecord(epoch, epoch_loss, val_auroc))
        # >= : among tied argmax epochs keep the most-trained one
        if val_auroc >= best_auroc:
            best_auroc = val_auroc
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    return TrainResult(model, history, best_epoch, best_auroc)


def run_single(
    corpus: Corpus,
    store: FeatureStore,
    config: TrainConfig,
    manifest: SplitManifest | None = None,
) -> tuple[TrainResult, EvalReport, SplitManifest]:
    manifest = manifest or semi_inductive_split(corpus, config.split_seed, config.split_ratio)
    splits = split_interactions(corpus, manifest)
    result = train(splits, store, config)
    report = evaluate(result.model, splits["test"], store, config.batch_size, seed=config.seed)
    return result, report, manifest


def run_repeats(
    corpus: Corpus,
    store: FeatureStore,
    config: TrainConfig,
    n_runs: int = 5,
) -> tuple[list[EvalReport], dict[str, str]]:
    """Independent runs over seeds seed..seed+n-1; summary is mean±std."""
    if n_runs < 2:
        raise ValueError("need at least two runs to report a spread")
    manifest = None
    if not config.resplit_per_seed:
        manifest = semi_inductive_split(corpus, config.split_seed, config.split_ratio)
    reports = []
    for k in range(n_runs):
        run_cfg = replace(config, seed=config.seed + k)
        if config.resplit_per_seed:
            run_cfg = replace(run_cfg, split_seed=config.split_seed + k)
            _, report, _ = run_single(corpus, store, run_cfg)
        else:
            _, report, _ = run_single(corpus, store, run_cfg, manifest)
        reports.append(report)
    return reports, summarize_runs(reports)


# The seven ablation rows: three compound-encoding variants, two protein
# variants, the attention-free backbone, then the full model.
ABLATION_ROWS = [
    ("hgnn3d", "fingerprint1d", "ban"),
    ("hgnn3d", "graph2d", "ban"),
    ("hgnn3d", "gvp3d_unpooled", "ban"),
    ("onehot1d", "gvp3d_pooled", "ban"),
    ("cnn1d", "gvp3d_pooled", "ban"),
    ("hgnn3d", "gvp3d_pooled", "mlp"),
    ("hgnn3d", "gvp3d_pooled", "ban"),
]


@dataclass
class AblationRow:
    label: str
    protein_variant: str
    compound_variant: str
    backbone: str
    summary: dict[str, str]
    reports: list[EvalReport]


def ablation_grid(
    corpus: Corpus,
    store: FeatureStore,
    base_config: TrainConfig,
    n_runs: int = 5,
) -> list[AblationRow]:
    rows = []
    for protein_variant, compound_variant, backbone in ABLATION_ROWS:
        model_cfg = replace(
            base_config.model,
            protein_variant=protein_variant,
            compound_variant=compound_variant,
            backbone=backbone,
        )
        run_cfg = replace(base_config, model=model_cfg)
        reports, summary = run_repeats(corpus, store, run_cfg, n_runs)
        rows.append(
            AblationRow(model_cfg.label(), protein_variant, compound_variant, backbone, summary, reports)
        )
    return rows


def ablation_table(rows: list[AblationRow]) -> str:
    lines = ["protein_encoding\tcompound_encoding\tbackbone\tauroc\tauprc\tf1"]
    from .models import VARIANT_LABELS

    for row in rows:
        lines.append(
            "\t".join(
                [
                    VARIANT_LABELS[row.protein_variant],
                    VARIANT_LABELS[row.compound_variant],
                    VARIANT_LABELS[row.backbone],
                    row.summary["auroc"],
                    row.summary["auprc"],
                    row.summary["f1"],
                ]
            )
        )
    return "\n".join(lines) + "\n"


def save_run(
    result: TrainResult,
    report: EvalReport,
    manifest: SplitManifest,
    config: TrainConfig,
    out_dir: str | Path,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = out / "checkpoint.pt"
    save_checkpoint(
        result.model,
        checkpoint,
        seed=config.seed,
        best_epoch=result.best_epoch,
        best_val_auroc=result.best_val_auroc,
    )
    result.save_history(out / "history.jsonl")
    manifest.save(out / "split.tsv")
    (out / "metrics.json").write_text(json.dumps(report.as_dict(), indent=2), encoding="utf-8")
    (out / "metrics.tsv").write_text(report.as_tsv(), encoding="utf-8")
    return checkpoint
