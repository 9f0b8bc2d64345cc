"""Attention-space interpretation: per-pair residue attention profiles,
seeded UMAP projection with OPTICS clustering per protein, and the
accuracy-versus-interaction-count curve.

The interaction embedding for a pair is the head-averaged, drug-row-averaged
attention mass per residue, L1-normalized so molecule size does not dominate
the projection. (Alternate embeddings — the joint vector before or after sum
pooling — are selectable but not the default.)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from scipy.optimize import curve_fit
from sklearn.cluster import OPTICS
from sklearn.neighbors import NearestNeighbors

from .core import InteractionRecord
from .metrics import compute_metrics
from .models import ScopeModel
from .models.heads import sum_pool
from .training import FeatureStore, make_pair_batch


@dataclass(frozen=True)
class AttentionVector:
    protein_id: str
    compound_id: str
    vector: np.ndarray  # length = protein residue count (attention embedding)
    predicted_p: float
    label: int


def extract_attention(
    model: ScopeModel,
    pairs: Sequence[InteractionRecord],
    store: FeatureStore,
    batch_size: int = 64,
    embedding_kind: str = "attention",
) -> list[AttentionVector]:
    """Per-pair interaction embeddings from the attention head.

    embedding_kind: "attention" (residue profile, default), "joint" (the
    K-dim bilinear vector), or "pooled" (after sum pooling)."""
    if model.ban is None:
        raise ValueError("attention extraction needs a BAN backbone")
    if embedding_kind not in ("attention", "joint", "pooled"):
        raise ValueError(f"unknown embedding kind {embedding_kind!r}")
    model.eval()
    need_fp = model.config.compound_variant == "fingerprint1d"
    out: list[AttentionVector] = []
    with torch.no_grad():
        for start in range(0, len(pairs), batch_size):
            chunk = pairs[start : start + batch_size]
            batch = make_pair_batch(chunk, store, need_fp, with_labels=False)
            probs, att, d_mask, p_mask = model(batch, return_attention=True)
            head_avg = att.mean(dim=1)  # (B, N, M)
            for i, rec in enumerate(chunk):
                n_rows = int(d_mask[i].sum())
                m_res = int(p_mask[i].sum())
                if embedding_kind == "attention":
                    vec = head_avg[i, :n_rows, :m_res].mean(dim=0).numpy()
                else:
                    joint = model.ban(
                        *_single_pair_inputs(model, batch, i), return_attention=False
                    )
                    vec = (
                        joint.squeeze(0)
                        if embedding_kind == "joint"
                        else sum_pool(joint, model.config.pool_window).squeeze(0)
                    ).numpy()
                out.append(
                    AttentionVector(
                        protein_id=rec.protein_id,
                        compound_id=rec.compound_id,
                        vector=np.asarray(vec, dtype=np.float64),
                        predicted_p=float(probs[i]),
                        label=rec.label,
                    )
                )
    return out


def export_attention_maps(
    model: ScopeModel,
    pairs: Sequence[InteractionRecord],
    store: FeatureStore,
    out_dir,
    batch_size: int = 64,
) -> list:
    """One dense TSV per pair: rows are drug rows, columns are residues;
    values are head-averaged attention scores."""
    from pathlib import Path

    if model.ban is None:
        raise ValueError("attention export needs a BAN backbone")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    need_fp = model.config.compound_variant == "fingerprint1d"
    written = []
    with torch.no_grad():
        for start in range(0, len(pairs), batch_size):
            chunk = pairs[start : start + batch_size]
            batch = make_pair_batch(chunk, store, need_fp, with_labels=False)
            _, att, d_mask, p_mask = model(batch, return_attention=True)
            head_avg = att.mean(dim=1)
            for i, rec in enumerate(chunk):
                block = head_avg[i, : int(d_mask[i].sum()), : int(p_mask[i].sum())].numpy()
                path = out_dir / f"attention_{rec.protein_id}_{rec.compound_id}.tsv"
                np.savetxt(path, block, delimiter="\t", fmt="%.8e")
                written.append(path)
    return written


def _single_pair_inputs(model: ScopeModel, batch, i: int):
    h_p_all, p_mask_all = model._encode_proteins(batch.proteins)
    h_p = h_p_all[batch.protein_slot[i] : batch.protein_slot[i] + 1]
    p_mask = p_mask_all[batch.protein_slot[i] : batch.protein_slot[i] + 1]
    h_d_all, d_mask_all = model._encode_compounds(batch)
    return (
        h_d_all[i : i + 1],
        h_p,
        d_mask_all[i : i + 1].to(h_d_all.dtype),
        p_mask.to(h_p.dtype),
    )


# ---------------------------------------------------------------------------
# Compact seeded UMAP (kNN -> fuzzy graph -> SGD layout)
# ---------------------------------------------------------------------------


@dataclass
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_components: int = 2
    n_epochs: int = 200
    negative_samples: int = 5
    learning_rate: float = 1.0
    seed: int = 0


def _smooth_knn_weights(dists: np.ndarray, k: int) -> np.ndarray:
    """Per-point bandwidths such that the effective neighbor count is log2(k)."""
    n = dists.shape[0]
    rho = dists[:, 0]
    target = np.log2(k)
    weights = np.zeros_like(dists)
    for i in range(n):
        lo, hi = 0.0, np.inf
        mid = 1.0
        d = np.maximum(dists[i] - rho[i], 0.0)
        for _ in range(64):
            val = np.exp(-d / mid).sum()
            if abs(val - target) < 1e-5:
                break
            if val > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        weights[i] = np.exp(-d / mid)
    return weights


def _fit_curve_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    xs = np.linspace(0.0, 3.0 * spread, 300)
    ys = np.where(xs < min_dist, 1.0, np.exp(-(xs - min_dist) / spread))
    (a, b), _ = curve_fit(lambda x, a, b: 1.0 / (1.0 + a * x ** (2.0 * b)), xs, ys, maxfev=20000)
    return float(a), float(b)


def umap_project(x: np.ndarray, params: UmapParams | None = None) -> np.ndarray:
    """Seeded 2-D (or n-D) layout of the fuzzy neighborhood graph of x."""
    params = params or UmapParams()
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    k = min(params.n_neighbors, n - 1)
    if n <= params.n_components + 1 or k < 1:
        return np.zeros((n, params.n_components))

    nbrs = NearestNeighbors(n_neighbors=k + 1).fit(x)
    dists, idx = nbrs.kneighbors(x)
    dists, idx = dists[:, 1:], idx[:, 1:]  # drop self
    w = _smooth_knn_weights(dists, k)

    # fuzzy union: p + p^T - p * p^T over the sparse entries
    entries: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j_pos in range(k):
            entries[(i, int(idx[i, j_pos]))] = float(w[i, j_pos])
    sym: dict[tuple[int, int], float] = {}
    for (i, j), pij in entries.items():
        pji = entries.get((j, i), 0.0)
        if (j, i) in sym:
            continue
        sym[(i, j)] = pij + pji - pij * pji
    heads = np.array([e[0] for e in sym], dtype=np.int64)
    tails = np.array([e[1] for e in sym], dtype=np.int64)
    weights = np.array(list(sym.values()), dtype=np.float64)

    # PCA init (deterministic), scaled to a modest extent
    centered = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    emb = centered @ vt[: params.n_components].T
    span = np.abs(emb).max() or 1.0
    emb = emb / span * 10.0

    a, b = _fit_curve_params(params.min_dist)
    rng = np.random.default_rng(params.seed)
    for epoch in range(params.n_epochs):
        alpha = params.learning_rate * (1.0 - epoch / params.n_epochs)
        keep = rng.random(len(weights)) < weights  # sample edges by membership
        hi, ti = heads[keep], tails[keep]
        delta = emb[hi] - emb[ti]
        d2 = (delta**2).sum(axis=1)
        live = d2 > 0.0
        coef = np.zeros_like(d2)
        coef[live] = np.clip(
            -2.0 * a * b * d2[live] ** (b - 1.0) / (1.0 + a * d2[live] ** b), -4.0, 4.0
        )
        step = alpha * coef[:, None] * delta
        np.add.at(emb, hi, step)
        np.add.at(emb, ti, -step)

        n_edges = int(keep.sum())
        if n_edges == 0:
            continue
        neg = rng.integers(n, size=(n_edges, params.negative_samples))
        src = np.repeat(hi, params.negative_samples)
        dst = neg.reshape(-1)
        ok = src != dst
        src, dst = src[ok], dst[ok]
        delta = emb[src] - emb[dst]
        d2 = (delta**2).sum(axis=1)
        coef = np.clip(2.0 * b / ((0.001 + d2) * (1.0 + a * d2**b)), -4.0, 4.0)
        np.add.at(emb, src, alpha * coef[:, None] * delta)
    return emb


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


@dataclass
class OpticsParams:
    min_samples: int = 5
    xi: float = 0.05
    # xi extraction splits uniform-density clusters on tiny reachability dips;
    # requiring clusters to hold a fifth of the points keeps binding-mode
    # groups whole without touching the density params above
    min_cluster_size: float = 0.2


@dataclass
class ClusterAssignment:
    compound_ids: list[str]
    cluster_ids: np.ndarray  # (n,), -1 = noise
    coordinates: np.ndarray  # (n, 2)

    def n_clusters(self) -> int:
        return len(set(self.cluster_ids[self.cluster_ids >= 0].tolist()))

    def to_rows(self, vectors: list[AttentionVector]) -> list[dict]:
        return [
            {
                "compound_id": v.compound_id,
                "cluster": int(c),
                "x": float(xy[0]),
                "y": float(xy[1]),
                "predicted_p": v.predicted_p,
                "label": v.label,
            }
            for v, c, xy in zip(vectors, self.cluster_ids, self.coordinates)
        ]


def l1_normalize(vectors: np.ndarray) -> np.ndarray:
    norms = np.abs(vectors).sum(axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return vectors / norms


def cluster_protein(
    vectors: Sequence[AttentionVector] | np.ndarray,
    umap_params: UmapParams | None = None,
    optics_params: OpticsParams | None = None,
) -> ClusterAssignment:
    """Project one protein's interaction embeddings to 2-D and cluster them.

    Fewer vectors than min_samples cannot form a cluster: everything is
    labeled noise and a warning is emitted."""
    optics_params = optics_params or OpticsParams()
    if isinstance(vectors, np.ndarray):
        matrix = vectors.astype(np.float64)
        compound_ids = [str(i) for i in range(matrix.shape[0])]
    else:
        matrix = np.stack([v.vector for v in vectors]).astype(np.float64)
        compound_ids = [v.compound_id for v in vectors]
    matrix = l1_normalize(matrix)
    coords = umap_project(matrix, umap_params)
    n = matrix.shape[0]
    if n < optics_params.min_samples:
        warnings.warn(
            f"{n} vectors < min_samples={optics_params.min_samples}; labeling all as noise",
            stacklevel=2,
        )
        return ClusterAssignment(compound_ids, np.full(n, -1, dtype=np.int64), coords)
    if np.allclose(matrix, matrix[0]):  # degenerate: identical vectors form one cluster
        return ClusterAssignment(compound_ids, np.zeros(n, dtype=np.int64), coords)
    optics = OPTICS(
        min_samples=optics_params.min_samples,
        xi=optics_params.xi,
        min_cluster_size=optics_params.min_cluster_size,
    )
    labels = optics.fit(coords).labels_.astype(np.int64)
    return ClusterAssignment(compound_ids, labels, coords)


def cluster_purity(cluster_ids: np.ndarray, true_ids: np.ndarray) -> float:
    """Fraction of non-noise points whose cluster's majority true id matches."""
    mask = cluster_ids >= 0
    if not mask.any():
        return 0.0
    correct = 0
    for cid in set(cluster_ids[mask].tolist()):
        members = true_ids[cluster_ids == cid]
        values, counts = np.unique(members, return_counts=True)
        correct += int(counts.max())
    return correct / int(mask.sum())


# ---------------------------------------------------------------------------
# Accuracy vs interaction count
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    protein_id: str
    n_known: int
    accuracy: float


@dataclass(frozen=True)
class BinSummary:
    lo: int
    hi: int
    n_proteins: int
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True)
class AccuracyCurve:
    points: tuple[CurvePoint, ...]
    bins: tuple[BinSummary, ...]
    threshold: float

    def to_tsv(self) -> str:
        lines = ["protein_id\tn_known\taccuracy"]
        for p in self.points:
            lines.append(f"{p.protein_id}\t{p.n_known}\t{p.accuracy:.6f}")
        return "\n".join(lines) + "\n"


def accuracy_vs_count(
    eval_pairs: Sequence[InteractionRecord],
    scores: np.ndarray,
    train_counts: dict[str, int],
    bin_edges: Sequence[int] | None = None,
) -> AccuracyCurve:
    """Per-protein test accuracy at the global optimal-F1 threshold, against
    the protein's number of known (training) interactions.

    Proteins with zero test pairs simply never appear. Bins are [lo, hi)
    count intervals; default edges are powers of two."""
    labels = np.array([r.label for r in eval_pairs])
    report = compute_metrics(scores, labels)
    preds = np.asarray(scores) >= report.threshold

    by_protein: dict[str, list[int]] = {}
    for i, rec in enumerate(eval_pairs):
        by_protein.setdefault(rec.protein_id, []).append(i)
    points = []
    for pid in sorted(by_protein):
        idx = by_protein[pid]
        accuracy = float((preds[idx] == labels[idx]).mean())
        points.append(CurvePoint(pid, int(train_counts.get(pid, 0)), accuracy))

    if bin_edges is None:
        top = max((p.n_known for p in points), default=1)
        bin_edges = [0]
        edge = 1
        while edge <= top:
            bin_edges.append(edge)
            edge *= 2
        bin_edges.append(edge)
    bins = []
    for lo, hi in zip(bin_edges[:-1], bin_edges[1:]):
        members = [p.accuracy for p in points if lo <= p.n_known < hi]
        if not members:
            continue
        arr = np.array(members)
        bins.append(
            BinSummary(lo, hi, len(members), float(arr.mean()), float(arr.std(ddof=0)))
        )
    return AccuracyCurve(tuple(points), tuple(bins), report.threshold)
