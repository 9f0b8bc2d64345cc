"""Ranking metrics and the optimal-F1 operating point.

AUROC uses the rank statistic with midrank tie handling; AUPRC integrates
the precision-recall curve stepwise over distinct scores. The classification
threshold is the F1-maximizing cut evaluated at midpoints between
consecutive distinct scores plus the two infinities, and accuracy,
sensitivity, and specificity are reported at that same cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class EvalReport:
    auroc: float
    auprc: float
    f1: float
    accuracy: float
    sensitivity: float
    specificity: float
    threshold: float
    n_pairs: int
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "auprc": self.auprc,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "threshold": self.threshold,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
        }

    def as_tsv(self) -> str:
        items = self.as_dict()
        header = "\t".join(items)
        values = "\t".join("" if v is None else str(v) for v in items.values())
        return f"{header}\n{values}\n"


def _validate(scores: np.ndarray, labels: np.ndarray) -> None:
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D arrays")
    if scores.shape[0] < 2:
        raise ValueError("need at least two pairs")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary")
    if labels.min() == labels.max():
        raise ValueError("both classes must be present")


def auroc_score(scores, labels) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _validate(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    ranks = rankdata(scores)  # midranks for ties
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auprc_score(scores, labels) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _validate(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    # group tied scores: precision/recall are evaluated per distinct threshold
    distinct = np.nonzero(np.diff(s))[0]
    boundaries = np.concatenate([distinct, [s.shape[0] - 1]])
    tp = np.cumsum(y)[boundaries].astype(np.float64)
    n_at = (boundaries + 1).astype(np.float64)
    n_pos = float(y.sum())
    precision = tp / n_at
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def f1_optimal_threshold(scores, labels) -> tuple[float, float]:
    """(best_f1, threshold); prediction rule is score >= threshold.

    Candidates are midpoints between consecutive distinct scores plus -inf
    (everything positive) and +inf (nothing positive). F1 of an empty
    positive set is 0. Ties on F1 pick the largest threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _validate(scores, labels)
    uniq = np.unique(scores)
    mids = (uniq[1:] + uniq[:-1]) / 2.0
    candidates = np.concatenate([[-np.inf], mids, [np.inf]])
    best_f1, best_t = -1.0, -np.inf
    n_pos = int(labels.sum())
    for t in candidates:
        pred = scores >= t
        tp = int((pred & (labels == 1)).sum())
        fp = int((pred & (labels == 0)).sum())
        fn = n_pos - tp
        f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
        if f1 > best_f1 or (f1 == best_f1 and t > best_t):
            best_f1, best_t = f1, float(t)
    return best_f1, best_t


def compute_metrics(scores, labels, seed: int | None = None) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    _validate(scores, labels)
    f1, threshold = f1_optimal_threshold(scores, labels)
    pred = scores >= threshold
    tp = int((pred & (labels == 1)).sum())
    tn = int((~pred & (labels == 0)).sum())
    fp = int((pred & (labels == 0)).sum())
    fn = int((~pred & (labels == 1)).sum())
    return EvalReport(
        auroc=auroc_score(scores, labels),
        auprc=auprc_score(scores, labels),
        f1=f1,
        accuracy=(tp + tn) / labels.shape[0],
        sensitivity=tp / (tp + fn) if (tp + fn) else 0.0,
        specificity=tn / (tn + fp) if (tn + fp) else 0.0,
        threshold=threshold,
        n_pairs=int(labels.shape[0]),
        seed=seed,
    )


def summarize_runs(reports: list[EvalReport]) -> dict[str, str]:
    """`mean±std` (sample std, 3 decimals) per metric across repeated runs."""
    if len(reports) < 2:
        raise ValueError("need at least two runs to summarize")
    out = {}
    for name in ("auroc", "auprc", "f1", "accuracy", "sensitivity", "specificity"):
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        out[name] = f"{values.mean():.3f}±{values.std(ddof=1):.3f}"
    return out
