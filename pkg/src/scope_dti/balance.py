"""Target-level class-imbalance filtering and semi-inductive compound splits.

A protein whose recorded interactions are dominated by one class lets a model
predict from protein identity alone. The filter subsamples the majority class
down to a 25-75% band per protein (removing the minimal number of records),
discarding proteins that cannot be balanced. The split assigns compounds, not
pairs, to train/val/test so evaluation compounds are unseen while every
evaluation protein stays represented in training.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Corpus, CorpusError, InteractionRecord


def positive_ratio(n_negative: int, n_positive: int) -> float:
    """Fraction of positive interactions for one protein."""
    if n_negative < 0 or n_positive < 0:
        raise CorpusError("counts must be non-negative")
    total = n_negative + n_positive
    if total == 0:
        raise CorpusError("protein has no interactions")
    return n_positive / total


@dataclass(frozen=True)
class ProteinBalanceProfile:
    protein_id: str
    n_negative: int
    n_positive: int

    @property
    def positive_ratio(self) -> float:
        return positive_ratio(self.n_negative, self.n_positive)


@dataclass(frozen=True)
class FilterAction:
    protein_id: str
    n0_before: int
    n1_before: int
    n0_after: int
    n1_after: int
    action: str  # kept | subsampled | dropped


@dataclass(frozen=True)
class FilterReport:
    actions: tuple[FilterAction, ...]

    @property
    def dropped_proteins(self) -> list[str]:
        return [a.protein_id for a in self.actions if a.action == "dropped"]

    @property
    def removed_interactions(self) -> int:
        return sum(
            (a.n0_before + a.n1_before) - (a.n0_after + a.n1_after) for a in self.actions
        )

    def to_tsv(self) -> str:
        lines = ["protein_id\tn0_before\tn1_before\tn0_after\tn1_after\taction"]
        for a in self.actions:
            lines.append(
                f"{a.protein_id}\t{a.n0_before}\t{a.n1_before}\t{a.n0_after}\t{a.n1_after}\t{a.action}"
            )
        return "\n".join(lines) + "\n"


def _protein_rng(seed: int, protein_id: str) -> np.random.Generator:
    # independent per-protein streams: filtering stays order-free and parallelizable
    digest = hashlib.blake2b(f"{seed}:{protein_id}".encode(), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def balance_filter(
    corpus: Corpus,
    seed: int = 0,
    min_interactions: int = 4,
    majority_cap: float = 0.75,
) -> tuple[Corpus, FilterReport]:
    """Enforce per-protein minority share >= 1 - majority_cap.

    Majority-class interactions are removed by a seeded uniform draw, keeping
    the maximum count that satisfies the bound (floor(cap/(1-cap) * minority)).
    Minority records are never touched. Proteins with no minority class, or
    fewer than min_interactions records after subsampling, are dropped whole.
    """
    minority_floor = 1.0 - majority_cap
    keep_ratio = majority_cap / minority_floor  # 3.0 for the default 0.75 cap
    actions: list[FilterAction] = []
    kept: list[InteractionRecord] = []

    for pid, recs in sorted(corpus.interactions_by_protein().items()):
        neg = [r for r in recs if r.label == 0]
        pos = [r for r in recs if r.label == 1]
        n0, n1 = len(neg), len(pos)
        minority, majority = (pos, neg) if n1 <= n0 else (neg, pos)

        if len(minority) == 0:
            actions.append(FilterAction(pid, n0, n1, 0, 0, "dropped"))
            continue

        if len(majority) / (n0 + n1) > majority_cap:
            n_keep = math.floor(keep_ratio * len(minority))
            rng = _protein_rng(seed, pid)
            idx = rng.choice(len(majority), size=n_keep, replace=False)
            majority = [majority[i] for i in sorted(idx)]
            action = "subsampled"
        else:
            action = "kept"

        retained = minority + majority
        if len(retained) < min_interactions:
            actions.append(FilterAction(pid, n0, n1, 0, 0, "dropped"))
            continue

        n0_after = sum(1 for r in retained if r.label == 0)
        n1_after = len(retained) - n0_after
        actions.append(FilterAction(pid, n0, n1, n0_after, n1_after, action))
        kept.extend(retained)

    kept.sort(key=lambda r: (r.protein_id, r.compound_id, r.source))
    retained_pids = {r.protein_id for r in kept}
    retained_cids = {r.compound_id for r in kept}
    filtered = Corpus(
        proteins={p: rec for p, rec in corpus.proteins.items() if p in retained_pids},
        compounds={c: rec for c, rec in corpus.compounds.items() if c in retained_cids},
        interactions=tuple(kept),
    )
    return filtered, FilterReport(tuple(actions))


@dataclass(frozen=True)
class Histogram:
    bin_width: float
    counts: tuple[int, ...]

    def edges(self) -> list[tuple[float, float]]:
        return [
            (i * self.bin_width, min((i + 1) * self.bin_width, 1.0))
            for i in range(len(self.counts))
        ]


def ratio_histogram(corpus: Corpus, bin_width: float = 0.02) -> Histogram:
    """Protein counts per positive-ratio interval over [0, 1].

    A value on a bin boundary falls in the lower bin (0.0 stays in bin 0),
    so the top bin closes at 1.0 inclusive.
    """
    if not 0.0 < bin_width <= 1.0:
        raise CorpusError(f"bin_width must be in (0, 1], got {bin_width}")
    n_bins = math.ceil(1.0 / bin_width - 1e-9)
    counts = [0] * n_bins
    for pid, recs in corpus.interactions_by_protein().items():
        n1 = sum(r.label for r in recs)
        r = positive_ratio(len(recs) - n1, n1)
        idx = max(0, math.ceil(r / bin_width - 1e-9) - 1)
        counts[min(idx, n_bins - 1)] += 1
    return Histogram(bin_width, tuple(counts))


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    ratio: tuple[float, float, float]
    assignment: dict[str, str]  # compound_id -> train | val | test
    moved_for_containment: tuple[str, ...] = ()

    def compounds(self, split: str) -> set[str]:
        return {c for c, s in self.assignment.items() if s == split}

    def counts(self) -> dict[str, int]:
        out = {"train": 0, "val": 0, "test": 0}
        for s in self.assignment.values():
            out[s] += 1
        return out

    def to_tsv(self) -> str:
        lines = ["compound_id\tsplit"]
        for cid in sorted(self.assignment):
            lines.append(f"{cid}\t{self.assignment[cid]}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def load_manifest(path: str | Path, seed: int = -1, ratio=(0.7, 0.1, 0.2)) -> SplitManifest:
    assignment = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if lines[0] != "compound_id\tsplit":
        raise CorpusError(f"bad manifest header: {lines[0]!r}")
    for line in lines[1:]:
        cid, split = line.split("\t")
        assignment[cid] = split
    return SplitManifest(seed, tuple(ratio), assignment)


def semi_inductive_split(
    corpus: Corpus, seed: int, ratio: tuple[float, float, float] = (0.7, 0.1, 0.2)
) -> SplitManifest:
    """Assign compounds to train/val/test; interactions follow their compound.

    Validation and test proteins must also occur in training. When a shuffle
    violates that, the smallest greedy set of val/test compounds covering the
    missing proteins is moved into train (ties broken by compound id).
    """
    if abs(sum(ratio) - 1.0) > 1e-9:
        raise CorpusError(f"split ratio must sum to 1, got {ratio}")
    compound_ids = sorted(corpus.compounds)
    if len(compound_ids) < 10:
        raise CorpusError(f"need >= 10 compounds to realize a {ratio} split, got {len(compound_ids)}")

    rng = np.random.default_rng(seed)
    order = [compound_ids[i] for i in rng.permutation(len(compound_ids))]
    n = len(order)
    n_val = round(ratio[1] * n)
    n_test = round(ratio[2] * n)
    n_train = n - n_val - n_test
    assignment = {cid: "train" for cid in order[:n_train]}
    assignment.update({cid: "val" for cid in order[n_train : n_train + n_val]})
    assignment.update({cid: "test" for cid in order[n_train + n_val :]})

    proteins_by_compound: dict[str, set[str]] = {}
    for rec in corpus.interactions:
        proteins_by_compound.setdefault(rec.compound_id, set()).add(rec.protein_id)

    def train_proteins() -> set[str]:
        out: set[str] = set()
        for cid, split in assignment.items():
            if split == "train":
                out |= proteins_by_compound.get(cid, set())
        return out

    moved: list[str] = []
    covered = train_proteins()
    missing = {
        p
        for cid, split in assignment.items()
        if split != "train"
        for p in proteins_by_compound.get(cid, set())
        if p not in covered
    }
    while missing:
        candidates = sorted(
            (cid for cid, split in assignment.items() if split != "train"),
            key=lambda cid: (-len(proteins_by_compound.get(cid, set()) & missing), cid),
        )
        best = candidates[0]
        gain = proteins_by_compound.get(best, set()) & missing
        if not gain:  # cannot happen while missing is derived from non-train compounds
            break
        assignment[best] = "train"
        moved.append(best)
        missing -= gain

    return SplitManifest(seed, tuple(ratio), assignment, tuple(sorted(moved)))


def split_interactions(
    corpus: Corpus, manifest: SplitManifest
) -> dict[str, list[InteractionRecord]]:
    out: dict[str, list[InteractionRecord]] = {"train": [], "val": [], "test": []}
    for rec in corpus.interactions:
        out[manifest.assignment[rec.compound_id]].append(rec)
    return out
