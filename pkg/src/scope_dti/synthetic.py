"""Synthetic corpora and structures for tests, benchmarks, and demos.

Nothing here touches the network: molecules are generated as valid SMILES
strings from a constrained fragment grammar, protein "structures" are seeded
random-walk residue traces with a realistic step length, and labels are
either planted (separable) or drawn with controlled per-protein class
ratios (for the balance-filter checks).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .core import CompoundRecord, Corpus, Family, InteractionRecord, ProteinRecord

_CHAIN_ATOMS = "CCCCNOS"  # divalent-safe mid-chain alphabet
_TERMINALS = ["C", "N", "O", "F", "Cl", "Br"]
_RING_FRAGMENTS = ["c1ccccc1", "C1CCCCC1", "c1ccncc1", "C1CCNCC1", "c1ccoc1"]
_FAMILIES = list(Family)

CA_STEP = 3.8  # Angstrom, consecutive-residue distance in the synthetic trace


def _seed_from(seed: int, tag: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def random_smiles(rng: np.random.Generator, min_atoms: int = 3, max_atoms: int = 14) -> str:
    """A random valid SMILES: chain atoms with occasional branches, double
    bonds, terminals, and at most one ring fragment."""
    n = int(rng.integers(min_atoms, max_atoms + 1))
    parts: list[str] = []
    for i in range(n):
        parts.append(_CHAIN_ATOMS[rng.integers(len(_CHAIN_ATOMS))])
        if i < n - 1 and parts[-1] == "C":
            roll = rng.random()
            if roll < 0.12:
                parts.append(f"({_TERMINALS[rng.integers(len(_TERMINALS))]})")
            elif roll < 0.18:
                parts.append("(C)")
            elif roll < 0.24 and i < n - 2:
                parts.append("=C")
    if rng.random() < 0.35:
        parts.append(_RING_FRAGMENTS[rng.integers(len(_RING_FRAGMENTS))])
    return "".join(parts)


def random_sequence(rng: np.random.Generator, min_len: int = 30, max_len: int = 80) -> str:
    from .core import STANDARD_RESIDUES

    length = int(rng.integers(min_len, max_len + 1))
    letters = np.array(list(STANDARD_RESIDUES))
    return "".join(letters[rng.integers(0, len(letters), size=length)])


def synthetic_centroids(sequence: str, seed: int) -> np.ndarray:
    """Random-walk residue trace with CA-like step length; deterministic."""
    rng = np.random.default_rng(seed)
    steps = rng.normal(size=(len(sequence), 3))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    coords = np.cumsum(steps * CA_STEP, axis=0)
    return coords - coords.mean(axis=0)


class SyntheticStructureProvider:
    """structure_provider hook for FeatureStore: seeded traces, no files."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def __call__(self, record: ProteinRecord) -> np.ndarray:
        return synthetic_centroids(record.sequence, _seed_from(self.seed, record.protein_id))


def synthetic_corpus(
    n_proteins: int = 8,
    n_compounds: int = 40,
    seed: int = 0,
    interactions_per_protein: tuple[int, int] = (8, 20),
    positive_ratio_range: tuple[float, float] = (0.2, 0.8),
    source: str = "synthetic",
) -> Corpus:
    """Random corpus with controlled per-protein positive ratios."""
    rng = np.random.default_rng(_seed_from(seed, "corpus"))
    proteins = [
        ProteinRecord(
            protein_id=f"P{i:05d}",
            sequence=random_sequence(rng),
            family=_FAMILIES[i % len(_FAMILIES)],
        )
        for i in range(n_proteins)
    ]
    compounds = [
        CompoundRecord(compound_id=f"C{i:05d}", smiles=random_smiles(rng))
        for i in range(n_compounds)
    ]
    interactions = []
    for prot in proteins:
        lo, hi = interactions_per_protein
        k = int(rng.integers(lo, min(hi, n_compounds) + 1))
        picks = rng.choice(n_compounds, size=k, replace=False)
        ratio = rng.uniform(*positive_ratio_range)
        for c in picks:
            interactions.append(
                InteractionRecord(
                    protein_id=prot.protein_id,
                    compound_id=compounds[c].compound_id,
                    label=int(rng.random() < ratio),
                    source=source,
                )
            )
    return Corpus.build(proteins, compounds, interactions)


def separable_corpus(
    n_proteins: int = 10,
    n_compounds: int = 20,
    seed: int = 0,
) -> Corpus:
    """Fully-crossed corpus whose label is a pure compound property
    (nitrogen-rich vs nitrogen-free), so it is learnable from the compound
    encoder alone and transfers to unseen compounds."""
    rng = np.random.default_rng(_seed_from(seed, "separable"))
    proteins = [
        ProteinRecord(
            protein_id=f"P{i:05d}",
            sequence=random_sequence(rng, 25, 50),
            family=_FAMILIES[i % len(_FAMILIES)],
        )
        for i in range(n_proteins)
    ]
    compounds, labels = [], {}
    for i in range(n_compounds):
        positive = i % 2 == 0
        length = int(rng.integers(4, 9))
        if positive:
            body = "".join(rng.choice(["N", "C"], p=[0.7, 0.3]) for _ in range(length))
            smiles = "N" + body  # nitrogen rich
        else:
            smiles = "C" + "".join(rng.choice(["C", "O"], p=[0.8, 0.2]) for _ in range(length))
        cid = f"C{i:05d}"
        compounds.append(CompoundRecord(compound_id=cid, smiles=smiles))
        labels[cid] = int(positive)
    interactions = [
        InteractionRecord(p.protein_id, c.compound_id, labels[c.compound_id], "separable")
        for p in proteins
        for c in compounds
    ]
    return Corpus.build(proteins, compounds, interactions)


def shuffle_labels(corpus: Corpus, seed: int) -> Corpus:
    """Permute labels across interactions (global shuffle), keeping everything else."""
    rng = np.random.default_rng(_seed_from(seed, "shuffle"))
    labels = [r.label for r in corpus.interactions]
    perm = rng.permutation(len(labels))
    shuffled = [
        InteractionRecord(r.protein_id, r.compound_id, labels[perm[i]], r.source, r.measurement)
        for i, r in enumerate(corpus.interactions)
    ]
    return Corpus(corpus.proteins, corpus.compounds, tuple(shuffled))
