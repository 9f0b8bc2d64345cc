"""Structure parsing and graph construction for proteins and molecules.

Proteins become residue-level graphs with two edge types: sequential edges
between chain neighbors and radius edges between residues whose all-atom
geometric centers lie closer than a cutoff. Molecules become heavy-atom
graphs with a 74-dim scalar feature row per atom, 3D coordinates, and
distance-RBF edge features for every atom pair closer than 4.5 Angstrom.
Both cutoffs are strict (<) so boundary ties are deterministic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chem.fingerprint import circular_fingerprint, tanimoto  # noqa: F401  (re-exported ops)
from .chem.sdf import SdfRecord
from .chem.smiles import Molecule, _collapse_explicit_hydrogens, parse_smiles
from .core import RESIDUE_ALPHABET, RESIDUE_INDEX, UNKNOWN_RESIDUE

PROTEIN_RADIUS_CUTOFF = 10.0  # Angstrom
MOLECULE_EDGE_CUTOFF = 4.5  # Angstrom
N_RBF = 16
EDGE_TYPES = ("sequential", "radius")

# Scalar atom feature layout: eight blocks, 74 columns total. Widths are the
# convention this pipeline is pinned to; change only with a cache-version bump.
ATOM_TYPES = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe",
    "As", "Al", "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co",
    "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn",
    "Zr", "Cr", "Pt", "Hg", "Pb",
]
HYBRIDIZATIONS = ["SP", "SP2", "SP3", "SP3D", "SP3D2"]
FEATURE_LAYOUT = [
    ("atom_type", len(ATOM_TYPES)),  # 43
    ("degree", 11),                  # 0..10
    ("implicit_hs", 7),              # 0..6
    ("formal_charge", 1),
    ("radical_electrons", 1),
    ("hybridization", len(HYBRIDIZATIONS)),  # 5
    ("aromatic", 1),
    ("total_hs", 5),                 # 0..4
]
ATOM_FEATURE_DIM = sum(width for _, width in FEATURE_LAYOUT)  # 74


class StructureError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Protein side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProteinGraph:
    residue_types: np.ndarray  # (M,) int64 indices into RESIDUE_ALPHABET
    residue_centroids: np.ndarray  # (M, 3) float64, Angstrom
    edges_by_type: dict[str, np.ndarray]  # name -> (2, E) int64 [src, dst]
    d_r: float

    @property
    def n_residues(self) -> int:
        return int(self.residue_types.shape[0])


def parse_protein_structure(path: str | Path, sequence: str) -> np.ndarray:
    """Per-residue centroids (mean of all atom coordinates) from a PDB file.

    The structure may have more residues than the (already truncated)
    sequence — the tail is cut; fewer is an error.
    """
    path = Path(path)
    residues: dict[tuple[str, str, str], list[tuple[float, float, float]]] = {}
    order: list[tuple[str, str, str]] = []
    try:
        with path.open(encoding="utf-8", errors="replace") as fh:
            for line in fh:
                if line.startswith("ENDMDL"):
                    break
                if not line.startswith("ATOM"):
                    continue
                alt = line[16]
                if alt not in (" ", "A"):
                    continue
                key = (line[21], line[22:26].strip(), line[26])
                xyz = (float(line[30:38]), float(line[38:46]), float(line[46:54]))
                if key not in residues:
                    residues[key] = []
                    order.append(key)
                residues[key].append(xyz)
    except (OSError, ValueError, IndexError) as exc:
        raise StructureError(f"cannot parse PDB file {path}: {exc}") from exc
    if not order:
        raise StructureError(f"no ATOM records in {path}")
    if len(order) < len(sequence):
        raise StructureError(
            f"{path.name}: {len(order)} residues in structure < {len(sequence)} in sequence"
        )
    centroids = np.array(
        [np.mean(residues[key], axis=0) for key in order[: len(sequence)]], dtype=np.float64
    )
    return centroids


def build_protein_graph(
    sequence: str, centroids: np.ndarray, d_r: float = PROTEIN_RADIUS_CUTOFF
) -> ProteinGraph:
    if not sequence:
        raise StructureError("empty sequence")
    centroids = np.asarray(centroids, dtype=np.float64)
    if centroids.shape != (len(sequence), 3):
        raise StructureError(
            f"centroid shape {centroids.shape} does not match sequence length {len(sequence)}"
        )
    types = np.array(
        [RESIDUE_INDEX.get(c, RESIDUE_INDEX[UNKNOWN_RESIDUE]) for c in sequence], dtype=np.int64
    )
    m = len(sequence)
    if m > 1:
        fwd = np.arange(m - 1)
        seq_edges = np.concatenate(
            [np.stack([fwd, fwd + 1]), np.stack([fwd + 1, fwd])], axis=1
        )
    else:
        seq_edges = np.zeros((2, 0), dtype=np.int64)

    diff = centroids[:, None, :] - centroids[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    mask = (dist < d_r) & ~np.eye(m, dtype=bool)
    src, dst = np.nonzero(mask)
    radius_edges = np.stack([src, dst]).astype(np.int64)

    return ProteinGraph(
        residue_types=types,
        residue_centroids=centroids,
        edges_by_type={"sequential": seq_edges.astype(np.int64), "radius": radius_edges},
        d_r=d_r,
    )


# ---------------------------------------------------------------------------
# Molecule side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoleculeGraph:
    atom_scalar: np.ndarray  # (N, 74) float32
    atom_coords: np.ndarray  # (N, 3) float64, Angstrom
    edge_index: np.ndarray  # (2, E) int64 [src j, dst i]; message j -> i
    edge_vec: np.ndarray  # (E, 3) float64 unit vectors coords[src] - coords[dst]
    edge_rbf: np.ndarray  # (E, 16) float64
    bond_edge_index: np.ndarray  # (2, B) int64 covalent bonds, both directions

    @property
    def n_atoms(self) -> int:
        return int(self.atom_scalar.shape[0])


def rbf_expand(
    distance: float | np.ndarray,
    n: int = N_RBF,
    d_min: float = 0.0,
    d_max: float = MOLECULE_EDGE_CUTOFF,
) -> np.ndarray:
    """Gaussian radial basis values at n centers evenly spaced on [d_min, d_max].

    The width equals the center spacing, giving overlapping coverage with no
    dead zones. Output components lie in (0, 1]."""
    centers = np.linspace(d_min, d_max, n)
    sigma = (d_max - d_min) / (n - 1)
    d = np.asarray(distance, dtype=np.float64)
    return np.exp(-((d[..., None] - centers) ** 2) / (2.0 * sigma**2))


def atom_features(mol: Molecule, idx: int) -> np.ndarray:
    atom = mol.atoms[idx]
    row = np.zeros(ATOM_FEATURE_DIM, dtype=np.float32)
    offset = 0
    if atom.symbol in ATOM_TYPES:
        row[offset + ATOM_TYPES.index(atom.symbol)] = 1.0
    offset += len(ATOM_TYPES)
    row[offset + min(mol.degree(idx), 10)] = 1.0
    offset += 11
    implicit = 0 if atom.bracket_hs is not None else atom.implicit_hs
    row[offset + min(implicit, 6)] = 1.0
    offset += 7
    row[offset] = float(atom.formal_charge)
    offset += 1
    row[offset] = 0.0  # radical electrons: reader does not model radicals
    offset += 1
    row[offset + HYBRIDIZATIONS.index(mol.hybridization(idx))] = 1.0
    offset += len(HYBRIDIZATIONS)
    row[offset] = 1.0 if atom.aromatic else 0.0
    offset += 1
    row[offset + min(mol.total_hs(idx), 4)] = 1.0
    return row


def canonical_atom_order(mol: Molecule, rounds: int = 4) -> list[int]:
    """Stable atom ordering from iteratively refined neighborhood invariants.

    Symmetry-equivalent atoms keep their relative input order, so two input
    orderings of one molecule yield graphs identical up to relabeling."""
    inv = [
        (
            mol.atoms[i].symbol,
            mol.degree(i),
            mol.total_hs(i),
            mol.atoms[i].formal_charge,
            mol.atoms[i].aromatic,
        )
        for i in range(len(mol.atoms))
    ]
    ranks = _rank(inv)
    for _ in range(rounds):
        refined = [
            (ranks[i], tuple(sorted((int(b.order * 2), ranks[b.other(i)]) for b in mol.neighbor_bonds(i))))
            for i in range(len(mol.atoms))
        ]
        ranks = _rank(refined)
    return sorted(range(len(mol.atoms)), key=lambda i: (ranks[i], i))


def _rank(keys: list) -> list[int]:
    seen = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [seen[k] for k in keys]


def build_molecule_graph(
    source: str | Molecule | SdfRecord,
    coords: np.ndarray | None = None,
    cutoff: float = MOLECULE_EDGE_CUTOFF,
    conformer_provider=None,
    compound_id: str | None = None,
) -> MoleculeGraph:
    """Build the geometric molecule graph from a SMILES string, a parsed
    Molecule plus coordinates, or an SdfRecord.

    SMILES input needs a conformer provider (or relies on the built-in
    embedder). Explicit hydrogens in SDF records are folded into the heavy
    atoms. Atoms are canonically reordered."""
    if isinstance(source, SdfRecord):
        mol, keep = _collapse_explicit_hydrogens(source.molecule)
        coords = np.asarray(source.coords, dtype=np.float64)[keep]
    elif isinstance(source, str):
        if coords is None:
            from .chem.conformer import default_conformer_provider

            provider = conformer_provider or default_conformer_provider()
            record = provider.conformer(source, compound_id)
            return build_molecule_graph(record, cutoff=cutoff)
        mol = parse_smiles(source)
    else:
        mol = source
    if coords is None:
        raise StructureError("coordinates required when passing a parsed Molecule")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (len(mol.atoms), 3):
        raise StructureError(f"coords shape {coords.shape} != ({len(mol.atoms)}, 3)")
    if mol.heavy_atom_count() == 0:
        raise StructureError("molecule has no heavy atom")

    order = canonical_atom_order(mol)
    relabel = {old: new for new, old in enumerate(order)}
    coords = coords[order]
    scalar = np.stack([atom_features(mol, i) for i in order])

    n = len(order)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    mask = (dist < cutoff) & ~np.eye(n, dtype=bool)
    dst, src = np.nonzero(mask)  # message src -> dst for every close pair
    edge_index = np.stack([src, dst]).astype(np.int64)
    d = dist[dst, src]
    edge_vec = (coords[src] - coords[dst]) / d[:, None]
    edge_rbf = rbf_expand(d)

    bond_pairs: list[tuple[int, int]] = []
    for bond in mol.bonds:
        a, b = relabel[bond.a], relabel[bond.b]
        bond_pairs.extend([(a, b), (b, a)])
    bond_pairs.sort()
    bond_edge_index = (
        np.array(bond_pairs, dtype=np.int64).T if bond_pairs else np.zeros((2, 0), dtype=np.int64)
    )
    return MoleculeGraph(
        atom_scalar=scalar,
        atom_coords=coords,
        edge_index=edge_index,
        edge_vec=edge_vec,
        edge_rbf=edge_rbf,
        bond_edge_index=bond_edge_index,
    )


def fingerprint(smiles: str, radius: int = 2, n_bits: int = 2048) -> int:
    """Circular substructure fingerprint as an int bitmask; deterministic."""
    return circular_fingerprint(smiles, radius=radius, n_bits=n_bits)


# ---------------------------------------------------------------------------
# Content-addressed feature cache
# ---------------------------------------------------------------------------

CACHE_FORMAT_VERSION = 1


class FeatureCache:
    """One .npz blob per entity, keyed by a content hash; format versioned."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(kind: str, payload: bytes) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(f"v{CACHE_FORMAT_VERSION}:{kind}:".encode())
        h.update(payload)
        return h.hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.npz"

    def get(self, key: str) -> dict[str, np.ndarray] | None:
        path = self._path(key)
        if not path.exists():
            return None
        with np.load(path, allow_pickle=False) as data:
            return {name: data[name] for name in data.files}

    def put(self, key: str, arrays: dict[str, np.ndarray]) -> None:
        np.savez(self._path(key), **arrays)

    def molecule_graph(self, smiles: str, coords: np.ndarray) -> MoleculeGraph:
        key = self.key("mol", smiles.encode() + np.ascontiguousarray(coords).tobytes())
        cached = self.get(key)
        if cached is None:
            graph = build_molecule_graph(parse_smiles(smiles), coords)
            self.put(
                key,
                {
                    "atom_scalar": graph.atom_scalar,
                    "atom_coords": graph.atom_coords,
                    "edge_index": graph.edge_index,
                    "edge_vec": graph.edge_vec,
                    "edge_rbf": graph.edge_rbf,
                    "bond_edge_index": graph.bond_edge_index,
                },
            )
            return graph
        return MoleculeGraph(**cached)
