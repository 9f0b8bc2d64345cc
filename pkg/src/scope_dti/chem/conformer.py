"""Conformer adapters: 3D coordinates for a compound.

Featurization never generates geometry itself; it asks a ConformerProvider.
Providers are tried in order: a per-compound SDF file when one exists, an
external tool when configured, else the built-in deterministic spring-layout
embedder. The embedder is not a force field; it produces plausible, seeded,
reproducible geometry (bond lengths from covalent radii, 1-3 distances from
ideal angles, soft repulsion elsewhere), which is what the model and the
tests need when no real conformer file is supplied.
"""

from __future__ import annotations

import hashlib
import subprocess
from pathlib import Path
from typing import Protocol

import numpy as np

from .sdf import SdfRecord, parse_sdf
from .smiles import Molecule, parse_smiles

COVALENT_RADIUS = {
    "H": 0.31, "B": 0.84, "C": 0.76, "N": 0.71, "O": 0.66, "F": 0.57,
    "Si": 1.11, "P": 1.07, "S": 1.05, "Cl": 1.02, "Br": 1.20, "I": 1.39,
    "Se": 1.20, "*": 0.76,
}
_ORDER_SCALE = {1.0: 1.0, 1.5: 0.93, 2.0: 0.87, 3.0: 0.81}
_IDEAL_ANGLE = {"SP3": 109.47, "SP2": 120.0, "SP": 180.0}


class ConformerError(RuntimeError):
    """A provider failed; the message names the adapter stage."""


class ConformerProvider(Protocol):
    def conformer(self, smiles: str, compound_id: str | None = None) -> SdfRecord | None:
        """Return a conformer or None when this provider has nothing to offer."""


class SdfConformerProvider:
    """Looks up <directory>/<compound_id>.sdf fixture files."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def conformer(self, smiles: str, compound_id: str | None = None) -> SdfRecord | None:
        if compound_id is None:
            return None
        path = self.directory / f"{compound_id}.sdf"
        if not path.exists():
            return None
        return parse_sdf(path)[0]


class ExternalToolConformerProvider:
    """Invokes `<command...> <smiles>` and parses SDF from stdout."""

    def __init__(self, command: list[str], timeout: float = 120.0):
        self.command = list(command)
        self.timeout = timeout

    def conformer(self, smiles: str, compound_id: str | None = None) -> SdfRecord | None:
        try:
            proc = subprocess.run(
                [*self.command, smiles],
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=True,
            )
            return parse_sdf(proc.stdout)[0]
        except (subprocess.SubprocessError, OSError, ValueError) as exc:
            raise ConformerError(f"external conformer tool {self.command[0]!r} failed: {exc}") from exc


class EmbeddedConformerProvider:
    """Deterministic spring-layout 3D embedding of the bonded graph."""

    def __init__(self, iterations: int = 400):
        self.iterations = iterations

    def conformer(self, smiles: str, compound_id: str | None = None) -> SdfRecord | None:
        mol = parse_smiles(smiles)
        coords = embed_molecule(mol, seed_from_string(smiles), self.iterations)
        return SdfRecord(title=compound_id or "embedded", molecule=mol, coords=coords)


class ChainedConformerProvider:
    def __init__(self, providers: list[ConformerProvider]):
        self.providers = providers

    def conformer(self, smiles: str, compound_id: str | None = None) -> SdfRecord | None:
        for provider in self.providers:
            record = provider.conformer(smiles, compound_id)
            if record is not None:
                return record
        raise ConformerError("all conformer adapters declined (none configured?)")


def default_conformer_provider(
    conformer_dir: str | Path | None = None,
    external_command: list[str] | None = None,
) -> ChainedConformerProvider:
    providers: list[ConformerProvider] = []
    if conformer_dir is not None:
        providers.append(SdfConformerProvider(conformer_dir))
    if external_command:
        providers.append(ExternalToolConformerProvider(external_command))
    providers.append(EmbeddedConformerProvider())
    return ChainedConformerProvider(providers)


def seed_from_string(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def _target_bond_length(mol: Molecule, a: int, b: int, order: float) -> float:
    ra = COVALENT_RADIUS.get(mol.atoms[a].symbol, 0.76)
    rb = COVALENT_RADIUS.get(mol.atoms[b].symbol, 0.76)
    return (ra + rb) * _ORDER_SCALE.get(order, 1.0)


def embed_molecule(mol: Molecule, seed: int, iterations: int = 400) -> np.ndarray:
    """Seeded gradient-descent embedding; returns (n_atoms, 3) Angstrom coords."""
    n = len(mol.atoms)
    rng = np.random.default_rng(seed)
    if n == 1:
        return np.zeros((1, 3))
    coords = rng.normal(scale=1.0 + n ** (1.0 / 3.0), size=(n, 3))

    bond_pairs, bond_targets = [], []
    for bond in mol.bonds:
        bond_pairs.append((bond.a, bond.b))
        bond_targets.append(_target_bond_length(mol, bond.a, bond.b, bond.order))

    angle_pairs, angle_targets = [], []
    for center in range(n):
        neigh = mol.neighbors(center)
        theta = np.deg2rad(_IDEAL_ANGLE[mol.hybridization(center)])
        for i in range(len(neigh)):
            for j in range(i + 1, len(neigh)):
                a, b = neigh[i], neigh[j]
                da = _target_bond_length(mol, center, a, 1.0)
                db = _target_bond_length(mol, center, b, 1.0)
                d13 = np.sqrt(max(da**2 + db**2 - 2 * da * db * np.cos(theta), 1e-6))
                angle_pairs.append((a, b))
                angle_targets.append(d13)

    bonded = {frozenset(p) for p in bond_pairs} | {frozenset(p) for p in angle_pairs}
    far_pairs = [
        (i, j) for i in range(n) for j in range(i + 1, n) if frozenset((i, j)) not in bonded
    ]

    bp = np.array(bond_pairs, dtype=int).reshape(-1, 2)
    bt = np.array(bond_targets)
    ap = np.array(angle_pairs, dtype=int).reshape(-1, 2)
    at = np.array(angle_targets)
    fp = np.array(far_pairs, dtype=int).reshape(-1, 2)
    r_min = 3.0

    lr = 0.05
    for step in range(iterations):
        grad = np.zeros_like(coords)
        for pairs, targets, weight, repulsive in (
            (bp, bt, 4.0, False),
            (ap, at, 1.0, False),
            (fp, np.full(len(fp), r_min), 0.5, True),
        ):
            if len(pairs) == 0:
                continue
            delta = coords[pairs[:, 0]] - coords[pairs[:, 1]]
            dist = np.linalg.norm(delta, axis=1) + 1e-9
            diff = dist - targets
            if repulsive:
                diff = np.minimum(diff, 0.0)  # only push apart, never attract
            g = (2.0 * weight * diff / dist)[:, None] * delta
            np.add.at(grad, pairs[:, 0], g)
            np.add.at(grad, pairs[:, 1], -g)
        coords -= lr * grad
        if step == iterations // 2:
            lr *= 0.5
    return coords - coords.mean(axis=0)
