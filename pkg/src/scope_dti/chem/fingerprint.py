"""Circular substructure fingerprints and Tanimoto similarity.

ECFP-style: per-atom invariants are iteratively rehashed with sorted
(bond, neighbor) environments for `radius` rounds; every environment hash
from every round is folded into an n_bits bitmask. Hashing goes through
blake2b so fingerprints are stable across processes and machines.
"""

from __future__ import annotations

import hashlib
import struct

from .smiles import Molecule, parse_smiles

_ELEMENT_CODE = {s: i for i, s in enumerate(
    ["C", "N", "O", "S", "F", "P", "Cl", "Br", "I", "B", "Si", "Se", "*", "H"]
)}


def _stable_hash(values: tuple[int, ...]) -> int:
    payload = struct.pack(f"<{len(values)}Q", *(v & 0xFFFFFFFFFFFFFFFF for v in values))
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def _initial_invariants(mol: Molecule) -> list[int]:
    inv = []
    for i, atom in enumerate(mol.atoms):
        inv.append(
            _stable_hash(
                (
                    _ELEMENT_CODE.get(atom.symbol, 99),
                    mol.degree(i),
                    mol.total_hs(i),
                    atom.formal_charge,
                    int(atom.aromatic),
                    int(atom.in_ring),
                )
            )
        )
    return inv


def circular_fingerprint(smiles_or_mol: str | Molecule, radius: int = 2, n_bits: int = 2048) -> int:
    """Bitmask (int) with up to n_bits positions set; deterministic."""
    mol = parse_smiles(smiles_or_mol) if isinstance(smiles_or_mol, str) else smiles_or_mol
    inv = _initial_invariants(mol)
    bits = 0
    for v in inv:
        bits |= 1 << (v % n_bits)
    for _ in range(radius):
        nxt = []
        for i in range(len(mol.atoms)):
            env = sorted(
                (int(b.order * 2), inv[b.other(i)]) for b in mol.neighbor_bonds(i)
            )
            flat: list[int] = [inv[i]]
            for order_code, neigh in env:
                flat.extend((order_code, neigh))
            nxt.append(_stable_hash(tuple(flat)))
        inv = nxt
        for v in inv:
            bits |= 1 << (v % n_bits)
    return bits


def tanimoto(fp_a: int, fp_b: int) -> float:
    """Intersection-over-union of two bitmask fingerprints."""
    union = (fp_a | fp_b).bit_count()
    if union == 0:
        return 1.0
    return (fp_a & fp_b).bit_count() / union
