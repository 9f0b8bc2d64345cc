"""SDF / MOL V2000 reading and writing (single conformer per record)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .smiles import Atom, Bond, Molecule


class SdfError(ValueError):
    pass


@dataclass
class SdfRecord:
    title: str
    molecule: Molecule
    coords: np.ndarray  # (n_atoms, 3), Angstrom, aligned with molecule.atoms


_ORDER_FROM_CODE = {1: 1.0, 2: 2.0, 3: 3.0, 4: 1.5}
_CODE_FROM_ORDER = {1.0: 1, 2.0: 2, 3.0: 3, 1.5: 4}


def _parse_block(lines: list[str]) -> SdfRecord:
    if len(lines) < 4:
        raise SdfError("molblock shorter than the 4 mandatory header lines")
    title = lines[0].strip()
    counts = lines[3]
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except (ValueError, IndexError) as exc:
        raise SdfError(f"bad counts line: {counts!r}") from exc
    if len(lines) < 4 + n_atoms + n_bonds:
        raise SdfError("molblock truncated before the end of the bond block")

    atoms: list[Atom] = []
    coords = np.zeros((n_atoms, 3), dtype=np.float64)
    for i in range(n_atoms):
        line = lines[4 + i]
        try:
            coords[i] = [float(line[0:10]), float(line[10:20]), float(line[20:30])]
            symbol = line[31:34].strip()
        except (ValueError, IndexError) as exc:
            raise SdfError(f"bad atom line {i}: {line!r}") from exc
        atoms.append(Atom(symbol=symbol, bracket_hs=None))

    bonds: list[Bond] = []
    for i in range(n_bonds):
        line = lines[4 + n_atoms + i]
        try:
            a = int(line[0:3]) - 1
            b = int(line[3:6]) - 1
            code = int(line[6:9])
        except (ValueError, IndexError) as exc:
            raise SdfError(f"bad bond line {i}: {line!r}") from exc
        order = _ORDER_FROM_CODE.get(code, 1.0)
        bonds.append(Bond(a, b, order, aromatic=(code == 4)))

    for line in lines[4 + n_atoms + n_bonds :]:
        if line.startswith("M  CHG"):
            fields = line.split()
            n = int(fields[2])
            for k in range(n):
                idx = int(fields[3 + 2 * k]) - 1
                atoms[idx].formal_charge = int(fields[4 + 2 * k])
        if line.startswith("M  END"):
            break

    mol = Molecule(atoms, bonds)
    from .smiles import _assign_implicit_hs, _perceive_aromaticity, _ring_atoms_and_bonds

    _assign_implicit_hs(mol)
    rings = _ring_atoms_and_bonds(mol)
    _perceive_aromaticity(mol, rings)
    for bond in mol.bonds:
        if bond.aromatic:
            mol.atoms[bond.a].aromatic = True
            mol.atoms[bond.b].aromatic = True
    return SdfRecord(title=title, molecule=mol, coords=coords)


def parse_sdf(path_or_text: str | Path) -> list[SdfRecord]:
    """Parse all records of an SDF file (or a raw molblock string)."""
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = str(path_or_text)
    records = []
    block: list[str] = []
    for line in text.splitlines():
        if line.strip() == "$$$$":
            if block:
                records.append(_parse_block(block))
            block = []
        else:
            block.append(line)
    if any(l.strip() for l in block):
        records.append(_parse_block(block))
    if not records:
        raise SdfError("no molecule records found")
    return records


def write_sdf(record: SdfRecord, path: str | Path | None = None) -> str:
    mol, coords = record.molecule, np.asarray(record.coords, dtype=np.float64)
    lines = [record.title, "  scope3d", ""]
    lines.append(f"{len(mol.atoms):3d}{len(mol.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
    for atom, xyz in zip(mol.atoms, coords):
        lines.append(
            f"{xyz[0]:10.4f}{xyz[1]:10.4f}{xyz[2]:10.4f} {atom.symbol:<3s} 0  0  0  0  0  0  0  0  0  0  0  0"
        )
    for bond in mol.bonds:
        code = _CODE_FROM_ORDER.get(bond.order, 1)
        lines.append(f"{bond.a + 1:3d}{bond.b + 1:3d}{code:3d}  0")
    charged = [(i + 1, a.formal_charge) for i, a in enumerate(mol.atoms) if a.formal_charge]
    for start in range(0, len(charged), 8):
        chunk = charged[start : start + 8]
        lines.append("M  CHG" + f"{len(chunk):3d}" + "".join(f"{i:4d}{c:4d}" for i, c in chunk))
    lines.append("M  END")
    lines.append("$$$$")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
