"""Minimal SMILES reader.

Covers the organic subset, bracket atoms (isotope/charge/H-count), branches,
ring closures (including %nn), aromatic lowercase forms, and perception of
aromaticity for simple Kekulé-written rings. Stereo markers are accepted and
ignored. This is deliberately a reader, not a full toolkit: it exists to turn
corpus SMILES into heavy-atom graphs with the descriptors the featurizer
needs (degree, H counts, charge, hybridization, aromaticity, ring flags).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

# Smallest admissible valence >= the bond-order sum decides implicit hydrogens
# for organic-subset atoms (bracket atoms carry explicit H counts instead).
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

BOND_ORDERS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": 1.5, "/": 1.0, "\\": 1.0}

ELEMENTS = {
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si",
    "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co",
    "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",
    "Xe", "Cs", "Ba", "La", "W", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "*",
}


class InvalidSmilesError(ValueError):
    """The string is not a SMILES this reader accepts."""


@dataclass
class Atom:
    symbol: str
    aromatic: bool = False
    formal_charge: int = 0
    isotope: int | None = None
    bracket_hs: int | None = None  # explicit count from [..Hn]; None = organic subset
    # filled in by Molecule._finalize
    implicit_hs: int = 0
    in_ring: bool = False


@dataclass
class Bond:
    a: int
    b: int
    order: float  # 1, 2, 3; 1.5 marks aromatic
    aromatic: bool = False
    in_ring: bool = False

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def __post_init__(self):
        self._adj: dict[int, list[int]] = {i: [] for i in range(len(self.atoms))}
        for bi, bond in enumerate(self.bonds):
            self._adj[bond.a].append(bi)
            self._adj[bond.b].append(bi)

    def neighbor_bonds(self, idx: int) -> list[Bond]:
        return [self.bonds[bi] for bi in self._adj[idx]]

    def neighbors(self, idx: int) -> list[int]:
        return [b.other(idx) for b in self.neighbor_bonds(idx)]

    def degree(self, idx: int) -> int:
        """Heavy-atom degree (explicit hydrogens are collapsed before this)."""
        return len(self._adj[idx])

    def total_hs(self, idx: int) -> int:
        atom = self.atoms[idx]
        if atom.bracket_hs is not None:
            return atom.bracket_hs
        return atom.implicit_hs

    def hybridization(self, idx: int) -> str:
        atom = self.atoms[idx]
        doubles = sum(1 for b in self.neighbor_bonds(idx) if b.order == 2.0)
        triples = sum(1 for b in self.neighbor_bonds(idx) if b.order == 3.0)
        if triples >= 1 or doubles >= 2:
            return "SP"
        if atom.aromatic or doubles == 1:
            return "SP2"
        return "SP3"

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.symbol != "H")


def _bond_order_sum(mol: Molecule, idx: int) -> float:
    return sum(b.order for b in mol.neighbor_bonds(idx))


def _assign_implicit_hs(mol: Molecule) -> None:
    for i, atom in enumerate(mol.atoms):
        if atom.bracket_hs is not None or atom.symbol not in DEFAULT_VALENCES:
            atom.implicit_hs = 0
            continue
        order_sum = math.ceil(_bond_order_sum(mol, i) - 1e-9)
        valence = next((v for v in DEFAULT_VALENCES[atom.symbol] if v >= order_sum), None)
        atom.implicit_hs = max(0, valence - order_sum) if valence is not None else 0


def _ring_atoms_and_bonds(mol: Molecule) -> list[list[int]]:
    """Minimal cycles as node lists; also sets the in_ring flags."""
    g = nx.Graph()
    g.add_nodes_from(range(len(mol.atoms)))
    for bond in mol.bonds:
        g.add_edge(bond.a, bond.b)
    rings = [sorted(cycle) for cycle in nx.minimum_cycle_basis(g)]
    ring_sets = [set(r) for r in rings]
    for bond in mol.bonds:
        if any(bond.a in s and bond.b in s for s in ring_sets):
            bond.in_ring = True
            mol.atoms[bond.a].in_ring = True
            mol.atoms[bond.b].in_ring = True
    return rings


def _perceive_aromaticity(mol: Molecule, rings: list[list[int]]) -> None:
    """Flag simple Kekulé rings (alternating 6-pi benzenoids, furan-like 5-rings).

    Iterates to a fixpoint so fused systems (naphthalene written with explicit
    double bonds) propagate: an atom already perceived aromatic counts as one
    pi electron towards its other rings."""
    changed = True
    while changed:
        changed = False
        for ring in rings:
            members = set(ring)
            if not 5 <= len(members) <= 7:
                continue
            if all(mol.atoms[i].aromatic for i in members):
                continue
            pi = 0
            ok = True
            for i in members:
                atom = mol.atoms[i]
                if any(b.order == 3.0 for b in mol.neighbor_bonds(i)):
                    ok = False
                    break
                ring_doubles = sum(
                    1 for b in mol.neighbor_bonds(i) if b.order == 2.0 and b.other(i) in members
                )
                exo_doubles = sum(
                    1 for b in mol.neighbor_bonds(i) if b.order == 2.0 and b.other(i) not in members
                )
                if atom.aromatic or ring_doubles >= 1:
                    pi += 1
                elif exo_doubles >= 1:
                    pi += 0  # sp2 but contributes no ring pi electrons
                elif atom.symbol in ("N", "O", "S", "P"):
                    pi += 2  # lone pair
                else:
                    ok = False  # saturated carbon breaks conjugation
                    break
            if ok and pi in (6, 10):
                for i in members:
                    if not mol.atoms[i].aromatic:
                        mol.atoms[i].aromatic = True
                        changed = True
                for b in mol.bonds:
                    if b.a in members and b.b in members and b.in_ring:
                        b.aromatic = True


def _collapse_explicit_hydrogens(mol: Molecule) -> tuple[Molecule, list[int]]:
    """Drop explicit H atoms, folding them into neighbor H counts.

    Returns the heavy-atom molecule and the kept original indices (so callers
    holding per-atom arrays, e.g. SDF coordinates, can subset them)."""
    keep = [i for i, a in enumerate(mol.atoms) if a.symbol != "H"]
    if len(keep) == len(mol.atoms):
        return mol, keep
    remap = {old: new for new, old in enumerate(keep)}
    extra_hs = [0] * len(keep)
    bonds: list[Bond] = []
    for bond in mol.bonds:
        ha, hb = mol.atoms[bond.a].symbol == "H", mol.atoms[bond.b].symbol == "H"
        if ha and hb:
            continue
        if ha or hb:
            heavy = bond.b if ha else bond.a
            if heavy in remap:
                extra_hs[remap[heavy]] += 1
            continue
        bonds.append(Bond(remap[bond.a], remap[bond.b], bond.order, bond.aromatic, bond.in_ring))
    atoms = []
    for old in keep:
        a = mol.atoms[old]
        hs = a.bracket_hs
        if extra_hs[remap[old]]:
            hs = (hs or 0) + extra_hs[remap[old]] + (a.implicit_hs if hs is None else 0)
        atoms.append(
            Atom(a.symbol, a.aromatic, a.formal_charge, a.isotope, hs, a.implicit_hs, a.in_ring)
        )
    return Molecule(atoms, bonds), keep


def _parse_bracket_atom(text: str, pos: int) -> tuple[Atom, int]:
    end = text.find("]", pos)
    if end < 0:
        raise InvalidSmilesError(f"unclosed bracket atom at position {pos}")
    body, i = text[pos + 1 : end], 0
    if not body:
        raise InvalidSmilesError("empty bracket atom")
    isotope = None
    while i < len(body) and body[i].isdigit():
        isotope = (isotope or 0) * 10 + int(body[i])
        i += 1
    if i < len(body) and i + 1 < len(body) and body[i : i + 2] in ELEMENTS and body[i].isupper():
        symbol, i = body[i : i + 2], i + 2
    elif i < len(body) and (body[i].upper() in ELEMENTS or body[i] in ELEMENTS or body[i] == "*"):
        symbol, i = body[i], i + 1
    else:
        raise InvalidSmilesError(f"bad element in bracket atom: {body!r}")
    aromatic = symbol[0].islower() and symbol != "*"
    symbol = symbol if symbol == "*" else symbol[0].upper() + symbol[1:]
    if symbol not in ELEMENTS:
        raise InvalidSmilesError(f"unknown element {symbol!r}")
    while i < len(body) and body[i] == "@":
        i += 1  # stereo ignored
    hs = 0
    if i < len(body) and body[i] == "H":
        i += 1
        hs = 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        if digits:
            hs = int(digits)
    charge = 0
    while i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        charge += sign * (int(digits) if digits else 1)
    if i < len(body) and body[i] == ":":
        i += 1
        while i < len(body) and body[i].isdigit():
            i += 1  # atom-map class ignored
    if i != len(body):
        raise InvalidSmilesError(f"trailing characters in bracket atom: {body[i:]!r}")
    return Atom(symbol, aromatic=aromatic, formal_charge=charge, isotope=isotope, bracket_hs=hs), end + 1


def parse_smiles(smiles: str) -> Molecule:
    """Parse a SMILES string into a heavy-atom Molecule.

    Raises InvalidSmilesError on syntax errors, unmatched rings/branches,
    or molecules with no heavy atom.
    """
    if not smiles or not smiles.strip():
        raise InvalidSmilesError("empty SMILES")
    text = smiles.strip()
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    prev: int | None = None
    pending_bond: str | None = None
    branch_stack: list[tuple[int | None, str | None]] = []
    ring_open: dict[int, tuple[int, str | None]] = {}
    pos = 0

    def add_atom(atom: Atom) -> None:
        nonlocal prev, pending_bond
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            order, arom = _resolve_bond(pending_bond, atoms[prev], atom)
            bonds.append(Bond(prev, idx, order, arom))
        prev = idx
        pending_bond = None

    def open_or_close_ring(num: int) -> None:
        nonlocal pending_bond
        if prev is None:
            raise InvalidSmilesError(f"ring bond {num} before any atom")
        if num in ring_open:
            start, start_bond = ring_open.pop(num)
            if start == prev:
                raise InvalidSmilesError(f"ring bond {num} closes on itself")
            sym = start_bond or pending_bond
            if start_bond and pending_bond and start_bond != pending_bond:
                raise InvalidSmilesError(f"conflicting bond orders for ring {num}")
            order, arom = _resolve_bond(sym, atoms[start], atoms[prev])
            bonds.append(Bond(start, prev, order, arom))
            pending_bond = None
        else:
            ring_open[num] = (prev, pending_bond)
            pending_bond = None

    while pos < len(text):
        ch = text[pos]
        if ch == "[":
            atom, pos = _parse_bracket_atom(text, pos)
            add_atom(atom)
        elif ch.isalpha() or ch == "*":
            two = text[pos : pos + 2]
            if two in ("Cl", "Br"):
                add_atom(Atom(two))
                pos += 2
            elif ch in AROMATIC_SYMBOLS:
                add_atom(Atom(ch.upper(), aromatic=True))
                pos += 1
            elif ch.upper() in ORGANIC_SUBSET and ch.isupper():
                add_atom(Atom(ch))
                pos += 1
            elif ch == "*":
                add_atom(Atom("*"))
                pos += 1
            else:
                raise InvalidSmilesError(f"atom {ch!r} needs brackets at position {pos}")
        elif ch in BOND_ORDERS:
            if pending_bond is not None:
                raise InvalidSmilesError(f"two bond symbols in a row at position {pos}")
            pending_bond = ch
            pos += 1
        elif ch.isdigit():
            open_or_close_ring(int(ch))
            pos += 1
        elif ch == "%":
            if pos + 2 >= len(text) or not text[pos + 1 : pos + 3].isdigit():
                raise InvalidSmilesError(f"bad %ring closure at position {pos}")
            open_or_close_ring(int(text[pos + 1 : pos + 3]))
            pos += 3
        elif ch == "(":
            if prev is None:
                raise InvalidSmilesError("branch before any atom")
            branch_stack.append((prev, pending_bond))
            pending_bond = None
            pos += 1
        elif ch == ")":
            if not branch_stack:
                raise InvalidSmilesError(f"unmatched ')' at position {pos}")
            prev, pending_bond = branch_stack.pop()
            pos += 1
        elif ch == ".":
            prev = None
            pending_bond = None
            pos += 1
        else:
            raise InvalidSmilesError(f"unexpected character {ch!r} at position {pos}")

    if branch_stack:
        raise InvalidSmilesError("unclosed branch")
    if ring_open:
        raise InvalidSmilesError(f"unclosed ring bonds: {sorted(ring_open)}")
    if not atoms:
        raise InvalidSmilesError("no atoms parsed")

    mol = Molecule(atoms, bonds)
    _assign_implicit_hs(mol)
    rings = _ring_atoms_and_bonds(mol)
    _perceive_aromaticity(mol, rings)
    mol, _ = _collapse_explicit_hydrogens(mol)
    if mol.heavy_atom_count() == 0:
        raise InvalidSmilesError("molecule has no heavy atom")
    return mol


def _resolve_bond(symbol: str | None, a: Atom, b: Atom) -> tuple[float, bool]:
    if symbol is None:
        if a.aromatic and b.aromatic:
            return 1.5, True
        return 1.0, False
    if symbol == ":":
        return 1.5, True
    return BOND_ORDERS[symbol], False
