"""Canonical domain types shared by the whole pipeline.

A corpus is three tables: proteins, compounds, and interaction records.
Everything here is an immutable value object; operations are pure functions
that return new corpora plus report objects, so they can be fanned out to
parallel workers without locking.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

# 20 standard residues; "X" is the unknown token that non-standard letters
# (B, Z, U, O, J, ...) collapse onto so sequence indexing stays aligned with
# the structure file.
STANDARD_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
UNKNOWN_RESIDUE = "X"
RESIDUE_ALPHABET = STANDARD_RESIDUES + UNKNOWN_RESIDUE
RESIDUE_INDEX = {aa: i for i, aa in enumerate(RESIDUE_ALPHABET)}

DEFAULT_MAX_SEQUENCE_LENGTH = 2000

INTERACTION_COLUMNS = [
    "protein_id",
    "compound_id",
    "label",
    "source",
    "measurement_type",
    "measurement_value",
    "measurement_units",
]
PROTEIN_COLUMNS = ["protein_id", "sequence", "family", "structure_path"]
COMPOUND_COLUMNS = ["compound_id", "smiles", "conformer_path"]


class Family(str, Enum):
    GPCR = "GPCR"
    KINASE = "Kinase"
    ION_CHANNEL = "IonChannel"
    NUCLEAR_HORMONE_RECEPTOR = "NuclearHormoneReceptor"
    OTHER = "Other"


class CorpusError(ValueError):
    """Raised when a record or corpus violates a hard invariant."""


class AliasConflictError(CorpusError):
    """One source-local id mapped to two different canonical ids."""


def normalize_sequence(sequence: str, max_length: int = DEFAULT_MAX_SEQUENCE_LENGTH) -> str:
    """Uppercase, map non-standard residues to the unknown token, truncate the tail."""
    if not sequence:
        raise CorpusError("protein sequence must be non-empty")
    seq = sequence.upper()[:max_length]
    return "".join(c if c in RESIDUE_INDEX else UNKNOWN_RESIDUE for c in seq)


@dataclass(frozen=True)
class ProteinRecord:
    protein_id: str
    sequence: str
    family: Family = Family.OTHER
    structure_path: str | None = None
    max_length: int = DEFAULT_MAX_SEQUENCE_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "sequence", normalize_sequence(self.sequence, self.max_length))


@dataclass(frozen=True)
class CompoundRecord:
    compound_id: str
    smiles: str
    conformer_path: str | None = None

    def __post_init__(self):
        if not self.smiles:
            raise CorpusError(f"compound {self.compound_id!r} has an empty SMILES")


@dataclass(frozen=True)
class Measurement:
    type: str
    value: float
    units: str


@dataclass(frozen=True)
class InteractionRecord:
    protein_id: str
    compound_id: str
    label: int
    source: str
    measurement: Measurement | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise CorpusError(f"label must be 0 or 1, got {self.label!r}")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.protein_id, self.compound_id)


@dataclass(frozen=True)
class Corpus:
    proteins: dict[str, ProteinRecord] = field(default_factory=dict)
    compounds: dict[str, CompoundRecord] = field(default_factory=dict)
    interactions: tuple[InteractionRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "interactions", tuple(self.interactions))

    @staticmethod
    def build(
        proteins: Iterable[ProteinRecord],
        compounds: Iterable[CompoundRecord],
        interactions: Iterable[InteractionRecord],
    ) -> "Corpus":
        return Corpus(
            proteins={p.protein_id: p for p in proteins},
            compounds={c.compound_id: c for c in compounds},
            interactions=tuple(interactions),
        )

    def interacting_protein_ids(self) -> set[str]:
        return {r.protein_id for r in self.interactions}

    def interacting_compound_ids(self) -> set[str]:
        return {r.compound_id for r in self.interactions}

    def interactions_by_protein(self) -> dict[str, list[InteractionRecord]]:
        out: dict[str, list[InteractionRecord]] = {}
        for rec in self.interactions:
            out.setdefault(rec.protein_id, []).append(rec)
        return out


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # dangling_protein | dangling_compound | duplicate_pair | alphabet
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def count(self, kind: str) -> int:
        return sum(1 for i in self.issues if i.kind == kind)


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Report-only scan: dangling references, duplicate (protein, compound, source)
    records, and residue-alphabet violations. The corpus is never modified."""
    issues: list[ValidationIssue] = []
    for rec in corpus.interactions:
        if rec.protein_id not in corpus.proteins:
            issues.append(ValidationIssue("dangling_protein", f"{rec.protein_id}/{rec.compound_id}"))
        if rec.compound_id not in corpus.compounds:
            issues.append(ValidationIssue("dangling_compound", f"{rec.protein_id}/{rec.compound_id}"))
    seen: dict[tuple[str, str, str], int] = {}
    for rec in corpus.interactions:
        key = (rec.protein_id, rec.compound_id, rec.source)
        seen[key] = seen.get(key, 0) + 1
    for key, n in sorted(seen.items()):
        if n > 1:
            issues.append(ValidationIssue("duplicate_pair", f"{key[0]}/{key[1]} source={key[2]} x{n}"))
    for pid, prot in sorted(corpus.proteins.items()):
        bad = {c for c in prot.sequence if c not in RESIDUE_INDEX}
        if bad:
            issues.append(ValidationIssue("alphabet", f"{pid}: {sorted(bad)}"))
    return ValidationReport(tuple(issues))


@dataclass(frozen=True)
class CanonicalizationReport:
    dropped_proteins: int = 0
    dropped_compounds: int = 0
    dropped_interactions: int = 0
    disallowed_proteins: int = 0


def _normalize_aliases(alias_table: Mapping[str, str] | Iterable[tuple[str, str]]) -> dict[str, str]:
    if isinstance(alias_table, Mapping):
        return dict(alias_table)
    table: dict[str, str] = {}
    for local, canonical in alias_table:
        if local in table and table[local] != canonical:
            raise AliasConflictError(f"{local!r} maps to both {table[local]!r} and {canonical!r}")
        table[local] = canonical
    return table


def canonicalize_ids(
    corpus: Corpus,
    alias_table: Mapping[str, str] | Iterable[tuple[str, str]],
    protein_allowlist: Iterable[str] | None = None,
) -> tuple[Corpus, CanonicalizationReport]:
    """Rewrite all ids through the alias table, dropping anything unmapped.

    An id that already appears as a canonical value passes through unchanged,
    which makes the operation idempotent. The optional allowlist implements
    the human-only protein filter; it is matched against canonical ids.
    """
    table = _normalize_aliases(alias_table)
    canonical_values = set(table.values())
    allow = set(protein_allowlist) if protein_allowlist is not None else None

    def resolve(local_id: str) -> str | None:
        if local_id in table:
            return table[local_id]
        if local_id in canonical_values:
            return local_id
        return None

    proteins: dict[str, ProteinRecord] = {}
    dropped_p = disallowed = 0
    for pid, rec in corpus.proteins.items():
        cid = resolve(pid)
        if cid is None:
            dropped_p += 1
            continue
        if allow is not None and cid not in allow:
            disallowed += 1
            continue
        proteins[cid] = replace(rec, protein_id=cid)

    compounds: dict[str, CompoundRecord] = {}
    dropped_c = 0
    for cid0, rec in corpus.compounds.items():
        cid = resolve(cid0)
        if cid is None:
            dropped_c += 1
            continue
        compounds[cid] = replace(rec, compound_id=cid)

    interactions: list[InteractionRecord] = []
    dropped_i = 0
    for rec in corpus.interactions:
        p, c = resolve(rec.protein_id), resolve(rec.compound_id)
        if p is None or c is None or p not in proteins or c not in compounds:
            dropped_i += 1
            continue
        interactions.append(replace(rec, protein_id=p, compound_id=c))

    report = CanonicalizationReport(
        dropped_proteins=dropped_p,
        dropped_compounds=dropped_c,
        dropped_interactions=dropped_i,
        disallowed_proteins=disallowed,
    )
    return Corpus(proteins, compounds, tuple(interactions)), report


# ---------------------------------------------------------------------------
# TSV serialization (UTF-8, tab-separated, empty string for missing optionals)
# ---------------------------------------------------------------------------


def _interaction_row(rec: InteractionRecord) -> list[str]:
    m = rec.measurement
    return [
        rec.protein_id,
        rec.compound_id,
        str(rec.label),
        rec.source,
        m.type if m else "",
        repr(m.value) if m else "",
        m.units if m else "",
    ]


def interactions_to_tsv(interactions: Iterable[InteractionRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(INTERACTION_COLUMNS)
    for rec in interactions:
        w.writerow(_interaction_row(rec))
    return buf.getvalue()


def proteins_to_tsv(proteins: Iterable[ProteinRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(PROTEIN_COLUMNS)
    for p in proteins:
        w.writerow([p.protein_id, p.sequence, p.family.value, p.structure_path or ""])
    return buf.getvalue()


def compounds_to_tsv(compounds: Iterable[CompoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(COMPOUND_COLUMNS)
    for c in compounds:
        w.writerow([c.compound_id, c.smiles, c.conformer_path or ""])
    return buf.getvalue()


def save_corpus(corpus: Corpus, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    order = sorted(corpus.interactions, key=lambda r: (r.protein_id, r.compound_id, r.source))
    (directory / "interactions.tsv").write_text(interactions_to_tsv(order), encoding="utf-8")
    (directory / "proteins.tsv").write_text(
        proteins_to_tsv(sorted(corpus.proteins.values(), key=lambda p: p.protein_id)), encoding="utf-8"
    )
    (directory / "compounds.tsv").write_text(
        compounds_to_tsv(sorted(corpus.compounds.values(), key=lambda c: c.compound_id)), encoding="utf-8"
    )


def _read_tsv(path: Path, expected: list[str]) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            raise CorpusError(f"{path}: expected header {expected}, got {reader.fieldnames}")
        return list(reader)


def load_corpus(directory: str | Path) -> Corpus:
    directory = Path(directory)
    proteins = {}
    for row in _read_tsv(directory / "proteins.tsv", PROTEIN_COLUMNS):
        rec = ProteinRecord(
            protein_id=row["protein_id"],
            sequence=row["sequence"],
            family=Family(row["family"]),
            structure_path=row["structure_path"] or None,
        )
        proteins[rec.protein_id] = rec
    compounds = {}
    for row in _read_tsv(directory / "compounds.tsv", COMPOUND_COLUMNS):
        rec = CompoundRecord(
            compound_id=row["compound_id"],
            smiles=row["smiles"],
            conformer_path=row["conformer_path"] or None,
        )
        compounds[rec.compound_id] = rec
    interactions = []
    for row in _read_tsv(directory / "interactions.tsv", INTERACTION_COLUMNS):
        measurement = None
        if row["measurement_type"]:
            measurement = Measurement(
                type=row["measurement_type"],
                value=float(row["measurement_value"]),
                units=row["measurement_units"],
            )
        interactions.append(
            InteractionRecord(
                protein_id=row["protein_id"],
                compound_id=row["compound_id"],
                label=int(row["label"]),
                source=row["source"],
                measurement=measurement,
            )
        )
    return Corpus(proteins, compounds, tuple(interactions))
