"""Source ingestion, cutoff-based labeling, and conservative multi-source merge.

Raw bioactivity tables arrive with mixed units and mixed evidence types. Each
row either carries a precomputed binary label or a measurement that a LabelRule
turns into one. Merging is conservative: a pair is positive only if every
source says positive; one negative vote wins.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core import (
    CompoundRecord,
    Corpus,
    CorpusError,
    InteractionRecord,
    Measurement,
    ProteinRecord,
)

# unit -> multiplier to molar
_UNIT_TO_MOLAR = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9, "pm": 1e-12}


def to_molar(value: float, units: str) -> float:
    key = units.strip().lower()
    if key not in _UNIT_TO_MOLAR:
        raise CorpusError(f"unknown concentration unit {units!r}")
    return value * _UNIT_TO_MOLAR[key]


@dataclass(frozen=True)
class LabelRule:
    measurement_type: str
    positive_cutoff: float
    negative_cutoff: float
    units: str = "M"
    direction: str = "lower_is_active"  # or higher_is_active

    def __post_init__(self):
        if self.direction not in ("lower_is_active", "higher_is_active"):
            raise CorpusError(f"bad direction {self.direction!r}")
        pos, neg = self._normalized()
        if self.direction == "lower_is_active" and not pos < neg:
            raise CorpusError(
                f"{self.measurement_type}: cutoffs overlap (positive {pos} must be < negative {neg})"
            )
        if self.direction == "higher_is_active" and not pos > neg:
            raise CorpusError(
                f"{self.measurement_type}: cutoffs overlap (positive {pos} must be > negative {neg})"
            )

    def _normalized(self) -> tuple[float, float]:
        if self.units.strip().lower() in _UNIT_TO_MOLAR:
            return to_molar(self.positive_cutoff, self.units), to_molar(self.negative_cutoff, self.units)
        return self.positive_cutoff, self.negative_cutoff

    def classify(self, measurement: Measurement) -> int | None:
        """1 positive, 0 negative, None when the value sits between the cutoffs."""
        pos, neg = self._normalized()
        if self.units.strip().lower() in _UNIT_TO_MOLAR:
            value = to_molar(measurement.value, measurement.units)
        else:
            if measurement.units.strip().lower() != self.units.strip().lower():
                raise CorpusError(
                    f"{self.measurement_type}: unit {measurement.units!r} does not match rule unit {self.units!r}"
                )
            value = measurement.value
        if self.direction == "lower_is_active":
            if value <= pos:
                return 1
            if value >= neg:
                return 0
            return None
        if value >= pos:
            return 1
        if value <= neg:
            return 0
        return None


# Used only when the operator supplies no rule file. Placeholder thresholds:
# affinity-type readouts positive at <= 1 uM, negative at >= 10 uM.
DEFAULT_LABEL_RULES = [
    LabelRule(t, positive_cutoff=1.0, negative_cutoff=10.0, units="uM")
    for t in ("IC50", "Ki", "Kd", "EC50")
]


def load_label_rules(path: str | Path) -> list[LabelRule]:
    """One INI section per measurement type:

        [IC50]
        direction = lower_is_active
        positive = 1 uM
        negative = 10 uM
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise CorpusError(f"cannot read rule file {path}")
    rules = []
    for section in parser.sections():
        pos_val, pos_unit = _split_quantity(parser.get(section, "positive"))
        neg_val, neg_unit = _split_quantity(parser.get(section, "negative"))
        if pos_unit != neg_unit:
            raise CorpusError(f"[{section}]: positive/negative cutoffs use different units")
        rules.append(
            LabelRule(
                measurement_type=section,
                positive_cutoff=pos_val,
                negative_cutoff=neg_val,
                units=pos_unit,
                direction=parser.get(section, "direction", fallback="lower_is_active"),
            )
        )
    return rules


def _split_quantity(text: str) -> tuple[float, str]:
    parts = text.strip().split()
    if len(parts) == 1:
        return float(parts[0]), "M"
    return float(parts[0]), parts[1]


@dataclass(frozen=True)
class RawRow:
    protein_ref: str
    compound_ref: str
    smiles: str = ""
    label: int | None = None
    measurement: Measurement | None = None


@dataclass
class SourceTable:
    source_name: str
    rows: list[RawRow] = field(default_factory=list)
    skipped: int = 0


class SchemaError(CorpusError):
    pass


def ingest_source(path: str | Path, schema_map: dict[str, str], source_name: str | None = None) -> SourceTable:
    """Parse one TSV/CSV source through a column-name schema map.

    schema_map keys: protein, compound, and either label or
    measurement_type/measurement_value/measurement_units (smiles optional).
    Malformed rows are skipped and counted, not fatal.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"source file not found: {path}")
    has_label = "label" in schema_map
    has_measurement = all(
        k in schema_map for k in ("measurement_type", "measurement_value", "measurement_units")
    )
    if not (has_label or has_measurement):
        raise SchemaError("schema_map must name a label column or the three measurement columns")
    delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        missing = [col for col in schema_map.values() if col not in header]
        if missing:
            raise SchemaError(f"{path.name}: schema_map references absent columns {missing}")
        table = SourceTable(source_name or path.stem)
        for row in reader:
            parsed = _parse_row(row, schema_map, has_label)
            if parsed is None:
                table.skipped += 1
            else:
                table.rows.append(parsed)
    return table


def _parse_row(row: dict[str, str], schema_map: dict[str, str], has_label: bool) -> RawRow | None:
    protein = (row.get(schema_map["protein"]) or "").strip()
    compound = (row.get(schema_map["compound"]) or "").strip()
    if not protein or not compound:
        return None
    smiles = (row.get(schema_map["smiles"]) or "").strip() if "smiles" in schema_map else ""
    if has_label:
        raw = (row.get(schema_map["label"]) or "").strip()
        if raw not in ("0", "1"):
            return None
        return RawRow(protein, compound, smiles, label=int(raw))
    try:
        measurement = Measurement(
            type=(row.get(schema_map["measurement_type"]) or "").strip(),
            value=float(row.get(schema_map["measurement_value"]) or ""),
            units=(row.get(schema_map["measurement_units"]) or "").strip(),
        )
    except ValueError:
        return None
    if not measurement.type or not measurement.units:
        return None
    return RawRow(protein, compound, smiles, measurement=measurement)


@dataclass(frozen=True)
class LabelingReport:
    labeled: int = 0
    indeterminate_dropped: int = 0
    no_rule_dropped: int = 0


def apply_label_rules(
    table: SourceTable, rules: Iterable[LabelRule]
) -> tuple[list[InteractionRecord], LabelingReport]:
    """Turn raw rows into labeled interaction records.

    Precomputed labels pass through. Measurements inside the indeterminate
    band, or of a type no rule covers, are dropped under separate counters.
    """
    by_type = {r.measurement_type.upper(): r for r in rules}
    records: list[InteractionRecord] = []
    indeterminate = no_rule = 0
    for row in table.rows:
        if row.label is not None:
            records.append(
                InteractionRecord(row.protein_ref, row.compound_ref, row.label, table.source_name)
            )
            continue
        assert row.measurement is not None
        rule = by_type.get(row.measurement.type.upper())
        if rule is None:
            no_rule += 1
            continue
        label = rule.classify(row.measurement)
        if label is None:
            indeterminate += 1
            continue
        records.append(
            InteractionRecord(
                row.protein_ref, row.compound_ref, label, table.source_name, row.measurement
            )
        )
    return records, LabelingReport(len(records), indeterminate, no_rule)


def _collapse_within_source(records: Iterable[InteractionRecord]) -> list[InteractionRecord]:
    """Duplicate rows within one source collapse by majority label, ties negative."""
    votes: dict[tuple[str, str, str], list[InteractionRecord]] = {}
    for rec in records:
        votes.setdefault((rec.protein_id, rec.compound_id, rec.source), []).append(rec)
    out = []
    for (pid, cid, source), recs in sorted(votes.items()):
        positives = sum(r.label for r in recs)
        label = 1 if positives * 2 > len(recs) else 0
        out.append(InteractionRecord(pid, cid, label, source))
    return out


def merge_interactions(records: Iterable[InteractionRecord]) -> list[InteractionRecord]:
    """Conservative cross-source merge: positive only when every source agrees.

    Output has one record per (protein, compound) with provenance joined as a
    sorted '+'-separated source list; deterministic for any input order.
    """
    collapsed = _collapse_within_source(records)
    merged: dict[tuple[str, str], tuple[int, set[str]]] = {}
    for rec in collapsed:
        key = rec.pair
        label, sources = merged.get(key, (1, set()))
        merged[key] = (min(label, rec.label), sources | {rec.source})
    return [
        InteractionRecord(pid, cid, label, "+".join(sorted(sources)))
        for (pid, cid), (label, sources) in sorted(merged.items())
    ]


def merge_sources(
    records: Iterable[InteractionRecord],
    proteins: Iterable[ProteinRecord],
    compounds: Iterable[CompoundRecord],
) -> Corpus:
    interactions = merge_interactions(records)
    return Corpus.build(proteins, compounds, interactions)


@dataclass(frozen=True)
class StatsReport:
    n_compounds: int
    n_targets: int
    n_interactions: int
    n_positive: int
    family_breakdown: dict[str, int]

    def as_table(self) -> str:
        lines = [
            "metric\tvalue",
            f"compounds\t{self.n_compounds}",
            f"targets\t{self.n_targets}",
            f"interactions\t{self.n_interactions}",
            f"positive_interactions\t{self.n_positive}",
        ]
        for family, count in sorted(self.family_breakdown.items()):
            lines.append(f"family:{family}\t{count}")
        return "\n".join(lines) + "\n"


def corpus_stats(corpus: Corpus) -> StatsReport:
    """Counts of distinct interacting compounds/targets plus per-family protein counts."""
    families: dict[str, int] = {}
    for prot in corpus.proteins.values():
        families[prot.family.value] = families.get(prot.family.value, 0) + 1
    return StatsReport(
        n_compounds=len(corpus.interacting_compound_ids()),
        n_targets=len(corpus.interacting_protein_ids()),
        n_interactions=len(corpus.interactions),
        n_positive=sum(r.label for r in corpus.interactions),
        family_breakdown=families,
    )
