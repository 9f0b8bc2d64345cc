"""Fingerprint index and similarity search over the corpus compounds."""

from __future__ import annotations

from dataclasses import dataclass

from .chem.fingerprint import circular_fingerprint, tanimoto
from .chem.smiles import InvalidSmilesError, parse_smiles
from .core import Corpus

SIMILARITY_THRESHOLD = 0.9  # hits must be strictly above


@dataclass(frozen=True)
class SearchHit:
    compound_id: str
    smiles: str
    similarity: float


class FingerprintIndex:
    """In-memory compound_id -> (fingerprint, smiles) map; built once at startup."""

    def __init__(self, radius: int = 2, n_bits: int = 2048):
        self.radius = radius
        self.n_bits = n_bits
        self._entries: dict[str, tuple[int, str]] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, compound_id: str, smiles: str, fingerprint: int | None = None) -> None:
        if fingerprint is None:
            fingerprint = circular_fingerprint(smiles, self.radius, self.n_bits)
        self._entries[compound_id] = (fingerprint, smiles)

    @classmethod
    def from_corpus(cls, corpus: Corpus, radius: int = 2, n_bits: int = 2048) -> "FingerprintIndex":
        index = cls(radius, n_bits)
        for compound in corpus.compounds.values():
            index.add(compound.compound_id, compound.smiles)
        return index

    def search_by_fingerprint(
        self, fingerprint: int, threshold: float = SIMILARITY_THRESHOLD
    ) -> list[SearchHit]:
        hits = []
        for compound_id, (fp, smiles) in self._entries.items():
            similarity = tanimoto(fingerprint, fp)
            if similarity > threshold:  # strictly greater, boundary excluded
                hits.append(SearchHit(compound_id, smiles, similarity))
        hits.sort(key=lambda h: (-h.similarity, h.compound_id))
        return hits

    def search(self, smiles: str, threshold: float = SIMILARITY_THRESHOLD) -> list[SearchHit]:
        """All indexed compounds with Tanimoto similarity strictly above the
        threshold, most similar first. Raises InvalidSmilesError with a parse
        diagnostic on a bad query."""
        query = circular_fingerprint(smiles, self.radius, self.n_bits)
        return self.search_by_fingerprint(query, threshold)


def validate_query_smiles(smiles: str) -> None:
    parse_smiles(smiles)  # raises InvalidSmilesError with the diagnostic
