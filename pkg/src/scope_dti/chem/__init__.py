from .smiles import Atom, Bond, InvalidSmilesError, Molecule, parse_smiles
from .fingerprint import circular_fingerprint, tanimoto
from .sdf import parse_sdf, write_sdf
from .conformer import (
    ConformerProvider,
    EmbeddedConformerProvider,
    ExternalToolConformerProvider,
    SdfConformerProvider,
    default_conformer_provider,
)

__all__ = [
    "Atom",
    "Bond",
    "InvalidSmilesError",
    "Molecule",
    "parse_smiles",
    "circular_fingerprint",
    "tanimoto",
    "parse_sdf",
    "write_sdf",
    "ConformerProvider",
    "EmbeddedConformerProvider",
    "ExternalToolConformerProvider",
    "SdfConformerProvider",
    "default_conformer_provider",
]
