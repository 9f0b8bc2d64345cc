from .gvp import (
    GvpConvLayer,
    GvpLayer,
    MoleculeBatch,
    MoleculeGvpEncoder,
    batch_molecules,
    global_add_pool,
    random_rotation,
    segment_sum,
    to_padded,
)
from .heads import BilinearAttention, Decoder, interaction_loss, sum_pool
from .hgnn import ProteinBatch, ProteinHgnn, batch_proteins
from .variants import (
    COMPOUND_VARIANTS,
    PROTEIN_VARIANTS,
    VARIANT_LABELS,
    ModelConfig,
    PairBatch,
    ScopeModel,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "GvpConvLayer",
    "GvpLayer",
    "MoleculeBatch",
    "MoleculeGvpEncoder",
    "batch_molecules",
    "global_add_pool",
    "random_rotation",
    "segment_sum",
    "to_padded",
    "BilinearAttention",
    "Decoder",
    "interaction_loss",
    "sum_pool",
    "ProteinBatch",
    "ProteinHgnn",
    "batch_proteins",
    "COMPOUND_VARIANTS",
    "PROTEIN_VARIANTS",
    "VARIANT_LABELS",
    "ModelConfig",
    "PairBatch",
    "ScopeModel",
    "load_checkpoint",
    "save_checkpoint",
]
