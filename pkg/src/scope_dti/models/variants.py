"""Encoder variants and the assembled interaction model.

The full model is: protein HGNN + pooled-molecule GVP + bilinear attention +
decoder. The registry also carries the ablation encoders (one-hot and CNN
sequence encoders, covalent-bond 2D graph, fingerprint projection, unpooled
GVP) and the MLP-only backbone that bypasses attention entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import torch
from torch import nn

from ..core import RESIDUE_ALPHABET
from .gvp import MoleculeBatch, MoleculeGvpEncoder, segment_sum, to_padded
from .heads import BilinearAttention, Decoder, interaction_loss, sum_pool, uniform_fan_in_
from .hgnn import ProteinBatch, ProteinHgnn

PROTEIN_VARIANTS = ("hgnn3d", "onehot1d", "cnn1d")
COMPOUND_VARIANTS = ("gvp3d_pooled", "gvp3d_unpooled", "graph2d", "fingerprint1d")
BACKBONES = ("ban", "mlp")

VARIANT_LABELS = {
    "hgnn3d": "3D Graph HGNN",
    "onehot1d": "1D Onehot",
    "cnn1d": "1D CNN",
    "gvp3d_pooled": "3D Graph GVP",
    "gvp3d_unpooled": "3D Graph GVP no Pooling",
    "graph2d": "2D Graph",
    "fingerprint1d": "1D Fingerprint",
    "ban": "BAN+MLP",
    "mlp": "MLP",
}


@dataclass
class ModelConfig:
    protein_variant: str = "hgnn3d"
    compound_variant: str = "gvp3d_pooled"
    backbone: str = "ban"
    protein_dim: int = 320
    protein_layers: int = 4
    node_hidden: tuple[int, int] = (320, 64)
    edge_hidden: tuple[int, int] = (32, 1)
    gvp_layers: int = 3
    dropout: float = 0.1
    latent_dim: int = 768
    n_heads: int = 2
    pool_window: int = 3
    activation: str = "relu"
    decoder_hidden: int = 512
    max_atoms: int = 300
    fingerprint_bits: int = 2048
    cnn_kernels: tuple[int, ...] = (3, 6, 9)

    def __post_init__(self):
        if self.protein_variant not in PROTEIN_VARIANTS:
            raise ValueError(f"unknown protein variant {self.protein_variant!r}")
        if self.compound_variant not in COMPOUND_VARIANTS:
            raise ValueError(f"unknown compound variant {self.compound_variant!r}")
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.latent_dim % self.pool_window != 0:
            raise ValueError("pool window must divide the latent dim")

    def label(self) -> str:
        return " / ".join(
            VARIANT_LABELS[v] for v in (self.protein_variant, self.compound_variant, self.backbone)
        )


@dataclass
class PairBatch:
    """One minibatch of (compound, protein) pairs.

    Proteins are deduplicated: `proteins` holds each distinct protein once
    and `protein_slot[i]` maps pair i to its row."""

    molecules: MoleculeBatch
    proteins: ProteinBatch
    protein_slot: torch.Tensor  # (B,)
    fingerprints: Optional[torch.Tensor] = None  # (B, n_bits)
    labels: Optional[torch.Tensor] = None  # (B,)

    @property
    def n_pairs(self) -> int:
        return int(self.protein_slot.shape[0])


class OneHotProteinEncoder(nn.Module):
    """Per-residue one-hot rows projected to the working dim."""

    def __init__(self, dim: int, n_tokens: int = len(RESIDUE_ALPHABET)):
        super().__init__()
        self.n_tokens = n_tokens
        self.proj = nn.Linear(n_tokens, dim, bias=False)
        uniform_fan_in_(self.proj.weight, n_tokens)

    def forward(self, batch: ProteinBatch):
        onehot = nn.functional.one_hot(batch.residue_types, self.n_tokens).to(
            self.proj.weight.dtype
        )
        return to_padded(self.proj(onehot), batch.graph_id, batch.sizes)


class CnnProteinEncoder(nn.Module):
    """Embedding followed by stacked 1D convolutions (valid padding), so the
    output has M' = M - sum(kernel - 1) rows per protein."""

    def __init__(self, dim: int, kernels: tuple[int, ...] = (3, 6, 9), n_tokens: int = len(RESIDUE_ALPHABET)):
        super().__init__()
        self.embedding = nn.Embedding(n_tokens, dim)
        self.convs = nn.ModuleList(nn.Conv1d(dim, dim, k) for k in kernels)
        self.shrink = sum(k - 1 for k in kernels)

    def forward(self, batch: ProteinBatch):
        rows, sizes = [], []
        start = 0
        for size in batch.sizes:
            tokens = batch.residue_types[start : start + size]
            start += size
            if size <= self.shrink:
                raise ValueError(f"sequence length {size} too short for kernels (needs > {self.shrink})")
            x = self.embedding(tokens).T.unsqueeze(0)  # (1, dim, M)
            for conv in self.convs:
                x = torch.relu(conv(x))
            out = x.squeeze(0).T  # (M', dim)
            rows.append(out)
            sizes.append(out.shape[0])
        flat = torch.cat(rows)
        graph_id = torch.cat(
            [torch.full((n,), i, dtype=torch.long) for i, n in enumerate(sizes)]
        )
        return to_padded(flat, graph_id, sizes)


class Graph2dEncoder(nn.Module):
    """Message passing over covalent bonds only; pooled scalar output."""

    def __init__(self, dim: int, in_dim: int = 74, n_layers: int = 3):
        super().__init__()
        self.lift = nn.Linear(in_dim, dim)
        self.self_w = nn.ModuleList(nn.Linear(dim, dim) for _ in range(n_layers))
        self.neigh_w = nn.ModuleList(nn.Linear(dim, dim, bias=False) for _ in range(n_layers))

    def forward(self, batch: MoleculeBatch) -> torch.Tensor:
        h = torch.relu(self.lift(batch.scalar))
        src, dst = batch.bond_edge_index[0], batch.bond_edge_index[1]
        for self_w, neigh_w in zip(self.self_w, self.neigh_w):
            agg = torch.zeros_like(h).index_add_(0, dst, h[src])
            h = torch.relu(self_w(h) + neigh_w(agg))
        return segment_sum(h, batch.graph_id, batch.n_graphs)


class FingerprintEncoder(nn.Module):
    def __init__(self, dim: int, n_bits: int = 2048):
        super().__init__()
        self.proj = nn.Linear(n_bits, dim)
        uniform_fan_in_(self.proj.weight, n_bits)
        nn.init.zeros_(self.proj.bias)

    def forward(self, fingerprints: torch.Tensor) -> torch.Tensor:
        return self.proj(fingerprints)


class ScopeModel(nn.Module):
    """Variant-configurable interaction model; forward returns probabilities."""

    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        cfg = self.config

        if cfg.protein_variant == "hgnn3d":
            self.protein_encoder = ProteinHgnn(cfg.protein_dim, cfg.protein_layers)
        elif cfg.protein_variant == "onehot1d":
            self.protein_encoder = OneHotProteinEncoder(cfg.protein_dim)
        else:
            self.protein_encoder = CnnProteinEncoder(cfg.protein_dim, cfg.cnn_kernels)

        self.compound_dim = cfg.node_hidden[0]
        if cfg.compound_variant in ("gvp3d_pooled", "gvp3d_unpooled"):
            self.compound_encoder = MoleculeGvpEncoder(
                node_hidden=cfg.node_hidden,
                edge_hidden=cfg.edge_hidden,
                n_layers=cfg.gvp_layers,
                dropout=cfg.dropout,
            )
        elif cfg.compound_variant == "graph2d":
            self.compound_encoder = Graph2dEncoder(self.compound_dim)
        else:
            self.compound_encoder = FingerprintEncoder(self.compound_dim, cfg.fingerprint_bits)

        if cfg.backbone == "ban":
            self.ban = BilinearAttention(
                self.compound_dim, cfg.protein_dim, cfg.latent_dim, cfg.n_heads, cfg.activation
            )
            self.decoder = Decoder(cfg.latent_dim // cfg.pool_window, cfg.decoder_hidden)
        else:
            self.ban = None
            self.decoder = Decoder(self.compound_dim + cfg.protein_dim, cfg.decoder_hidden)

    # -- encoding -----------------------------------------------------------

    def _encode_proteins(self, proteins: ProteinBatch):
        if isinstance(self.protein_encoder, ProteinHgnn):
            rows = self.protein_encoder(proteins)
            return to_padded(rows, proteins.graph_id, proteins.sizes)
        return self.protein_encoder(proteins)

    def _encode_compounds(self, batch: PairBatch):
        cfg = self.config
        if cfg.compound_variant == "gvp3d_pooled":
            pooled = self.compound_encoder(batch.molecules)  # (B, D)
            h_d = pooled.unsqueeze(1)
            mask = torch.ones(h_d.shape[0], 1, dtype=torch.bool, device=h_d.device)
            return h_d, mask
        if cfg.compound_variant == "gvp3d_unpooled":
            s, _ = self.compound_encoder.node_states(batch.molecules)
            h_d, mask = to_padded(s, batch.molecules.graph_id, batch.molecules.sizes)
            if h_d.shape[1] > cfg.max_atoms:
                h_d, mask = h_d[:, : cfg.max_atoms], mask[:, : cfg.max_atoms]
            return h_d, mask
        if cfg.compound_variant == "graph2d":
            pooled = self.compound_encoder(batch.molecules)
            h_d = pooled.unsqueeze(1)
            mask = torch.ones(h_d.shape[0], 1, dtype=torch.bool, device=h_d.device)
            return h_d, mask
        if batch.fingerprints is None:
            raise ValueError("fingerprint variant needs fingerprints in the batch")
        h_d = self.compound_encoder(batch.fingerprints).unsqueeze(1)
        mask = torch.ones(h_d.shape[0], 1, dtype=torch.bool, device=h_d.device)
        return h_d, mask

    # -- forward ------------------------------------------------------------

    def forward(self, batch: PairBatch, return_attention: bool = False):
        h_p_all, p_mask_all = self._encode_proteins(batch.proteins)
        h_p = h_p_all[batch.protein_slot]
        p_mask = p_mask_all[batch.protein_slot]
        h_d, d_mask = self._encode_compounds(batch)

        if self.ban is not None:
            fd = d_mask.to(h_d.dtype)
            fp = p_mask.to(h_p.dtype)
            out = self.ban(h_d, h_p, fd, fp, return_attention=return_attention)
            joint, att = out if return_attention else (out, None)
            f = sum_pool(joint, self.config.pool_window)
            probs = self.decoder(f)
        else:
            att = None
            drug_vec = (h_d * d_mask.unsqueeze(-1).to(h_d.dtype)).sum(dim=1)
            prot_vec = (h_p * p_mask.unsqueeze(-1).to(h_p.dtype)).sum(dim=1)
            probs = self.decoder(torch.cat([drug_vec, prot_vec], dim=-1))
        if return_attention:
            return probs, att, d_mask, p_mask
        return probs

    def loss(self, batch: PairBatch, weight_decay: float = 1e-4) -> tuple[torch.Tensor, torch.Tensor]:
        probs = self(batch)
        assert batch.labels is not None
        return interaction_loss(probs, batch.labels, self.parameters(), weight_decay), probs
