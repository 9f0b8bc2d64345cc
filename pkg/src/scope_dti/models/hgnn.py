"""Heterogeneous graph encoder for proteins.

Each residue starts from a learned embedding of its type token. Per layer,
neighbor states are aggregated separately for each edge type through an
edge-type-specific weight, the per-type sums are added, projected by a
shared weight, then passed through ReLU and batch normalization over the
residue axis. No self term: an isolated residue aggregates a zero message.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..core import RESIDUE_ALPHABET
from ..featurize import EDGE_TYPES, ProteinGraph


@dataclass
class ProteinBatch:
    residue_types: torch.Tensor  # (total_M,)
    edges_by_type: dict[str, torch.Tensor]  # name -> (2, E) with batch offsets applied
    graph_id: torch.Tensor  # (total_M,)
    sizes: list[int]

    @property
    def n_graphs(self) -> int:
        return len(self.sizes)


def batch_proteins(graphs: list[ProteinGraph]) -> ProteinBatch:
    types, gid = [], []
    edges: dict[str, list[torch.Tensor]] = {name: [] for name in EDGE_TYPES}
    offset = 0
    for g_i, graph in enumerate(graphs):
        m = graph.n_residues
        types.append(torch.as_tensor(graph.residue_types, dtype=torch.long))
        gid.append(torch.full((m,), g_i, dtype=torch.long))
        for name in EDGE_TYPES:
            edges[name].append(torch.as_tensor(graph.edges_by_type[name] + offset, dtype=torch.long))
        offset += m
    return ProteinBatch(
        residue_types=torch.cat(types),
        edges_by_type={
            name: (torch.cat(elist, dim=1) if elist else torch.zeros(2, 0, dtype=torch.long))
            for name, elist in edges.items()
        },
        graph_id=torch.cat(gid),
        sizes=[g.n_residues for g in graphs],
    )


class HgnnLayer(nn.Module):
    def __init__(self, dim: int, edge_types: tuple[str, ...] = EDGE_TYPES):
        super().__init__()
        self.w_r = nn.ModuleDict({name: nn.Linear(dim, dim, bias=False) for name in edge_types})
        self.w_h = nn.Linear(dim, dim, bias=False)
        self.bn = nn.BatchNorm1d(dim)

    def forward(self, h: torch.Tensor, edges_by_type: dict[str, torch.Tensor]) -> torch.Tensor:
        agg = torch.zeros_like(h)
        for name, edges in edges_by_type.items():
            if edges.shape[1] == 0:
                continue
            src, dst = edges[0], edges[1]
            agg = agg.index_add(0, dst, self.w_r[name](h[src]))
        return self.bn(torch.relu(self.w_h(agg)))


class ProteinHgnn(nn.Module):
    def __init__(
        self,
        embedding_dim: int = 320,
        n_layers: int = 4,
        n_tokens: int = len(RESIDUE_ALPHABET),
        edge_types: tuple[str, ...] = EDGE_TYPES,
    ):
        super().__init__()
        self.embedding = nn.Embedding(n_tokens, embedding_dim)
        self.layers = nn.ModuleList(HgnnLayer(embedding_dim, edge_types) for _ in range(n_layers))

    def forward(self, batch: ProteinBatch) -> torch.Tensor:
        """Residue matrix for the whole batch, (total_M, dim)."""
        if int(batch.residue_types.max()) >= self.embedding.num_embeddings:
            raise ValueError("residue token index out of embedding range")
        h = self.embedding(batch.residue_types)
        for layer in self.layers:
            h = layer(h, batch.edges_by_type)
        return h
