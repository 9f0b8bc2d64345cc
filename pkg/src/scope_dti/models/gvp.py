"""Geometric vector perceptron encoder for molecules.

Node state is a (scalar, vector) pair; scalar channels stay rotation
invariant, vector channels rotate with the input coordinates. Coordinates
are centered per molecule before becoming the initial vector channel, which
is what makes downstream predictions rigid-motion invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..featurize import MoleculeGraph


def _safe_norm(x: torch.Tensor, dim: int = -1, keepdim: bool = False) -> torch.Tensor:
    # sqrt with a floor so the gradient at the origin stays finite
    return torch.sqrt(torch.clamp((x**2).sum(dim=dim, keepdim=keepdim), min=1e-8))


class GvpLayer(nn.Module):
    """Map (s, v) -> (s', v'); vectors transform only through shared linear
    maps over the channel axis plus a sigmoid gate on their norms."""

    def __init__(
        self,
        in_dims: tuple[int, int],
        out_dims: tuple[int, int],
        activate: bool = True,
    ):
        super().__init__()
        self.si, self.vi = in_dims
        self.so, self.vo = out_dims
        self.activate = activate
        self.h = max(self.vi, self.vo)
        self.w_h = nn.Linear(self.vi, self.h, bias=False)
        self.w_mu = nn.Linear(self.h, self.vo, bias=False)
        self.w_s = nn.Linear(self.si + self.h, self.so)

    def forward(self, s: torch.Tensor, v: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        # s: (N, si); v: (N, vi, 3)
        v_h = self.w_h(v.transpose(-1, -2)).transpose(-1, -2)  # (N, h, 3)
        s_out = self.w_s(torch.cat([s, _safe_norm(v_h, dim=-1)], dim=-1))
        v_out = self.w_mu(v_h.transpose(-1, -2)).transpose(-1, -2)  # (N, vo, 3)
        if self.activate:
            s_out = torch.relu(s_out)
            gate = torch.sigmoid(_safe_norm(v_out, dim=-1, keepdim=True))
            v_out = v_out * gate
        return s_out, v_out


class GvpConvLayer(nn.Module):
    """One residual message-passing step.

    Messages come from an inner GVP over (neighbor state, edge feature),
    are summed over the neighborhood, and an outer GVP combines them with
    the node's own state before the residual add."""

    def __init__(self, node_dims: tuple[int, int], edge_dims: tuple[int, int], dropout: float = 0.1):
        super().__init__()
        sn, vn = node_dims
        se, ve = edge_dims
        self.inner = GvpLayer((sn + se, vn + ve), node_dims)
        self.outer = GvpLayer((2 * sn, 2 * vn), node_dims)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        s: torch.Tensor,
        v: torch.Tensor,
        edge_index: torch.Tensor,
        edge_s: torch.Tensor,
        edge_v: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        src, dst = edge_index[0], edge_index[1]
        msg_s, msg_v = self.inner(
            torch.cat([s[src], edge_s], dim=-1), torch.cat([v[src], edge_v], dim=-2)
        )
        agg_s = torch.zeros_like(s).index_add_(0, dst, msg_s)
        agg_v = torch.zeros_like(v).index_add_(0, dst, msg_v)
        upd_s, upd_v = self.outer(
            torch.cat([s, agg_s], dim=-1), torch.cat([v, agg_v], dim=-2)
        )
        upd_s = self.dropout(upd_s)
        upd_v = self.dropout(upd_v)
        return s + upd_s, v + upd_v


@dataclass
class MoleculeBatch:
    scalar: torch.Tensor  # (total_N, 74)
    vec0: torch.Tensor  # (total_N, 1, 3) centered coordinates
    edge_index: torch.Tensor  # (2, total_E)
    edge_rbf: torch.Tensor  # (total_E, 16)
    edge_vec: torch.Tensor  # (total_E, 1, 3)
    bond_edge_index: torch.Tensor  # (2, total_B) covalent bonds, both directions
    graph_id: torch.Tensor  # (total_N,)
    sizes: list[int]

    @property
    def n_graphs(self) -> int:
        return len(self.sizes)

    def to(self, *args, **kwargs) -> "MoleculeBatch":
        moved = {
            name: getattr(self, name).to(*args, **kwargs)
            for name in ("scalar", "vec0", "edge_rbf", "edge_vec")
        }
        return MoleculeBatch(
            scalar=moved["scalar"],
            vec0=moved["vec0"],
            edge_index=self.edge_index,
            edge_rbf=moved["edge_rbf"],
            edge_vec=moved["edge_vec"],
            bond_edge_index=self.bond_edge_index,
            graph_id=self.graph_id,
            sizes=self.sizes,
        )


def batch_molecules(graphs: list[MoleculeGraph]) -> MoleculeBatch:
    scalars, vecs, eidx, erbf, evec, bidx, gid = [], [], [], [], [], [], []
    offset = 0
    for g_i, graph in enumerate(graphs):
        n = graph.n_atoms
        coords = graph.atom_coords
        centered = coords - coords.mean(axis=0, keepdims=True)
        scalars.append(torch.as_tensor(graph.atom_scalar, dtype=torch.get_default_dtype()))
        vecs.append(torch.as_tensor(centered, dtype=torch.get_default_dtype()).unsqueeze(1))
        eidx.append(torch.as_tensor(graph.edge_index + offset, dtype=torch.long))
        erbf.append(torch.as_tensor(graph.edge_rbf, dtype=torch.get_default_dtype()))
        evec.append(torch.as_tensor(graph.edge_vec, dtype=torch.get_default_dtype()).unsqueeze(1))
        bidx.append(torch.as_tensor(graph.bond_edge_index + offset, dtype=torch.long))
        gid.append(torch.full((n,), g_i, dtype=torch.long))
        offset += n
    return MoleculeBatch(
        scalar=torch.cat(scalars),
        vec0=torch.cat(vecs),
        edge_index=torch.cat(eidx, dim=1) if eidx else torch.zeros(2, 0, dtype=torch.long),
        edge_rbf=torch.cat(erbf),
        edge_vec=torch.cat(evec),
        bond_edge_index=torch.cat(bidx, dim=1) if bidx else torch.zeros(2, 0, dtype=torch.long),
        graph_id=torch.cat(gid),
        sizes=[g.n_atoms for g in graphs],
    )


def to_padded(
    x: torch.Tensor, graph_id: torch.Tensor, sizes: list[int]
) -> tuple[torch.Tensor, torch.Tensor]:
    """Scatter concatenated node rows (total, D) into (B, max_n, D) + mask."""
    b, max_n = len(sizes), max(sizes) if sizes else 0
    out = x.new_zeros(b, max_n, x.shape[-1])
    mask = torch.zeros(b, max_n, dtype=torch.bool, device=x.device)
    pos = torch.cat([torch.arange(n) for n in sizes]) if sizes else torch.zeros(0, dtype=torch.long)
    out[graph_id, pos] = x
    mask[graph_id, pos] = True
    return out, mask


def segment_sum(x: torch.Tensor, graph_id: torch.Tensor, n_graphs: int) -> torch.Tensor:
    out = x.new_zeros(n_graphs, *x.shape[1:])
    return out.index_add_(0, graph_id, x)


class MoleculeGvpEncoder(nn.Module):
    """Embedding GVPs lift raw node/edge features to the hidden dims, then
    residual GVP layers run message passing; pooling (when enabled) is a
    global add over the scalar channels."""

    def __init__(
        self,
        node_in: tuple[int, int] = (74, 1),
        node_hidden: tuple[int, int] = (320, 64),
        edge_in: tuple[int, int] = (16, 1),
        edge_hidden: tuple[int, int] = (32, 1),
        n_layers: int = 3,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.node_hidden = node_hidden
        self.node_embed = GvpLayer(node_in, node_hidden)
        self.edge_embed = GvpLayer(edge_in, edge_hidden)
        self.layers = nn.ModuleList(
            GvpConvLayer(node_hidden, edge_hidden, dropout) for _ in range(n_layers)
        )

    def node_states(self, batch: MoleculeBatch) -> tuple[torch.Tensor, torch.Tensor]:
        s, v = self.node_embed(batch.scalar, batch.vec0)
        edge_s, edge_v = self.edge_embed(batch.edge_rbf, batch.edge_vec)
        for layer in self.layers:
            s, v = layer(s, v, batch.edge_index, edge_s, edge_v)
        return s, v

    def forward(self, batch: MoleculeBatch) -> torch.Tensor:
        """Pooled molecule representations, (B, scalar_dim)."""
        s, _ = self.node_states(batch)
        return segment_sum(s, batch.graph_id, batch.n_graphs)


def global_add_pool(node_scalars: torch.Tensor) -> torch.Tensor:
    """Componentwise sum over the node axis of a single graph's (N, D) rows."""
    if node_scalars.shape[0] == 0:
        raise ValueError("global_add_pool needs at least one node")
    return node_scalars.sum(dim=0)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random proper rotation via QR of a Gaussian matrix."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q
