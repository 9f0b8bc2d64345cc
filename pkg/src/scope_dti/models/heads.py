"""Bilinear attention over drug rows and protein residues, pooling, decoder.

The attention map entry for drug row i and residue j is
q . (act(U^T h_d_i) * act(V^T h_p_j)) per head; U and V are shared across
heads, each head has its own q, and head outputs are averaged after bilinear
pooling. Sum pooling then shrinks the joint vector by a fixed window before
the two-layer sigmoid decoder.
"""

from __future__ import annotations

import math

import torch
from torch import nn

PROB_EPS = 1e-7


def _activation(name: str):
    if name == "relu":
        return torch.relu
    if name == "sigmoid":
        return torch.sigmoid
    raise ValueError(f"unknown activation {name!r}")


def uniform_fan_in_(tensor: torch.Tensor, fan_in: int) -> None:
    bound = 1.0 / math.sqrt(fan_in)
    with torch.no_grad():
        tensor.uniform_(-bound, bound)


class BilinearAttention(nn.Module):
    def __init__(
        self,
        drug_dim: int,
        protein_dim: int,
        latent_dim: int = 768,
        n_heads: int = 2,
        activation: str = "relu",
    ):
        super().__init__()
        if n_heads < 1:
            raise ValueError("need at least one attention head")
        self.latent_dim = latent_dim
        self.n_heads = n_heads
        self.act = _activation(activation)
        self.u = nn.Parameter(torch.empty(drug_dim, latent_dim))
        self.v = nn.Parameter(torch.empty(protein_dim, latent_dim))
        self.q = nn.Parameter(torch.empty(n_heads, latent_dim))
        uniform_fan_in_(self.u, drug_dim)
        uniform_fan_in_(self.v, protein_dim)
        uniform_fan_in_(self.q, latent_dim)

    def _projections(self, h_d, h_p, drug_mask, protein_mask):
        a = self.act(h_d @ self.u)  # (B, N, K)
        b = self.act(h_p @ self.v)  # (B, M, K)
        if drug_mask is not None:
            a = a * drug_mask.unsqueeze(-1)
        if protein_mask is not None:
            b = b * protein_mask.unsqueeze(-1)
        return a, b

    def attention_map(
        self,
        h_d: torch.Tensor,
        h_p: torch.Tensor,
        drug_mask: torch.Tensor | None = None,
        protein_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Pairwise interaction maps, (B, heads, N, M)."""
        a, b = self._projections(h_d, h_p, drug_mask, protein_mask)
        return torch.einsum("hk,bnk,bmk->bhnm", self.q, a, b)

    def forward(
        self,
        h_d: torch.Tensor,
        h_p: torch.Tensor,
        drug_mask: torch.Tensor | None = None,
        protein_mask: torch.Tensor | None = None,
        return_attention: bool = False,
    ):
        """Joint representation f' (B, K), heads averaged."""
        a, b = self._projections(h_d, h_p, drug_mask, protein_mask)
        att = torch.einsum("hk,bnk,bmk->bhnm", self.q, a, b)
        joint = torch.einsum("bnk,bhnm,bmk->bhk", a, att, b).mean(dim=1)
        if return_attention:
            return joint, att
        return joint


def sum_pool(f: torch.Tensor, window: int = 3) -> torch.Tensor:
    """Non-overlapping window sums along the last axis; window must divide it."""
    k = f.shape[-1]
    if k % window != 0:
        raise ValueError(f"window {window} does not divide feature dim {k}")
    return f.reshape(*f.shape[:-1], k // window, window).sum(dim=-1)


class Decoder(nn.Module):
    """Hidden affine + ReLU, then the output affine + logistic sigmoid."""

    def __init__(self, in_dim: int, hidden_dim: int = 512):
        super().__init__()
        self.hidden = nn.Linear(in_dim, hidden_dim)
        self.out = nn.Linear(hidden_dim, 1)
        for layer in (self.hidden, self.out):
            uniform_fan_in_(layer.weight, layer.in_features)
            nn.init.zeros_(layer.bias)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        if not torch.isfinite(f).all():
            raise ValueError("non-finite decoder input")
        logit = self.out(torch.relu(self.hidden(f))).squeeze(-1)
        return torch.sigmoid(logit)


def interaction_loss(
    probs: torch.Tensor,
    labels: torch.Tensor,
    parameters=None,
    weight_decay: float = 0.0,
) -> torch.Tensor:
    """Summed cross entropy plus (lambda/2)||theta||^2.

    Probabilities are clamped to [eps, 1-eps] so the loss stays finite;
    batch-norm running statistics are buffers, not parameters, so they never
    enter the regularizer."""
    p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    y = labels.to(p.dtype)
    data_term = -(y * torch.log(p) + (1.0 - y) * torch.log(1.0 - p)).sum()
    if weight_decay > 0.0 and parameters is not None:
        reg = sum((w**2).sum() for w in parameters)
        return data_term + 0.5 * weight_decay * reg
    return data_term
