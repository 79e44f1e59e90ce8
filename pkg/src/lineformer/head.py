"""Fusion of the three branch representations and the prediction head."""

from __future__ import annotations

import torch
from torch import Tensor, nn

BCE_EPS = 1e-7


def fuse(structure_vec: Tensor, sensitive_vec: Tensor, global_vec: Tensor) -> Tensor:
    """Concatenate [structure, sensitive-line, global] into [b, 3h]."""
    if not structure_vec.shape == sensitive_vec.shape == global_vec.shape:
        raise ValueError(
            "branch widths differ: "
            f"{tuple(structure_vec.shape)}, {tuple(sensitive_vec.shape)}, {tuple(global_vec.shape)}"
        )
    return torch.cat([structure_vec, sensitive_vec, global_vec], dim=-1)


class ClassifierHead(nn.Module):
    """Two-layer MLP (3h -> h -> 1) with a sigmoid output.

    `threshold` is the default decision boundary applied by evaluation:
    label 1 iff probability >= threshold.
    """

    def __init__(self, hidden: int, threshold: float = 0.5) -> None:
        super().__init__()
        self.hidden = hidden
        self.threshold = threshold
        self.dense = nn.Linear(3 * hidden, hidden)
        self.act = nn.Tanh()
        self.out = nn.Linear(hidden, 1)

    def forward(self, fused: Tensor) -> Tensor:
        if fused.ndim != 2 or fused.shape[1] != 3 * self.hidden:
            raise ValueError(f"expected [batch, {3 * self.hidden}] input, got {tuple(fused.shape)}")
        return self.out(self.act(self.dense(fused))).squeeze(-1)


def predict(head: ClassifierHead, fused: Tensor) -> Tensor:
    """Vulnerability probability per fragment, in (0, 1)."""
    return torch.sigmoid(head(fused))


def bce_loss(labels: Tensor, probabilities: Tensor) -> Tensor:
    """Mean binary cross-entropy, -y*log(p) - (1-y)*log(1-p) over the batch.

    Probabilities are clamped to [eps, 1-eps] so saturated predictions keep
    the loss finite. The selected-probability form makes bce(1, q) and
    bce(0, 1-q) land on the identical float whenever 1-q is exact.
    """
    if labels.shape != probabilities.shape:
        raise ValueError(f"labels {tuple(labels.shape)} and probabilities {tuple(probabilities.shape)} differ")
    if not torch.logical_or(labels == 0, labels == 1).all():
        raise ValueError("labels must be 0 or 1")
    p = probabilities.clamp(BCE_EPS, 1.0 - BCE_EPS)
    chosen = torch.where(labels.to(torch.bool), p, 1.0 - p)
    return (-torch.log(chosen)).mean()
