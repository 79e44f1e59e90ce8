"""Sensitive-line selection from per-line embeddings.

Each line is scored by the mean of its embedding over the hidden dimension
and the line with the smallest score is selected as the fragment's
sensitive line. Selection happens on the non-detached embeddings, so the
line encoder receives gradient through the selected vector. Padded lines
are excluded by an infinity sentinel and ties go to the smallest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor


@dataclass
class SensitiveSelection:
    line_means: Tensor  # [b, k] per-line scalar scores
    index: Tensor  # [b] selected line per fragment
    vector: Tensor  # [b, h] embedding of the selected line


def line_means(line_embeddings: Tensor) -> Tensor:
    """Mean over the hidden dimension for every (fragment, line)."""
    if line_embeddings.ndim != 3:
        raise ValueError(f"expected [batch, lines, hidden], got {tuple(line_embeddings.shape)}")
    return line_embeddings.mean(dim=-1)


def select_sensitive(line_embeddings: Tensor, line_mask: Tensor, use_abs: bool = False) -> SensitiveSelection:
    """Pick the real line with the smallest mean from each fragment.

    With `use_abs` the score is the absolute value of the mean, i.e. the
    line whose semantics sit closest to zero. Raises if any fragment has no
    real line.
    """
    means = line_means(line_embeddings)
    b, k = means.shape
    if line_mask.shape != (b, k):
        raise ValueError(f"line_mask shape {tuple(line_mask.shape)} does not match [{b}, {k}]")
    real = line_mask.to(torch.bool)
    if not real.any(dim=1).all():
        raise ValueError("every fragment needs at least one unmasked line")

    scores = means.abs() if use_abs else means
    masked = torch.where(real, scores, torch.full_like(scores, float("inf")))
    # Smallest index among minima, independent of backend argmin tie behavior.
    min_vals = masked.min(dim=1, keepdim=True).values
    candidates = torch.where(masked == min_vals, torch.arange(k, device=means.device).expand(b, k), k)
    index = candidates.min(dim=1).values

    vector = line_embeddings[torch.arange(b, device=means.device), index]
    return SensitiveSelection(line_means=means, index=index, vector=vector)
