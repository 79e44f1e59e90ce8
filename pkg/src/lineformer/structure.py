"""Structure branch: gradient-detached transformer over line vectors.

The structure encoder treats each code fragment as a sequence of line
vectors, adds a position encoding indexed by line number, and runs a
transformer stack over it. Its input is detached from the line encoder so
this branch only learns relationships *between* line meanings; the line
encoder itself is trained through the other branches.
"""

from __future__ import annotations

from dataclasses import dataclass

from torch import Tensor, nn

from .encoder import TransformerLayer, sinusoidal_positions


@dataclass(frozen=True)
class StructureConfig:
    hidden: int = 32
    layers: int = 2
    heads: int = 4
    ffn: int = 64
    max_lines: int = 128
    dropout: float = 0.0
    pooling: str = "mean"  # "mean" over real lines, or "first"

    def __post_init__(self) -> None:
        for name in ("hidden", "layers", "heads", "ffn", "max_lines"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden ({self.hidden}) must be divisible by heads ({self.heads})")
        if self.pooling not in ("mean", "first"):
            raise ValueError(f"pooling must be 'mean' or 'first', got {self.pooling!r}")


def detach(line_embeddings: Tensor) -> Tensor:
    """Gradient barrier: identical values, no backward path to the producer."""
    return line_embeddings.detach()


class LineStructureEncoder(nn.Module):
    """Transformer over per-line vectors, pooled to one vector per fragment."""

    def __init__(self, config: StructureConfig) -> None:
        super().__init__()
        self.config = config
        self.register_buffer(
            "positions", sinusoidal_positions(config.max_lines, config.hidden), persistent=False
        )
        self.layers = nn.ModuleList(
            TransformerLayer(config.hidden, config.heads, config.ffn, config.dropout)
            for _ in range(config.layers)
        )

    def forward(self, line_vectors: Tensor, line_mask: Tensor) -> Tensor:
        if line_vectors.ndim != 3:
            raise ValueError(f"expected [batch, lines, hidden], got {tuple(line_vectors.shape)}")
        b, k, h = line_vectors.shape
        if line_mask.shape != (b, k):
            raise ValueError(f"line_mask shape {tuple(line_mask.shape)} does not match [{b}, {k}]")
        if k > self.config.max_lines:
            raise ValueError(f"{k} lines exceed max_lines {self.config.max_lines}")
        real = line_mask.sum(dim=1)
        if (real == 0).any():
            raise ValueError("every fragment needs at least one unmasked line")

        x = line_vectors + self.positions[:k].to(line_vectors.dtype)
        for layer in self.layers:
            x = layer(x, line_mask)

        if self.config.pooling == "first":
            return x[:, 0, :]
        weights = line_mask.to(x.dtype).unsqueeze(-1)
        return (x * weights).sum(dim=1) / weights.sum(dim=1)


def structure_repr(encoder: LineStructureEncoder, line_vectors: Tensor, line_mask: Tensor) -> Tensor:
    """Structure representation [b, hidden] for detached line vectors."""
    return encoder(line_vectors, line_mask)
