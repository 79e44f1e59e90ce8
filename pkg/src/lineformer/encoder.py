"""Transformer sequence encoders for the line-level and global branches.

Both branches use the same architecture: token embedding, fixed sinusoidal
position encoding, and a stack of post-norm self-attention layers. Masking
is additive with a large negative constant, so padded keys receive an
attention weight of exactly zero (the exponential underflows) and a fully
masked row degrades to uniform attention instead of NaN. Padding therefore
cannot influence any unmasked position, and rows whose output is garbage
(fully padded lines) are finite and get masked out downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import Tensor, nn

from .lines import LineTokenBatch
from .tokenizer import GlobalTokenBatch

ATTENTION_MASK_VALUE = -1e9


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int = 260
    hidden: int = 32
    layers: int = 2
    heads: int = 4
    ffn: int = 64
    max_positions: int = 1024
    dropout: float = 0.0

    def __post_init__(self) -> None:
        for name in ("vocab_size", "hidden", "layers", "heads", "ffn", "max_positions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden ({self.hidden}) must be divisible by heads ({self.heads})")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


def sinusoidal_positions(max_positions: int, hidden: int) -> Tensor:
    """Fixed sine/cosine position table of shape [max_positions, hidden]."""
    position = torch.arange(max_positions, dtype=torch.float64).unsqueeze(1)
    half = torch.arange(0, hidden, 2, dtype=torch.float64)
    freq = torch.exp(-math.log(10000.0) * half / hidden)
    table = torch.zeros(max_positions, hidden, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * freq)
    table[:, 1::2] = torch.cos(position * freq)[:, : hidden // 2]
    return table.to(torch.float32)


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, hidden: int, heads: int, dropout: float) -> None:
        super().__init__()
        self.heads = heads
        self.head_dim = hidden // heads
        self.qkv = nn.Linear(hidden, 3 * hidden)
        self.out = nn.Linear(hidden, hidden)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: Tensor, attend: Tensor) -> Tensor:
        # x: [B, L, h]; attend: [B, L] with 1 = key may be attended to
        b, l, h = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        q = q.view(b, l, self.heads, self.head_dim).transpose(1, 2)
        k = k.view(b, l, self.heads, self.head_dim).transpose(1, 2)
        v = v.view(b, l, self.heads, self.head_dim).transpose(1, 2)

        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        bias = (1.0 - attend.to(x.dtype)).view(b, 1, 1, l) * ATTENTION_MASK_VALUE
        weights = torch.softmax(scores + bias, dim=-1)
        weights = self.drop(weights)
        ctx = (weights @ v).transpose(1, 2).reshape(b, l, h)
        return self.out(ctx)


class TransformerLayer(nn.Module):
    """Post-norm encoder layer: self-attention then a GELU feed-forward."""

    def __init__(self, hidden: int, heads: int, ffn: int, dropout: float) -> None:
        super().__init__()
        self.attn = MultiHeadSelfAttention(hidden, heads, dropout)
        self.norm1 = nn.LayerNorm(hidden)
        self.ffn = nn.Sequential(nn.Linear(hidden, ffn), nn.GELU(), nn.Linear(ffn, hidden))
        self.norm2 = nn.LayerNorm(hidden)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: Tensor, attend: Tensor) -> Tensor:
        x = self.norm1(x + self.drop(self.attn(x, attend)))
        x = self.norm2(x + self.drop(self.ffn(x)))
        return x


class SequenceEncoder(nn.Module):
    """Token-sequence encoder producing one hidden state per position."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size, config.hidden)
        nn.init.normal_(self.embed.weight, std=0.02)
        self.register_buffer(
            "positions", sinusoidal_positions(config.max_positions, config.hidden), persistent=False
        )
        self.layers = nn.ModuleList(
            TransformerLayer(config.hidden, config.heads, config.ffn, config.dropout)
            for _ in range(config.layers)
        )
        self.drop = nn.Dropout(config.dropout)
        self.scale = math.sqrt(config.hidden)

    def forward(self, tokens: Tensor, mask: Tensor) -> Tensor:
        if tokens.shape != mask.shape:
            raise ValueError(f"tokens {tuple(tokens.shape)} and mask {tuple(mask.shape)} shapes differ")
        if tokens.ndim != 2:
            raise ValueError(f"expected [batch, length] tokens, got {tuple(tokens.shape)}")
        if tokens.numel() and (tokens.min() < 0 or tokens.max() >= self.config.vocab_size):
            raise ValueError(f"token id outside vocabulary of size {self.config.vocab_size}")
        length = tokens.shape[1]
        if length > self.config.max_positions:
            raise ValueError(f"sequence length {length} exceeds max_positions {self.config.max_positions}")

        x = self.embed(tokens) * self.scale + self.positions[:length].to(self.embed.weight.dtype)
        x = self.drop(x)
        for layer in self.layers:
            x = layer(x, mask)
        return x


def encode_sequences(encoder: SequenceEncoder, tokens: Tensor, mask: Tensor) -> Tensor:
    """Run the encoder over [B, l] tokens, returning [B, l, hidden]."""
    return encoder(tokens, mask)


def cls_pool(hidden: Tensor) -> Tensor:
    """Sequence representation: the hidden state of the first position."""
    if hidden.ndim != 3:
        raise ValueError(f"expected [batch, length, hidden], got {tuple(hidden.shape)}")
    if hidden.shape[1] < 1:
        raise ValueError("cannot pool an empty sequence dimension")
    return hidden[:, 0, :]


def line_embed(encoder: SequenceEncoder, batch: LineTokenBatch) -> Tensor:
    """Encode every line of the batch in one flattened pass.

    [b, k, p] token rows are flattened to [b*k, p], encoded, CLS-pooled and
    reshaped to [b, k, hidden]. Rows belonging to padding lines come back as
    finite but meaningless vectors; callers must apply line_mask.
    """
    tokens = torch.from_numpy(batch.tokens)
    mask = torch.from_numpy(batch.token_mask)
    b, k, p = tokens.shape
    hidden = encoder(tokens.reshape(b * k, p), mask.reshape(b * k, p))
    return cls_pool(hidden).reshape(b, k, -1)


def global_embed(encoder: SequenceEncoder, batch: GlobalTokenBatch) -> Tensor:
    """Whole-fragment representation: CLS state of the global encoder."""
    tokens = torch.from_numpy(batch.tokens)
    mask = torch.from_numpy(batch.mask)
    return cls_pool(encoder(tokens, mask))
