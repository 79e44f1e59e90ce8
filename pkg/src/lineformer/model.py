"""The three-branch vulnerability detector.

One line encoder produces per-line vectors; the structure branch models
relationships between those vectors behind a gradient barrier; the
sensitive branch selects the line with the smallest mean activation; the
global branch encodes the whole fragment. The three representations are
concatenated and classified by an MLP head into a single vulnerability
probability per fragment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import torch
from torch import Tensor, nn

from .corpus import CodeSnippet
from .encoder import EncoderConfig, SequenceEncoder, global_embed, line_embed
from .head import ClassifierHead, fuse
from .lines import LineTokenBatch, align_batch, split_lines
from .sensitive import SensitiveSelection, select_sensitive
from .structure import LineStructureEncoder, StructureConfig, detach
from .tokenizer import ByteTokenizer, GlobalTokenBatch, encode_batch, normalize_structured


@dataclass(frozen=True)
class PipelineConfig:
    """Preprocessing knobs shared by training, evaluation, and the CLI."""

    max_len: int = 1024
    tokens_per_line: int = 20
    max_lines: int = 100
    pad_to_cap: bool = False


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    structure: StructureConfig = field(default_factory=StructureConfig)
    use_detach: bool = True
    sensitive_abs: bool = False
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.encoder.hidden != self.structure.hidden:
            raise ValueError(
                f"encoder hidden ({self.encoder.hidden}) and structure hidden "
                f"({self.structure.hidden}) must match"
            )


class ModelInputs(NamedTuple):
    global_batch: GlobalTokenBatch
    line_batch: LineTokenBatch
    labels: Tensor


class ModelOutput(NamedTuple):
    probability: Tensor  # [b]
    logit: Tensor  # [b]
    fused: Tensor  # [b, 3h]
    structure_vec: Tensor  # [b, h]
    sensitive: SensitiveSelection
    global_vec: Tensor  # [b, h]
    line_embeddings: Tensor  # [b, k, h]


def prepare_inputs(
    snippets: Sequence[CodeSnippet],
    tokenizer: ByteTokenizer,
    pipeline: PipelineConfig,
) -> ModelInputs:
    """Tokenize one batch of snippets into global and line-aligned arrays."""
    if not snippets:
        raise ValueError("cannot prepare an empty batch")
    texts = [normalize_structured(s.code) for s in snippets]
    global_batch = encode_batch(texts, tokenizer, pipeline.max_len)
    line_batch = align_batch(
        [split_lines(t) for t in texts],
        tokenizer,
        k_cap=pipeline.max_lines,
        p=pipeline.tokens_per_line,
        pad_to_cap=pipeline.pad_to_cap,
    )
    labels = torch.tensor([s.label for s in snippets], dtype=torch.long)
    return ModelInputs(global_batch=global_batch, line_batch=line_batch, labels=labels)


class VulnerabilityModel(nn.Module):
    """Line encoder + structure transformer + sensitive line + global encoder."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        self.line_encoder = SequenceEncoder(config.encoder)
        self.global_encoder = SequenceEncoder(config.encoder)
        self.structure = LineStructureEncoder(config.structure)
        self.head = ClassifierHead(config.encoder.hidden, threshold=config.threshold)

    def forward(
        self,
        inputs: ModelInputs,
        branch_gates: tuple[float, float, float] = (1.0, 1.0, 1.0),
    ) -> ModelOutput:
        """Score a prepared batch.

        `branch_gates` scales the (structure, sensitive, global) vectors
        before fusion; zeroing a gate ablates that branch's contribution
        (and its gradient) without touching the architecture.
        """
        line_mask = torch.from_numpy(inputs.line_batch.line_mask)
        line_vecs = line_embed(self.line_encoder, inputs.line_batch)

        selection = select_sensitive(line_vecs, line_mask, use_abs=self.config.sensitive_abs)
        structure_in = detach(line_vecs) if self.config.use_detach else line_vecs
        structure_vec = self.structure(structure_in, line_mask)
        global_vec = global_embed(self.global_encoder, inputs.global_batch)

        g_s, g_l, g_g = branch_gates
        fused = fuse(structure_vec * g_s, selection.vector * g_l, global_vec * g_g)
        logit = self.head(fused)
        return ModelOutput(
            probability=torch.sigmoid(logit),
            logit=logit,
            fused=fused,
            structure_vec=structure_vec,
            sensitive=selection,
            global_vec=global_vec,
            line_embeddings=line_vecs,
        )

    @torch.no_grad()
    def score(self, snippets: Sequence[CodeSnippet], tokenizer: ByteTokenizer, pipeline: PipelineConfig) -> Tensor:
        """Probabilities for a batch of raw snippets (eval-mode convenience)."""
        was_training = self.training
        self.eval()
        try:
            out = self(prepare_inputs(snippets, tokenizer, pipeline))
        finally:
            self.train(was_training)
        return out.probability


def build_model(config: ModelConfig) -> VulnerabilityModel:
    return VulnerabilityModel(config)
