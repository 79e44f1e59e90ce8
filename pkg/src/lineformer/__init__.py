"""Line-level structure-aware vulnerability detection for C/C++ functions."""

from .corpus import CodeSnippet, CorpusStats, DatasetSplit, corpus_stats, load_jsonl, split_dataset
from .encoder import EncoderConfig, SequenceEncoder, cls_pool, encode_sequences, global_embed, line_embed
from .head import ClassifierHead, bce_loss, fuse, predict
from .lines import LineTokenBatch, align_batch, split_lines
from .model import ModelConfig, PipelineConfig, VulnerabilityModel, build_model, prepare_inputs
from .sensitive import SensitiveSelection, line_means, select_sensitive
from .structure import LineStructureEncoder, StructureConfig, detach, structure_repr
from .tokenizer import ByteTokenizer, GlobalTokenBatch, TokenSeq, normalize_baseline, normalize_structured
from .train import EvalReport, TrainConfig, evaluate, metrics_from_counts, set_seed, sweep, train
from .compare import ComparisonReport, compare_models

__version__ = "0.1.0"

__all__ = [
    "ByteTokenizer",
    "ClassifierHead",
    "CodeSnippet",
    "ComparisonReport",
    "CorpusStats",
    "DatasetSplit",
    "EncoderConfig",
    "EvalReport",
    "GlobalTokenBatch",
    "LineStructureEncoder",
    "LineTokenBatch",
    "ModelConfig",
    "PipelineConfig",
    "SensitiveSelection",
    "SequenceEncoder",
    "StructureConfig",
    "TokenSeq",
    "TrainConfig",
    "VulnerabilityModel",
    "align_batch",
    "bce_loss",
    "build_model",
    "cls_pool",
    "compare_models",
    "corpus_stats",
    "detach",
    "encode_sequences",
    "evaluate",
    "fuse",
    "global_embed",
    "line_embed",
    "line_means",
    "load_jsonl",
    "metrics_from_counts",
    "normalize_baseline",
    "normalize_structured",
    "predict",
    "prepare_inputs",
    "select_sensitive",
    "set_seed",
    "split_dataset",
    "split_lines",
    "structure_repr",
    "sweep",
    "train",
]
