"""Run configuration: presets, config files, and flag overrides.

A run is fully described by one JSON document. Presets expand to complete
configurations before any module sees them; values from a config file
override the preset, and command-line flags override both. Every command
echoes its effective configuration into the output directory so a run can
be reproduced from that file alone.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .encoder import EncoderConfig
from .model import ModelConfig, PipelineConfig
from .structure import StructureConfig
from .train import TrainConfig

# Desk scale trains a small randomly initialized network on CPU in seconds.
# Paper scale is the full-size configuration this architecture normally
# runs at (768-wide encoders, 8x8 structure transformer, lr 2e-5); it is a
# configuration slot only and expects pre-trained encoder weights and GPU
# budgets that are not part of this package.
PRESETS: dict[str, dict] = {
    "desk": {
        "encoder": {
            "vocab_size": 260,
            "hidden": 32,
            "layers": 2,
            "heads": 4,
            "ffn": 64,
            "max_positions": 1024,
            "dropout": 0.0,
        },
        "structure": {
            "hidden": 32,
            "layers": 2,
            "heads": 4,
            "ffn": 64,
            "max_lines": 128,
            "dropout": 0.0,
            "pooling": "mean",
        },
        "pipeline": {"max_len": 256, "tokens_per_line": 20, "max_lines": 100, "pad_to_cap": False},
        "train": {
            "batch_size": 12,
            "learning_rate": 2e-3,
            "seed": 123456,
            "epochs": 10,
            "grad_clip": 1.0,
            "threshold": 0.5,
            "scale": "desk",
        },
    },
    "paper-scale": {
        "encoder": {
            "vocab_size": 260,
            "hidden": 768,
            "layers": 12,
            "heads": 12,
            "ffn": 3072,
            "max_positions": 1024,
            "dropout": 0.1,
        },
        "structure": {
            "hidden": 768,
            "layers": 8,
            "heads": 8,
            "ffn": 3072,
            "max_lines": 128,
            "dropout": 0.1,
            "pooling": "mean",
        },
        "pipeline": {"max_len": 1024, "tokens_per_line": 20, "max_lines": 100, "pad_to_cap": False},
        "train": {
            "batch_size": 12,
            "learning_rate": 2e-5,
            "seed": 123456,
            "epochs": 10,
            "grad_clip": 1.0,
            "threshold": 0.5,
            "scale": "paper-scale",
        },
    },
}


@dataclass
class RunConfig:
    """Everything one CLI command needs, fully expanded."""

    data: str | None = None
    out: str = "runs/latest"
    preset: str = "desk"
    mode: str = "structured"
    seed: int = 123456
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    stats_limit: int = 1024
    eval_batch_size: int = 32
    use_detach: bool = True
    sensitive_abs: bool = False
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    structure: StructureConfig = field(default_factory=StructureConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            encoder=self.encoder,
            structure=self.structure,
            use_detach=self.use_detach,
            sensitive_abs=self.sensitive_abs,
            threshold=self.train.threshold,
        )

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["ratios"] = list(self.ratios)
        return data

    def echo(self, out_dir: str | Path) -> Path:
        """Write the effective configuration into the output directory."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "effective_config.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _deep_update(base: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def build_run_config(
    preset: str = "desk",
    file_config: dict | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Expand preset -> config file -> flag overrides into a RunConfig."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    merged: dict = json.loads(json.dumps(PRESETS[preset]))  # deep copy
    for layer in (file_config or {}, overrides or {}):
        _deep_update(merged, layer)

    mode = merged.get("mode", "structured")
    if mode not in ("structured", "baseline"):
        raise ValueError(f"mode must be 'structured' or 'baseline', got {mode!r}")
    ratios = tuple(merged.get("ratios", (0.8, 0.1, 0.1)))
    if len(ratios) != 3:
        raise ValueError(f"ratios must have exactly three entries, got {ratios}")

    seed = merged.get("seed", 123456)
    train_section = dict(merged.get("train", {}))
    train_section.setdefault("seed", seed)
    if "seed" in merged:
        train_section["seed"] = merged["seed"]

    return RunConfig(
        data=merged.get("data"),
        out=merged.get("out", "runs/latest"),
        preset=preset,
        mode=mode,
        seed=train_section["seed"],
        ratios=ratios,
        stats_limit=merged.get("stats_limit", 1024),
        eval_batch_size=merged.get("eval_batch_size", 32),
        use_detach=merged.get("use_detach", True),
        sensitive_abs=merged.get("sensitive_abs", False),
        encoder=EncoderConfig(**merged["encoder"]),
        structure=StructureConfig(**merged["structure"]),
        pipeline=PipelineConfig(**merged["pipeline"]),
        train=TrainConfig(**train_section),
    )
