"""Checkpoint archive: one zip with a config JSON and named .npy arrays.

Parameters are stored row-major under their qualified module names
("line_encoder.*", "global_encoder.*", "structure.*", "head.*"). Reload is
bit-exact; the position tables are not stored because they are a pure
function of the config.
"""

from __future__ import annotations

import dataclasses
import io
import json
import zipfile
from pathlib import Path

import numpy as np
import torch

from .encoder import EncoderConfig
from .model import ModelConfig, VulnerabilityModel
from .structure import StructureConfig

FORMAT_VERSION = 1


def _config_dict(config: ModelConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "encoder": dataclasses.asdict(config.encoder),
        "structure": dataclasses.asdict(config.structure),
        "use_detach": config.use_detach,
        "sensitive_abs": config.sensitive_abs,
        "threshold": config.threshold,
    }


def _config_from_dict(data: dict) -> ModelConfig:
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {data.get('format_version')!r}")
    return ModelConfig(
        encoder=EncoderConfig(**data["encoder"]),
        structure=StructureConfig(**data["structure"]),
        use_detach=data["use_detach"],
        sensitive_abs=data["sensitive_abs"],
        threshold=data["threshold"],
    )


def save_checkpoint(model: VulnerabilityModel, path: str | Path) -> None:
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("config.json", json.dumps(_config_dict(model.config), indent=2, sort_keys=True))
        for name, param in model.named_parameters():
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(param.detach().cpu().numpy()))
            zf.writestr(f"params/{name}.npy", buf.getvalue())


def load_checkpoint(path: str | Path) -> VulnerabilityModel:
    with zipfile.ZipFile(path, "r") as zf:
        config = _config_from_dict(json.loads(zf.read("config.json")))
        model = VulnerabilityModel(config)
        expected = dict(model.named_parameters())
        stored = {
            n[len("params/") : -len(".npy")]
            for n in zf.namelist()
            if n.startswith("params/") and n.endswith(".npy")
        }
        missing = expected.keys() - stored
        extra = stored - expected.keys()
        if missing or extra:
            raise ValueError(f"checkpoint parameter mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        with torch.no_grad():
            for name, param in expected.items():
                array = np.load(io.BytesIO(zf.read(f"params/{name}.npy")))
                if tuple(array.shape) != tuple(param.shape):
                    raise ValueError(f"shape mismatch for {name}: {array.shape} vs {tuple(param.shape)}")
                param.copy_(torch.from_numpy(array))
    return model
