"""Deterministic training loop, evaluation metrics, and the (p, k) sweep.

All randomness (init, shuffling, any dropout) funnels through the single
config seed. Training minimizes one joint cross-entropy on the fused head;
the returned model carries the parameters of the epoch with the best
validation F1.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .corpus import CodeSnippet, DatasetSplit
from .head import bce_loss
from .lines import split_lines
from .model import ModelConfig, PipelineConfig, VulnerabilityModel, build_model, prepare_inputs
from .tokenizer import ByteTokenizer

DEFAULT_SWEEP_GRID: tuple[tuple[int, int], ...] = (
    (20, 70),
    (20, 100),
    (20, 120),
    (10, 70),
    (10, 100),
    (10, 120),
)


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 12
    learning_rate: float = 2e-5
    seed: int = 123456
    epochs: int = 10
    grad_clip: float = 1.0
    threshold: float = 0.5
    scale: str = "desk"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        # 0 is allowed as an explicit null update; negative rates are not.
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    threshold: float
    records: list[dict] = field(default_factory=list, repr=False)

    @property
    def ids(self) -> set[int]:
        return {r["id"] for r in self.records}

    def to_json(self) -> str:
        payload = dataclasses.asdict(self)
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def set_seed(seed: int) -> None:
    """Seed python, numpy, and torch RNGs in one place."""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> dict[str, float]:
    """Accuracy/precision/recall/F1 from confusion counts.

    Zero denominators yield 0 by convention. F1 uses the count form
    2TP / (2TP + FP + FN), which equals the harmonic mean of precision and
    recall whenever both are defined.
    """
    total = tp + fp + fn + tn
    return {
        "accuracy": (tp + tn) / total if total else 0.0,
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "f1": 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0,
    }


def _batches(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def evaluate(
    model: VulnerabilityModel,
    snippets: Sequence[CodeSnippet],
    tokenizer: ByteTokenizer,
    pipeline: PipelineConfig,
    threshold: float | None = None,
    batch_size: int = 32,
) -> EvalReport:
    """Score snippets in fixed order and compute the standard metrics."""
    if not snippets:
        raise ValueError("cannot evaluate an empty snippet set")
    if threshold is None:
        threshold = model.head.threshold

    records = []
    tp = fp = fn = tn = 0
    for batch in _batches(list(snippets), batch_size):
        probs = model.score(batch, tokenizer, pipeline)
        for snippet, prob in zip(batch, probs.tolist()):
            pred = 1 if prob >= threshold else 0
            records.append({"id": snippet.id, "label": snippet.label, "probability": prob, "prediction": pred})
            if snippet.label == 1 and pred == 1:
                tp += 1
            elif snippet.label == 0 and pred == 1:
                fp += 1
            elif snippet.label == 1 and pred == 0:
                fn += 1
            else:
                tn += 1

    metrics = metrics_from_counts(tp, fp, fn, tn)
    return EvalReport(
        accuracy=metrics["accuracy"],
        precision=metrics["precision"],
        recall=metrics["recall"],
        f1=metrics["f1"],
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        threshold=threshold,
        records=records,
    )


@dataclass
class TrainResult:
    history: list[dict]
    best_epoch: int | None
    best_valid_f1: float | None
    steps: int


def train(
    model: VulnerabilityModel,
    split: DatasetSplit,
    config: TrainConfig,
    tokenizer: ByteTokenizer,
    pipeline: PipelineConfig,
    max_steps: int | None = None,
) -> TrainResult:
    """Train the model in place; restores the best-validation-F1 parameters.

    One joint loss over the fused head; line alignment happens per batch.
    `max_steps` optionally caps the total number of optimizer steps.
    """
    if not split.train:
        raise ValueError("training split is empty")
    set_seed(config.seed)
    order_rng = random.Random(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    history: list[dict] = []
    best_state: dict | None = None
    best_epoch: int | None = None
    best_f1: float | None = None
    step = 0

    for epoch in range(config.epochs):
        order = list(split.train)
        order_rng.shuffle(order)
        model.train()
        epoch_loss = 0.0
        n_batches = 0
        correct = 0
        for batch in _batches(order, config.batch_size):
            inputs = prepare_inputs(batch, tokenizer, pipeline)
            output = model(inputs)
            loss = bce_loss(inputs.labels, output.probability)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"loss is not finite at epoch {epoch}, step {step}")
            optimizer.zero_grad()
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()

            epoch_loss += loss.item()
            n_batches += 1
            step += 1
            predictions = (output.probability.detach() >= config.threshold).long()
            correct += int((predictions == inputs.labels).sum())
            if max_steps is not None and step >= max_steps:
                break

        row = {
            "epoch": epoch,
            "loss": epoch_loss / n_batches,
            "train_accuracy": correct / len(order),
        }
        if split.valid:
            report = evaluate(model, split.valid, tokenizer, pipeline, threshold=config.threshold)
            row.update(
                {
                    "accuracy": report.accuracy,
                    "precision": report.precision,
                    "recall": report.recall,
                    "f1": report.f1,
                }
            )
            # >= keeps the latest checkpoint among ties, i.e. the most trained.
            if best_f1 is None or report.f1 >= best_f1:
                best_f1 = report.f1
                best_epoch = epoch
                best_state = copy.deepcopy(model.state_dict())
        history.append(row)
        if max_steps is not None and step >= max_steps:
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    return TrainResult(history=history, best_epoch=best_epoch, best_valid_f1=best_f1, steps=step)


def history_to_csv(history: list[dict], path: str | Path) -> None:
    fields = ["epoch", "loss", "accuracy", "precision", "recall", "f1", "train_accuracy"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in history:
            writer.writerow({k: row.get(k, "") for k in fields})


def collect_sensitive_lines(
    model: VulnerabilityModel,
    snippets: Sequence[CodeSnippet],
    tokenizer: ByteTokenizer,
    pipeline: PipelineConfig,
    batch_size: int = 32,
) -> list[dict]:
    """Audit records: which line each fragment's sensitive branch selected."""
    records = []
    model.eval()
    with torch.no_grad():
        for batch in _batches(list(snippets), batch_size):
            output = model(prepare_inputs(batch, tokenizer, pipeline))
            for snippet, idx in zip(batch, output.sensitive.index.tolist()):
                lines = split_lines(snippet.code)
                records.append(
                    {
                        "id": snippet.id,
                        "line_index": idx,
                        "line_text": lines[idx] if idx < len(lines) else "",
                    }
                )
    return records


def sweep(
    split: DatasetSplit,
    model_config: ModelConfig,
    train_config: TrainConfig,
    tokenizer: ByteTokenizer,
    pipeline: PipelineConfig,
    grid: Sequence[tuple[int, int]] = DEFAULT_SWEEP_GRID,
) -> list[dict]:
    """Train one model per (tokens-per-line, max-lines) cell with a shared seed.

    Cell failures are recorded in the row rather than aborting the sweep.
    """
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    rows = []
    for p, k_cap in grid:
        row: dict = {"p": p, "k_cap": k_cap}
        try:
            cell_pipeline = dataclasses.replace(pipeline, tokens_per_line=p, max_lines=k_cap)
            set_seed(train_config.seed)
            model = build_model(model_config)
            train(model, split, train_config, tokenizer, cell_pipeline)
            report = evaluate(model, split.test, tokenizer, cell_pipeline, threshold=train_config.threshold)
            row.update(
                {
                    "accuracy": report.accuracy,
                    "recall": report.recall,
                    "precision": report.precision,
                    "f1": report.f1,
                    "error": "",
                }
            )
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            row.update({"accuracy": "", "recall": "", "precision": "", "f1": "", "error": str(exc)})
        rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict], path: str | Path) -> None:
    fields = ["p", "k_cap", "accuracy", "recall", "precision", "f1", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
