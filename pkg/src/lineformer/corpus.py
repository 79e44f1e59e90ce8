"""Dataset loading, deterministic splitting, and corpus token statistics.

Datasets use the common defect-detection JSONL convention: one object per
line with a "func" string, a binary "target", and an optional integer
"idx" (defaulting to the 1-based file line number). Code text is kept
verbatim; nothing is trimmed or re-encoded on load.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .lines import split_lines
from .tokenizer import ByteTokenizer, normalize_baseline, normalize_structured


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid split parameters."""


@dataclass(frozen=True)
class CodeSnippet:
    """One labeled function-level code fragment."""

    id: int
    code: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise DatasetError(f"label must be 0 or 1, got {self.label!r}")
        if not self.code:
            raise DatasetError("code must be non-empty")


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[CodeSnippet, ...]
    valid: tuple[CodeSnippet, ...]
    test: tuple[CodeSnippet, ...]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.valid), len(self.test))


@dataclass
class CorpusStats:
    """Corpus-level token statistics under both normalizations."""

    mean_tokens_structured: float
    mean_tokens_baseline: float
    ratio: float
    mean_lines: float
    frac_over_limit: float
    limit: int
    per_snippet: list[dict] = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean_tokens_structured": self.mean_tokens_structured,
                "mean_tokens_baseline": self.mean_tokens_baseline,
                "ratio": self.ratio,
                "mean_lines": self.mean_lines,
                "frac_over_limit": self.frac_over_limit,
                "limit": self.limit,
                "snippets": len(self.per_snippet),
            },
            indent=2,
        )

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["id", "structured_tokens", "baseline_tokens", "lines"])
            writer.writeheader()
            writer.writerows(self.per_snippet)


def load_jsonl(path: str | Path) -> list[CodeSnippet]:
    """Load snippets from a JSONL file, preserving code text verbatim.

    Errors point at the offending 1-based line number. Blank lines are
    skipped; "idx" defaults to the line number when absent.
    """
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_jsonl(fh, str(path))


def _parse_jsonl(lines, source: str) -> list[CodeSnippet]:
    snippets: list[CodeSnippet] = []
    seen_ids: set[int] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{source}:{lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise DatasetError(f"{source}:{lineno}: expected a JSON object")
        if "func" not in obj:
            raise DatasetError(f"{source}:{lineno}: missing required field 'func'")
        code = obj["func"]
        if not isinstance(code, str) or not code:
            raise DatasetError(f"{source}:{lineno}: 'func' must be a non-empty string")
        target = obj.get("target")
        if target not in (0, 1):
            raise DatasetError(f"{source}:{lineno}: 'target' must be 0 or 1, got {target!r}")
        idx = obj.get("idx", lineno)
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise DatasetError(f"{source}:{lineno}: 'idx' must be an integer")
        if idx in seen_ids:
            raise DatasetError(f"{source}:{lineno}: duplicate snippet id {idx}")
        seen_ids.add(idx)
        snippets.append(CodeSnippet(id=idx, code=code, label=target))
    return snippets


def save_jsonl(snippets: Sequence[CodeSnippet], path: str | Path) -> None:
    """Write snippets back out in the same JSONL convention."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in snippets:
            fh.write(json.dumps({"idx": s.id, "func": s.code, "target": s.label}) + "\n")


def split_dataset(
    snippets: Sequence[CodeSnippet],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 123456,
) -> DatasetSplit:
    """Deterministic train/valid/test split.

    Valid and test sizes are floor-allocated from the ratios; the remainder
    goes to train. The same (snippets, ratios, seed) always produces the
    same membership.
    """
    if not snippets:
        raise DatasetError("cannot split an empty dataset")
    if any(r < 0 for r in ratios):
        raise DatasetError(f"ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {ratios} (sum {sum(ratios)})")

    order = list(range(len(snippets)))
    random.Random(seed).shuffle(order)
    n = len(snippets)
    n_valid = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_valid - n_test

    shuffled = [snippets[i] for i in order]
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        valid=tuple(shuffled[n_train : n_train + n_valid]),
        test=tuple(shuffled[n_train + n_valid :]),
    )


def snippet_counts(snippet: CodeSnippet, tokenizer: ByteTokenizer) -> dict:
    """Token and line counts for one snippet under both normalizations."""
    return {
        "id": snippet.id,
        "structured_tokens": tokenizer.token_count(normalize_structured(snippet.code)),
        "baseline_tokens": tokenizer.token_count(normalize_baseline(snippet.code)),
        "lines": len(split_lines(snippet.code)),
    }


def corpus_stats(snippets: Sequence[CodeSnippet], tokenizer: ByteTokenizer, limit: int = 1024) -> CorpusStats:
    """Corpus means under both normalizations plus the over-limit fraction.

    Counts exclude special tokens (CLS/PAD); `frac_over_limit` is the share
    of snippets whose structured token count exceeds `limit`.
    """
    if not snippets:
        raise DatasetError("cannot compute statistics for an empty corpus")
    if limit <= 0:
        raise DatasetError(f"limit must be positive, got {limit}")

    rows = [snippet_counts(s, tokenizer) for s in snippets]
    n = len(rows)
    mean_structured = sum(r["structured_tokens"] for r in rows) / n
    mean_baseline = sum(r["baseline_tokens"] for r in rows) / n
    mean_lines = sum(r["lines"] for r in rows) / n
    over = sum(1 for r in rows if r["structured_tokens"] > limit)
    return CorpusStats(
        mean_tokens_structured=mean_structured,
        mean_tokens_baseline=mean_baseline,
        ratio=mean_baseline / mean_structured if mean_structured else 0.0,
        mean_lines=mean_lines,
        frac_over_limit=over / n,
        limit=limit,
        per_snippet=rows,
    )


def load_mini_corpus() -> list[CodeSnippet]:
    """Load the bundled 50-snippet corpus used for statistics checks."""
    resource = resources.files("lineformer").joinpath("data/mini_corpus.jsonl")
    with resource.open("r", encoding="utf-8") as fh:
        return _parse_jsonl(fh, "mini_corpus.jsonl")
