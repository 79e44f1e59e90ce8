"""Line splitting and per-batch line/token alignment.

Code fragments are split into lines with their indentation intact, then
every fragment in a batch is brought to a common [k, p] grid: k lines per
fragment (content lines beyond k are dropped, short fragments get fully
masked padding lines) and p token slots per line (CLS plus up to p-1
content bytes). Padding lines carry no tokens at all so nothing downstream
can accidentally attend to or select them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tokenizer import ByteTokenizer, PAD_ID

DEFAULT_MAX_LINES = 100
DEFAULT_TOKENS_PER_LINE = 20


def split_lines(code: str) -> list[str]:
    """Split on newline characters, keeping indentation and blank lines.

    The newline itself is a delimiter and never part of the line text; a
    trailing newline therefore does not create an extra empty line. Other
    control bytes (e.g. a stray carriage return) are preserved as content.
    """
    parts = code.split("\n")
    if len(parts) > 1 and parts[-1] == "":
        parts.pop()
    return parts


@dataclass
class LineTokenBatch:
    """Aligned per-line token arrays for one batch.

    tokens/token_mask are [b, k, p]; line_mask is [b, k] with 1 marking real
    lines. line_truncated flags lines whose content was cut to fit p.
    """

    tokens: np.ndarray
    token_mask: np.ndarray
    line_mask: np.ndarray
    line_truncated: np.ndarray
    lines_per_snippet: int
    tokens_per_line: int

    @property
    def batch_size(self) -> int:
        return self.tokens.shape[0]


def align_batch(
    line_lists: Sequence[Sequence[str]],
    tokenizer: ByteTokenizer,
    k_cap: int = DEFAULT_MAX_LINES,
    p: int = DEFAULT_TOKENS_PER_LINE,
    pad_to_cap: bool = False,
) -> LineTokenBatch:
    """Build the [b, k, p] line-token grid for a batch of line lists.

    k is the largest line count in the batch, capped at `k_cap` (or pinned
    to exactly `k_cap` when `pad_to_cap` is set, which makes per-snippet
    rows independent of batch composition). Fragments longer than k keep
    their first k lines.
    """
    if not line_lists:
        raise ValueError("cannot align an empty batch")
    if k_cap < 1:
        raise ValueError(f"k_cap must be >= 1, got {k_cap}")
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    for i, lines in enumerate(line_lists):
        if len(lines) == 0:
            raise ValueError(f"snippet {i} has zero lines")

    if pad_to_cap:
        k = k_cap
    else:
        k = min(max(len(lines) for lines in line_lists), k_cap)

    b = len(line_lists)
    tokens = np.full((b, k, p), PAD_ID, dtype=np.int64)
    token_mask = np.zeros((b, k, p), dtype=np.int64)
    line_mask = np.zeros((b, k), dtype=np.int64)
    line_truncated = np.zeros((b, k), dtype=bool)

    for i, lines in enumerate(line_lists):
        for j, text in enumerate(lines[:k]):
            seq = tokenizer.encode(text, max_len=p)
            tokens[i, j] = seq.ids
            token_mask[i, j] = seq.mask
            line_mask[i, j] = 1
            line_truncated[i, j] = seq.truncated

    return LineTokenBatch(
        tokens=tokens,
        token_mask=token_mask,
        line_mask=line_mask,
        line_truncated=line_truncated,
        lines_per_snippet=k,
        tokens_per_line=p,
    )


def alignment_records(batch: LineTokenBatch, line_lists: Sequence[Sequence[str]], ids: Sequence[int]) -> list[dict]:
    """Per-snippet debug records: line counts, kept lines, truncation flags."""
    records = []
    for i, snippet_id in enumerate(ids):
        real = int(batch.line_mask[i].sum())
        records.append(
            {
                "id": snippet_id,
                "lines_total": len(line_lists[i]),
                "lines_kept": real,
                "k": batch.lines_per_snippet,
                "p": batch.tokens_per_line,
                "line_truncated": [bool(x) for x in batch.line_truncated[i, :real]],
            }
        )
    return records


def dump_alignment(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
