"""Byte-level tokenization and the two code-text normalizations.

Two normalizations are provided: `normalize_structured` keeps the code text
byte-for-byte (newlines, tabs, indentation all survive into the token
stream), while `normalize_baseline` collapses every whitespace run to a
single space, which is what most fine-tuning pipelines do before tokenizing.

The bundled tokenizer is byte-level so that encoding is deterministic and
exactly reversible without any trained merge table. Anything implementing
the small `ExternalTokenizer` protocol (a real subword tokenizer, for
example) can be swapped in wherever a tokenizer is accepted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

PAD_ID = 0
CLS_ID = 1
SEP_ID = 2
UNK_ID = 3
BYTE_OFFSET = 4  # byte value v maps to token id v + 4

_WHITESPACE_RUN = re.compile(r"[ \t\r\n]+")


def normalize_baseline(code: str) -> str:
    """Collapse every whitespace run to one space and strip the ends.

    This reproduces the usual "flatten the code to a token stream"
    preprocessing that discards line structure.
    """
    return _WHITESPACE_RUN.sub(" ", code).strip()


def normalize_structured(code: str) -> str:
    """Identity normalization: the code text is kept byte-exact."""
    return code


@runtime_checkable
class ExternalTokenizer(Protocol):
    """Surface an external (subword) tokenizer must provide to be swapped in.

    `encode` must emit CLS-first, PAD-padded fixed-width rows; `token_count`
    is the content-token count with specials excluded (used by statistics).
    """

    @property
    def vocab_size(self) -> int: ...

    def encode(self, text: str, max_len: int) -> "TokenSeq": ...

    def decode(self, seq: "TokenSeq") -> str: ...

    def token_count(self, text: str) -> int: ...


@dataclass(frozen=True)
class TokenSeq:
    """A single fixed-width encoded sequence.

    `ids` always starts with CLS and is padded with PAD up to the encoding
    length; `mask` is 1 exactly where `ids` is a real (non-PAD) token.
    `truncated` records whether content was cut to fit.
    """

    ids: tuple[int, ...]
    mask: tuple[int, ...]
    truncated: bool

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.mask):
            raise ValueError("ids and mask must have equal length")

    @property
    def length(self) -> int:
        return len(self.ids)

    @property
    def real_length(self) -> int:
        return int(sum(self.mask))


class ByteTokenizer:
    """Reversible byte-level tokenizer with PAD/CLS/SEP/UNK specials.

    Vocabulary layout: PAD=0, CLS=1, SEP=2, UNK=3, then every byte value v
    at id v + 4, for a total size of 260. UNK exists only for external
    compatibility; byte encoding never produces it.
    """

    specials = {"pad": PAD_ID, "cls": CLS_ID, "sep": SEP_ID, "unk": UNK_ID}

    @property
    def vocab_size(self) -> int:
        return 256 + BYTE_OFFSET

    def encode(self, text: str, max_len: int) -> TokenSeq:
        """Encode `text` as [CLS] + UTF-8 bytes, truncated/padded to `max_len`.

        Truncation keeps the head of the sequence. `max_len` must be at
        least 2 so CLS plus one content slot always fit.
        """
        if max_len < 2:
            raise ValueError(f"max_len must be >= 2, got {max_len}")
        raw = text.encode("utf-8")
        content = raw[: max_len - 1]
        ids = [CLS_ID] + [b + BYTE_OFFSET for b in content]
        n_real = len(ids)
        ids.extend([PAD_ID] * (max_len - n_real))
        mask = [1] * n_real + [0] * (max_len - n_real)
        return TokenSeq(tuple(ids), tuple(mask), truncated=len(raw) > len(content))

    def decode(self, seq: TokenSeq) -> str:
        """Invert `encode` on the non-special, non-padding portion."""
        out = bytearray()
        for i in seq.ids:
            if i < 0 or i >= self.vocab_size:
                raise ValueError(f"token id {i} outside vocabulary (size {self.vocab_size})")
            if i >= BYTE_OFFSET:
                out.append(i - BYTE_OFFSET)
        return out.decode("utf-8")

    def vocab_json(self) -> str:
        """Serialize the full id <-> byte mapping for reproducibility."""
        return json.dumps(
            {
                "specials": self.specials,
                "byte_offset": BYTE_OFFSET,
                "bytes": {str(v + BYTE_OFFSET): v for v in range(256)},
                "size": self.vocab_size,
            },
            indent=2,
            sort_keys=True,
        )

    def token_count(self, text: str) -> int:
        """Number of content tokens for `text`, specials excluded."""
        return len(text.encode("utf-8"))


@dataclass
class GlobalTokenBatch:
    """Whole-fragment token ids and attention mask, shape [b, n]."""

    tokens: np.ndarray
    mask: np.ndarray
    truncated: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.tokens.shape != self.mask.shape:
            raise ValueError("tokens and mask shapes differ")


def encode_batch(
    texts: Sequence[str], tokenizer: ByteTokenizer, max_len: int, trim: bool = True
) -> GlobalTokenBatch:
    """Encode a batch of (already normalized) texts into [b, n] arrays.

    n is `max_len`; with `trim` (the default) columns that would be padding
    for every row are dropped, which changes nothing semantically (padded
    keys carry zero attention weight) but keeps short batches cheap.
    """
    if not texts:
        raise ValueError("cannot encode an empty batch")
    width = max_len
    if trim:
        width = max(2, min(max_len, 1 + max(len(t.encode("utf-8")) for t in texts)))
    seqs = [tokenizer.encode(t, width) for t in texts]
    tokens = np.array([s.ids for s in seqs], dtype=np.int64)
    mask = np.array([s.mask for s in seqs], dtype=np.int64)
    truncated = np.array([s.truncated for s in seqs], dtype=bool)
    return GlobalTokenBatch(tokens=tokens, mask=mask, truncated=truncated)
