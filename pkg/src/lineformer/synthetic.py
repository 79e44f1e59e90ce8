"""Deterministic synthetic corpora with a planted vulnerable-line pattern.

Each generated function body contains exactly one marker line: an unbounded
string copy for vulnerable samples, its bounded counterpart for secure
ones. The pattern is recoverable from both the line-level and the global
view, so a working model can separate the classes perfectly; training
sanity checks rely on that separability.
"""

from __future__ import annotations

import random
from typing import Sequence

from .corpus import CodeSnippet, save_jsonl

VULNERABLE_LINE = "  raw_copy(buf, input);"
SECURE_LINE = "  safe_copy(buf, input, 64);"

_FILLERS = (
    "  int i = 0;",
    "  size_t n = length;",
    "  char buf[64];",
    "  state = next_state(state);",
    "  count += step;",
    "  log_event(ctx, state);",
    "  if (ctx == NULL)",
    "    return -1;",
    "  check_bounds(n);",
    "  flags |= MODE_SAFE;",
)

_NAMES = ("parse", "handle", "copy", "read", "update", "decode", "flush", "init")


def make_snippet(snippet_id: int, vulnerable: bool, rng: random.Random) -> CodeSnippet:
    name = rng.choice(_NAMES)
    body = rng.sample(_FILLERS, rng.randint(2, 4))
    body.insert(rng.randint(0, len(body)), VULNERABLE_LINE if vulnerable else SECURE_LINE)
    code = "\n".join([f"static int {name}_{snippet_id}(char *input) {{", *body, "}"])
    return CodeSnippet(id=snippet_id, code=code, label=int(vulnerable))


def make_synthetic_corpus(n: int, seed: int = 123456) -> list[CodeSnippet]:
    """n labeled snippets, alternating classes, deterministic in the seed."""
    rng = random.Random(seed)
    return [make_snippet(i, vulnerable=(i % 2 == 1), rng=rng) for i in range(n)]


def write_synthetic_jsonl(path: str, n: int, seed: int = 123456) -> Sequence[CodeSnippet]:
    snippets = make_synthetic_corpus(n, seed)
    save_jsonl(snippets, path)
    return snippets
