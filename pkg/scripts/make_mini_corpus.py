#!/usr/bin/env python3
"""Generate the bundled mini corpus (50 C-like snippets, fixed seed).

The snippets deliberately mix indentation styles (tabs vs spaces), double
spaces, blank lines, and trailing whitespace so the two normalizations
produce measurably different token counts. Run from the repo root:

    python3 scripts/make_mini_corpus.py
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "lineformer" / "data" / "mini_corpus.jsonl"

TYPES = ["int", "size_t", "char *", "uint32_t", "void *", "long"]
NAMES = ["parse_header", "copy_chunk", "read_frame", "update_crc", "decode_block",
         "flush_queue", "resize_pool", "check_magic", "scan_token", "emit_record"]
CONDS = ["len > cap", "ptr == NULL", "n < 0", "state != READY", "count >= limit",
         "offset + n > size"]
CALLS = ["memcpy(dst, src, n)", "memset(buf, 0, cap)", "advance(cursor, n)",
         "log_warn(\"short read\")", "release(pool, node)", "queue_push(q, item)"]


def make_snippet(rng: random.Random, idx: int) -> dict:
    indent = "\t" if rng.random() < 0.4 else ("    " if rng.random() < 0.5 else "  ")
    ret = rng.choice(TYPES)
    name = rng.choice(NAMES)
    sep = "  " if rng.random() < 0.3 else " "  # occasional double space
    lines = [f"{ret}{sep}{name}_{idx}(const char *src, size_t len)", "{"]
    n_vars = rng.randint(1, 3)
    for _ in range(n_vars):
        lines.append(f"{indent}{rng.choice(TYPES).strip()} {rng.choice('nmkvt')}{rng.randint(0, 9)} = 0;")
    if rng.random() < 0.6:
        lines.append("")  # blank line between declarations and body
    n_body = rng.randint(2, 6)
    for _ in range(n_body):
        roll = rng.random()
        if roll < 0.35:
            lines.append(f"{indent}if ({rng.choice(CONDS)})")
            lines.append(f"{indent}{indent}return -1;")
        elif roll < 0.75:
            trail = " " if rng.random() < 0.2 else ""  # trailing whitespace
            lines.append(f"{indent}{rng.choice(CALLS)};{trail}")
        else:
            lines.append(f"{indent}for (size_t i = 0;  i < len; i++) {{")
            lines.append(f"{indent}{indent}sum += src[i];")
            lines.append(f"{indent}}}")
    lines.append(f"{indent}return 0;")
    lines.append("}")
    code = "\n".join(lines)
    if rng.random() < 0.5:
        code += "\n"  # some snippets keep a trailing newline
    return {"idx": idx, "func": code, "target": rng.randint(0, 1)}


def main() -> None:
    rng = random.Random(20240614)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        for i in range(50):
            fh.write(json.dumps(make_snippet(rng, i)) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
