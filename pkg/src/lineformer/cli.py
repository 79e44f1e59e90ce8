"""Command-line entry point.

Commands: preprocess, stats, train, eval, compare, sweep. Every command
resolves its configuration from preset -> --config file -> flags, writes
the expanded configuration into the output directory, and exits nonzero on
any failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compare as compare_mod
from .checkpoint import load_checkpoint, save_checkpoint
from .config import PRESETS, RunConfig, build_run_config
from .corpus import corpus_stats, load_jsonl, split_dataset
from .lines import align_batch, alignment_records, dump_alignment, split_lines
from .model import build_model
from .tokenizer import ByteTokenizer, encode_batch, normalize_baseline, normalize_structured
from .train import (
    DEFAULT_SWEEP_GRID,
    EvalReport,
    collect_sensitive_lines,
    evaluate,
    history_to_csv,
    set_seed,
    sweep,
    sweep_to_csv,
    train,
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; overrides the preset")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for every random choice in the run")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="configuration preset (default: desk)")
    parser.add_argument("--mode", choices=["structured", "baseline"], help="preprocessing mode")
    parser.add_argument("--data", help="dataset JSONL path")


def _resolve_config(args: argparse.Namespace, extra: dict | None = None) -> RunConfig:
    file_config = {}
    if args.config:
        file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    overrides: dict = dict(extra or {})
    for key in ("out", "seed", "mode", "data"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    preset = args.preset or file_config.get("preset", "desk")
    return build_run_config(preset=preset, file_config=file_config, overrides=overrides)


def _train_overrides(args: argparse.Namespace) -> dict:
    section = {}
    if getattr(args, "epochs", None) is not None:
        section["epochs"] = args.epochs
    if getattr(args, "batch_size", None) is not None:
        section["batch_size"] = args.batch_size
    if getattr(args, "lr", None) is not None:
        section["learning_rate"] = args.lr
    return {"train": section} if section else {}


def _load_data(config: RunConfig):
    if not config.data:
        raise FileNotFoundError("no dataset given; pass --data or set 'data' in the config file")
    return load_jsonl(config.data)


def cmd_preprocess(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    snippets = _load_data(config)
    out = Path(config.out)
    config.echo(out)
    tokenizer = ByteTokenizer()
    (out / "vocab.json").write_text(tokenizer.vocab_json() + "\n", encoding="utf-8")
    normalize = normalize_structured if config.mode == "structured" else normalize_baseline

    global_path = out / f"global_tokens_{config.mode}.jsonl"
    with open(global_path, "w", encoding="utf-8") as fh:
        for start in range(0, len(snippets), config.eval_batch_size):
            batch = snippets[start : start + config.eval_batch_size]
            encoded = encode_batch([normalize(s.code) for s in batch], tokenizer, config.pipeline.max_len)
            for i, snippet in enumerate(batch):
                record = {
                    "id": snippet.id,
                    "n_tokens": int(encoded.mask[i].sum()),
                    "truncated": bool(encoded.truncated[i]),
                    "ids": encoded.tokens[i][encoded.mask[i] == 1].tolist(),
                }
                fh.write(json.dumps(record) + "\n")
    print(f"wrote {global_path}")

    if config.mode == "structured":
        records = []
        for start in range(0, len(snippets), config.eval_batch_size):
            batch = snippets[start : start + config.eval_batch_size]
            line_lists = [split_lines(s.code) for s in batch]
            aligned = align_batch(
                line_lists, tokenizer, k_cap=config.pipeline.max_lines, p=config.pipeline.tokens_per_line
            )
            records.extend(alignment_records(aligned, line_lists, [s.id for s in batch]))
        lines_path = out / "line_alignment.jsonl"
        dump_alignment(records, str(lines_path))
        print(f"wrote {lines_path}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    extra = {"stats_limit": args.limit} if args.limit is not None else None
    config = _resolve_config(args, extra)
    snippets = _load_data(config)
    out = Path(config.out)
    config.echo(out)
    stats = corpus_stats(snippets, ByteTokenizer(), limit=config.stats_limit)
    (out / "corpus_stats.json").write_text(stats.to_json() + "\n", encoding="utf-8")
    stats.write_csv(out / "per_snippet.csv")
    print(stats.to_json())
    print(f"wrote {out / 'corpus_stats.json'} and {out / 'per_snippet.csv'}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _resolve_config(args, _train_overrides(args))
    snippets = _load_data(config)
    out = Path(config.out)
    config.echo(out)
    split = split_dataset(snippets, config.ratios, config.seed)
    tokenizer = ByteTokenizer()

    set_seed(config.train.seed)
    model = build_model(config.model_config())
    result = train(model, split, config.train, tokenizer, config.pipeline)
    history_to_csv(result.history, out / "history.csv")
    save_checkpoint(model, out / "checkpoint.zip")

    if split.test:
        report = evaluate(model, split.test, tokenizer, config.pipeline, batch_size=config.eval_batch_size)
        (out / "eval_test.json").write_text(report.to_json() + "\n", encoding="utf-8")
        print(
            f"test: acc={report.accuracy:.4f} prec={report.precision:.4f} "
            f"rec={report.recall:.4f} f1={report.f1:.4f}"
        )
    print(f"trained {result.steps} steps; best valid F1 {result.best_valid_f1} at epoch {result.best_epoch}")
    print(f"wrote {out / 'checkpoint.zip'} and {out / 'history.csv'}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    snippets = _load_data(config)
    out = Path(config.out)
    config.echo(out)
    model = load_checkpoint(args.checkpoint)
    tokenizer = ByteTokenizer()

    if args.split == "all":
        subset = snippets
    else:
        split = split_dataset(snippets, config.ratios, config.seed)
        subset = list(getattr(split, args.split))
    report = evaluate(model, subset, tokenizer, config.pipeline, batch_size=config.eval_batch_size)
    report_path = out / f"eval_{args.split}.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    print(
        f"{args.split}: n={len(subset)} acc={report.accuracy:.4f} prec={report.precision:.4f} "
        f"rec={report.recall:.4f} f1={report.f1:.4f}"
    )
    if args.audit_lines:
        audit = collect_sensitive_lines(model, subset, tokenizer, config.pipeline)
        audit_path = out / f"sensitive_lines_{args.split}.jsonl"
        with open(audit_path, "w", encoding="utf-8") as fh:
            for record in audit:
                fh.write(json.dumps(record) + "\n")
        print(f"wrote {audit_path}")
    print(f"wrote {report_path}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out = Path(config.out)
    config.echo(out)
    report_a = EvalReport.from_json(Path(args.a).read_text(encoding="utf-8"))
    report_b = EvalReport.from_json(Path(args.b).read_text(encoding="utf-8"))
    result = compare_mod.compare_models(report_a, report_b, method=args.method)
    (out / "comparison.json").write_text(result.to_json() + "\n", encoding="utf-8")
    print(result.to_json())
    print(f"wrote {out / 'comparison.json'}")
    return 0


def _parse_grid(text: str) -> tuple[tuple[int, int], ...]:
    cells = []
    for part in text.split(","):
        p_str, _, k_str = part.partition(":")
        cells.append((int(p_str), int(k_str)))
    return tuple(cells)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _resolve_config(args, _train_overrides(args))
    snippets = _load_data(config)
    out = Path(config.out)
    config.echo(out)
    split = split_dataset(snippets, config.ratios, config.seed)
    grid = _parse_grid(args.grid) if args.grid else DEFAULT_SWEEP_GRID
    rows = sweep(split, config.model_config(), config.train, ByteTokenizer(), config.pipeline, grid=grid)
    sweep_to_csv(rows, out / "sweep.csv")
    for row in rows:
        print(row)
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="lineformer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_pre = sub.add_parser("preprocess", help="emit global and line-level token dumps")
    _add_common_flags(p_pre)

    p_stats = sub.add_parser("stats", help="corpus token statistics under both normalizations")
    _add_common_flags(p_stats)
    p_stats.add_argument("--limit", type=int, help="token budget for the over-limit fraction")

    p_train = sub.add_parser("train", help="train a model on a dataset split")
    _add_common_flags(p_train)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--lr", type=float)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_common_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=["train", "valid", "test", "all"], default="test")
    p_eval.add_argument("--audit-lines", action="store_true", help="dump selected sensitive lines")

    p_cmp = sub.add_parser("compare", help="compare two evaluation reports")
    _add_common_flags(p_cmp)
    p_cmp.add_argument("--a", required=True, help="first eval report JSON")
    p_cmp.add_argument("--b", required=True, help="second eval report JSON")
    p_cmp.add_argument("--method", choices=["chi2", "mcnemar"], default="chi2")

    p_sweep = sub.add_parser("sweep", help="(tokens-per-line, max-lines) grid sweep")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--epochs", type=int)
    p_sweep.add_argument("--batch-size", type=int)
    p_sweep.add_argument("--lr", type=float)
    p_sweep.add_argument("--grid", help="cells as p:k pairs, e.g. 20:70,20:100")

    args = parser.parse_args(argv)
    handlers = {
        "preprocess": cmd_preprocess,
        "stats": cmd_stats,
        "train": cmd_train,
        "eval": cmd_eval,
        "compare": cmd_compare,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
