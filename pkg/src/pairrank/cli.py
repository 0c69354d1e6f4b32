"""Command-line interface.

Subcommands: convert, stats, train, eval, rank. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, harness, metrics
from .harness import CheckpointError, NumericalAbort, TrainConfig
from .model import score_pair
from .textenc import Vocab

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_dataset(path: str, split: str = "test") -> corpus.Dataset:
    with open(path, encoding="utf-8") as f:
        return corpus.parse_canonical(f, name=Path(path).stem, split=split)


def _load_model(checkpoint_path: str, vocab_path: str):
    with open(checkpoint_path, "rb") as f:
        params = harness.load_checkpoint(f)
    with open(vocab_path, encoding="utf-8") as f:
        vocab = Vocab.load(f)
    if params.config.vocab_size != len(vocab):
        raise CheckpointError(
            f"checkpoint vocab_size {params.config.vocab_size} != vocab size {len(vocab)}")
    return params, vocab


def cmd_convert(args) -> int:
    if args.from_format != "tsv":
        print(f"error: unsupported input format {args.from_format!r}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.infile, encoding="utf-8") as f:
        ds = corpus.convert_tsv(f, name=Path(args.infile).stem)
    with open(args.outfile, "w", encoding="utf-8") as f:
        corpus.write_canonical(ds, f)
    return EXIT_OK


def cmd_stats(args) -> int:
    ds = _load_dataset(args.infile)
    print(json.dumps(corpus.compute_stats(ds).to_dict(), indent=2))
    return EXIT_OK


def cmd_train(args) -> int:
    with open(args.config, encoding="utf-8") as f:
        cfg_obj = json.load(f)
    if args.epochs is not None:
        cfg_obj["num_epochs"] = args.epochs
    if args.seed is not None:
        cfg_obj["base_seed"] = args.seed
        cfg_obj.setdefault("model", {})["seed"] = args.seed
        cfg_obj.setdefault("sampling", {})["seed"] = args.seed
    config = TrainConfig.from_dict(cfg_obj)
    train_set = _load_dataset(args.train, split="train")
    dev_set = _load_dataset(args.dev, split="dev") if args.dev else None
    params, vocab, history = harness.train(config, train_set, dev_set)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "model.ckpt", "wb") as f:
        harness.save_checkpoint(params, f)
    with open(out / "vocab.txt", "w", encoding="utf-8") as f:
        vocab.save(f)
    with open(out / "history.json", "w", encoding="utf-8") as f:
        json.dump(history.to_dict(), f, indent=2)
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
    print(json.dumps({"out_dir": str(out), "steps": len(history.steps),
                      "final_loss": history.steps[-1][1] if history.steps else None}))
    return EXIT_OK


def cmd_eval(args) -> int:
    params, vocab = _load_model(args.checkpoint, args.vocab)
    ds = _load_dataset(args.data)
    kept = corpus.filter_evaluable(ds, args.filter)
    report = metrics.evaluate(params, vocab, ds, filter_mode=args.filter)
    if args.run_file:
        rankings = metrics.rank_dataset(params, vocab, kept)
        with open(args.run_file, "w", encoding="utf-8") as f:
            metrics.write_trec_run(rankings, f)
    print(report.to_json())
    return EXIT_OK


def cmd_rank(args) -> int:
    params, vocab = _load_model(args.checkpoint, args.vocab)
    with open(args.answers, encoding="utf-8") as f:
        answers = [line.strip() for line in f if line.strip()]
    if not answers:
        print("error: answers file is empty", file=sys.stderr)
        return EXIT_DATA
    scored = [(score_pair(params, vocab, args.question, a), i, a)
              for i, a in enumerate(answers)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    for rank, (score, _, answer) in enumerate(scored, start=1):
        print(f"{rank}\t{score:.6f}\t{answer}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pairrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a corpus to canonical JSONL")
    p.add_argument("--from", dest="from_format", required=True, choices=["tsv"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="print dataset statistics as JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", default=None)
    p.add_argument("--config", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--filter", default="require_positive", choices=list(corpus.FILTER_MODES))
    p.add_argument("--run-file", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="rank ad-hoc candidate answers for a question")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--answers", required=True, help="text file, one candidate per line")
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (corpus.CorpusError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
