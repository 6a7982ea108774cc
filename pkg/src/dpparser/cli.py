"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

from .bench import bench_decode
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import ConllError, PUNCT_TAGS, Vocabulary, evaluate, load_conll, write_conll
from .neural import ModelConfig, load_pretrained_embeddings
from .selftest import run_selftest
from .toy import toy_treebank
from .train import TrainConfig, ensemble_parse, new_parser, train, trainable

SYSTEMS = ("standard", "hybrid", "eager", "edge-factored")


class UsageError(Exception):
    pass


def _need_file(path, flag):
    if not os.path.isfile(path):
        raise UsageError(f"{flag}: no such file {path!r}")


def cmd_train(args) -> int:
    kind = "edge" if args.system == "edge-factored" else args.system
    try:
        config = TrainConfig(
            system=kind, features=args.features, mode=args.mode, epochs=args.epochs,
            batch_tokens=args.batch_tokens, seed=args.seed, punct=args.punct,
            model=ModelConfig(lstm_hidden=args.lstm_hidden, mlp_hidden=args.mlp_hidden,
                              biaffine_dim=args.biaffine_dim, word_dim=args.word_dim,
                              lstm_dropout=args.lstm_dropout, mlp_dropout=args.mlp_dropout))
    except ValueError as exc:
        raise UsageError(f"unsupported combination: {exc}")
    _need_file(args.train, "--train")
    if args.dev:
        _need_file(args.dev, "--dev")
    if args.embeddings:
        _need_file(args.embeddings, "--embeddings")
    train_set = load_conll(args.train)
    dev_set = load_conll(args.dev) if args.dev else []
    usable, _ = trainable(train_set)
    parser = new_parser(config, Vocabulary.build(usable)) if usable else None
    if parser is not None and args.embeddings:
        with open(args.embeddings, encoding="utf-8") as f:
            count = load_pretrained_embeddings(f, parser.vocab, parser.model)
        print(f"initialised {count} word vectors from {args.embeddings}", file=sys.stderr)
    metrics_path = args.metrics or args.out + ".metrics.jsonl"
    with open(metrics_path, "w") as log:
        result = train(train_set, dev_set, config, metrics_log=log, parser=parser)
    save_checkpoint(args.out, result.parser, {
        "best_epoch": result.best_epoch, "best_dev_uas": result.best_dev_uas,
        "skipped_sentences": result.skipped, "train_config": asdict(config)})
    print(f"best dev UAS {100 * result.best_dev_uas:.2f} at epoch {result.best_epoch}; "
          f"wrote {args.out} and {metrics_path}")
    return 0


def cmd_parse(args) -> int:
    _need_file(args.input, "--input")
    parser = load_checkpoint(args.model)
    sentences = load_conll(args.input)
    trees = parser.parse(sentences)
    _write(args.output, trees, sentences)
    return 0


def _write(path, trees, sentences):
    if path == "-":
        write_conll(trees, sentences, sys.stdout)
    else:
        with open(path, "w", encoding="utf-8") as f:
            write_conll(trees, sentences, f)


def cmd_eval(args) -> int:
    gold = load_conll(args.gold)
    pred = load_conll(args.pred)
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predicted sentences for {len(gold)} gold sentences")
    if not all(s.is_annotated for s in pred):
        raise ValueError("predicted file has tokens without heads")
    ev = evaluate([s.gold_tree for s in pred], gold, args.punct)
    print(f"UAS {100 * ev.uas:.2f} UEM {100 * ev.uem:.2f}")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(max_n=args.max_n, draws=args.draws, seed=args.seed,
                           inject_fault=args.inject_fault)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  {r.detail}" if r.detail else ""
        print(f"{status}  {r.name:<15} {r.checks:>7} checks  {r.seconds:6.2f}s{extra}")
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    rows = bench_decode(args.n, args.system, args.repeats, args.seed)
    if args.json:
        for row in rows:
            print(json.dumps(asdict(row)))
        return 0
    print(f"{'n':>6} {'mean (s)':>12} {'ratio':>7}")
    for row in rows:
        ratio = "" if row.ratio is None else f"{row.ratio:7.2f}"
        print(f"{row.n:>6} {row.mean_seconds:>12.6f} {ratio}")
    return 0


def cmd_ensemble(args) -> int:
    paths = [p for p in args.models.split(",") if p]
    if not paths:
        raise UsageError("--models lists no checkpoints")
    _need_file(args.input, "--input")
    parsers = [load_checkpoint(p) for p in paths]
    sentences = load_conll(args.input)
    _write(args.output, ensemble_parse(parsers, sentences), sentences)
    return 0


def cmd_toy(args) -> int:
    train_set, dev_set = toy_treebank(args.train_size, args.dev_size, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, data in (("train", train_set), ("dev", dev_set)):
        _write(os.path.join(args.out_dir, f"{name}.conll"), [s.gold_tree for s in data], data)
    print(f"wrote {len(train_set)} train and {len(dev_set)} dev sentences to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpparser", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a parser and write its best checkpoint")
    p.add_argument("--system", choices=SYSTEMS, required=True)
    p.add_argument("--mode", choices=("local", "global"), default="global")
    p.add_argument("--features", type=int, choices=(1, 2, 3, 4), default=2,
                   help="positional features: 1={b0} 2={s0,b0} 3={s1,s0,b0} 4={s2,s1,s0,b0}")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--embeddings", help="text word vectors (dimension must match --word-dim)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--metrics", help="JSON-lines metrics log (default: <out>.metrics.jsonl)")
    p.add_argument("--punct", choices=sorted(PUNCT_TAGS), default="ptb")
    p.add_argument("--batch-tokens", type=int, default=1000)
    p.add_argument("--word-dim", type=int, default=100)
    p.add_argument("--lstm-hidden", type=int, default=256)
    p.add_argument("--mlp-hidden", type=int, default=256)
    p.add_argument("--biaffine-dim", type=int, default=256)
    p.add_argument("--lstm-dropout", type=float, default=0.0)
    p.add_argument("--mlp-dropout", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="fill the HEAD column with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="CoNLL output path, or - for stdout")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="UAS/UEM of predicted against gold CoNLL")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--punct", choices=sorted(PUNCT_TAGS), default="ptb")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selftest", help="enumeration-backed equivalence checks")
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("bench", help="decode wall time over random score tables")
    p.add_argument("--n", type=int, nargs="+", default=[50, 100, 200, 400])
    p.add_argument("--system", choices=("hybrid", "eager"), default="eager")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="one JSON object per row")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ensemble", help="vote-reparsing ensemble of checkpoints")
    p.add_argument("--models", required=True, help="comma-separated checkpoint paths")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("toy", help="write the synthetic toy treebank")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-size", type=int, default=2000)
    p.add_argument("--dev-size", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_toy)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"dpparser {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, ConllError, ValueError, OSError, FloatingPointError) as exc:
        print(f"dpparser {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
