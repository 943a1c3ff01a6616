"""Command line entry point: ``hma train|eval|ensemble|analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import Config
from .data import read_corpus
from .errors import HMAError
from .harness import (
    QUESTION_TYPES,
    analyze,
    ensemble_files,
    evaluate,
    load_eval_corpus,
    question_type_counts,
    train,
    write_predictions,
)
from .model import HMAModel


def _cmd_train(args) -> None:
    result = train(Config.from_file(args.config))
    print(json.dumps({"checkpoint": str(result.checkpoint), "best_epoch": result.best_epoch,
                      "best_dev_acc": result.best_dev_acc}))


def _cmd_eval(args) -> None:
    cfg = Config.from_file(args.config) if args.config else None
    model = HMAModel.load(args.checkpoint, cfg)
    instances = load_eval_corpus(model, args.data)
    report, preds = evaluate(model, instances, args.dump_attention or model.cfg.dump_attention)
    write_predictions(args.out, preds)
    print(json.dumps(report.to_dict()))


def _cmd_ensemble(args) -> None:
    merged = ensemble_files(args.files, args.out)
    print(json.dumps({"members": len(args.files), "instances": len(merged)}))


def _cmd_analyze(args) -> None:
    instances = read_corpus(args.data)
    props = analyze(instances)
    counts = question_type_counts(instances)
    for k in QUESTION_TYPES:
        print(f"{k:<8} {counts[k]:>7d} {props[k]:8.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hma", description="Hybrid multi-aspect reader")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="predict a corpus with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="prediction JSONL to write")
    p.add_argument("--config", help="override the config stored beside the checkpoint")
    p.add_argument("--dump-attention", metavar="DIR", help="write M_CT / M_QQ CSVs here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ensemble", help="majority-vote several prediction files")
    p.add_argument("--out", required=True)
    p.add_argument("files", nargs="+")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("analyze", help="question-type proportions of a corpus")
    p.add_argument("--data", required=True)
    p.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        args.func(args)
    except (HMAError, OSError, ValueError) as exc:
        print(f"hma {args.command}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
