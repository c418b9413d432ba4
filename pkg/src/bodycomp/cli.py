"""Command-line entry point: ``bodycomp <subcommand> [options]``.

Failures exit nonzero after printing one JSON line to stderr:
``{"error": "<ExceptionType>", "message": "..."}``.
"""

import argparse
import json
import logging
import os
import sys

from . import pipeline
from .baselines import KINDS
from .config import load_config
from .dataset import load_dataset
from .metrics import correlation_matrix
from .nnet import forward, load_model
from .preprocess import build_sample

EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_error(kind, message):
    line = json.dumps({"error": kind, "message": " ".join(str(message).split())})
    print(line, file=sys.stderr)


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _config(args):
    return load_config(args.config, args.set or ())


def cmd_synth(args):
    cfg = _config(args)
    out_dir = args.out or os.path.dirname(cfg.paths.dataset_csv) or "."
    _, summary = pipeline.run_synth(cfg, out_dir, os.path.basename(cfg.paths.dataset_csv))
    _print_json(summary)


def cmd_stats(args):
    records = load_dataset(args.csv)
    matrix = correlation_matrix(records)
    sys.stdout.write(matrix.to_csv())
    if matrix.flagged:
        logging.getLogger(__name__).warning("constant or near-constant columns: %s", ", ".join(matrix.flagged))


def cmd_preprocess(args):
    cfg = _config(args)
    csv_path = args.csv or cfg.paths.dataset_csv
    out_dir = args.out or os.path.join(cfg.paths.output_dir, "preprocessed")
    n = pipeline.run_preprocess(cfg, csv_path, out_dir)
    _print_json({"n": n, "out_dir": out_dir})


def cmd_train(args):
    cfg = _config(args)
    csv_path = args.csv or cfg.paths.dataset_csv
    out_dir = args.out or cfg.paths.output_dir
    _, history = pipeline.run_train(cfg, csv_path, out_dir)
    best = min(history, key=lambda r: r.val_loss)
    _print_json({"epochs": len(history), "best_epoch": best.epoch, "best_val_loss": best.val_loss,
                 "model": os.path.join(out_dir, cfg.paths.model_file)})


def cmd_evaluate(args):
    cfg = _config(args)
    model_path = args.model or os.path.join(cfg.paths.output_dir, cfg.paths.model_file)
    csv_path = args.csv or cfg.paths.dataset_csv
    out_dir = args.out or os.path.join(cfg.paths.output_dir, "eval")
    model = load_model(model_path)
    report, _, _ = pipeline.run_evaluate(model, cfg, csv_path, out_dir, args.subset, args.bins, args.workers)
    _print_json(report.to_flat())


def cmd_baseline(args):
    cfg = _config(args)
    kinds = list(KINDS) if args.kind == "all" else [args.kind]
    result = pipeline.run_baselines(kinds, cfg, args.csv or cfg.paths.dataset_csv)
    if args.out:
        pipeline.echo_config(cfg, args.out)
        pipeline.write_json(result, os.path.join(args.out, "baselines.json"))
    _print_json(result)


def cmd_predict(args):
    model = load_model(args.model)
    records = load_dataset(args.csv)
    matches = [r for r in records if r.id == args.id]
    if not matches:
        raise KeyError(f"no record with id {args.id!r} in {args.csv}")
    root = os.path.dirname(os.path.abspath(args.csv))
    sample = build_sample(matches[0], model.norm_stats, pipeline.model_preprocess_config(model), root)
    pbf, smm = forward(model, sample)
    _print_json({"id": args.id, "pbf": pbf, "smm": smm})


def build_parser():
    p = _Parser(prog="bodycomp", description="Body composition estimation from face images and anthropometrics.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="run configuration JSON")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a dot-path config key")
        return sp

    sp = with_config(sub.add_parser("synth", help="generate a synthetic dataset"))
    sp.add_argument("--out", help="output directory (default: directory of paths.dataset_csv)")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("stats", help="print the Pearson correlation matrix as CSV")
    sp.add_argument("csv")
    sp.set_defaults(func=cmd_stats)

    sp = with_config(sub.add_parser("preprocess", help="write network inputs for inspection"))
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_preprocess)

    sp = with_config(sub.add_parser("train", help="train the multimodal network"))
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_train)

    sp = with_config(sub.add_parser("evaluate", help="evaluate a trained network"))
    sp.add_argument("--model")
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.add_argument("--subset", choices=("val", "all"), default="val", help="validation split or every record")
    sp.add_argument("--bins", type=int, default=20, help="error histogram bins")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_evaluate)

    sp = with_config(sub.add_parser("baseline", help="fit structured-only baselines"))
    sp.add_argument("--kind", required=True, help=f"one of {', '.join(KINDS)}, or all")
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("predict", help="predict (pbf, smm) for one record")
    sp.add_argument("--model", required=True)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--id", required=True)
    sp.set_defaults(func=cmd_predict)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _emit_error("UsageError", exc)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # every failure becomes one machine-parsable line
        _emit_error(type(exc).__name__, exc)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
