"""Command line front end: fit, apply, invert, report, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import bench, pipeline
from .config import ConfigFile, build_registry, load_config
from .csvio import read_csv, write_csv
from .data_model import deserialize_pipeline, serialize_pipeline
from .errors import TabTreeError
from .inversion import invert

SEED_ENV = "TABTREE_SEED"


def _log(args, msg):
    if not args.quiet:
        print(msg)


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise TabTreeError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _load_store(path):
    return deserialize_pipeline(Path(path).read_bytes())


def _numeric_columns(frame: pd.DataFrame) -> pd.DataFrame:
    """Convert columns read as text to floats where every present cell parses."""
    out = {}
    for col in frame.columns:
        try:
            out[col] = pd.to_numeric(frame[col].astype(object).where(frame[col].notna(), np.nan)).astype(float)
        except (ValueError, TypeError):
            out[col] = frame[col]
    return pd.DataFrame(out, index=frame.index)


def cmd_fit(args):
    config = load_config(args.config) if args.config else ConfigFile()
    registry = build_registry(config)
    cfg = config.pipeline
    seed = _seed(args)
    if seed is not None:
        cfg.master_seed = seed
    result = pipeline.fit(read_csv(args.train), cfg, registry)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(result.train, out / "train_out.csv")
    write_csv(result.val, out / "val_out.csv")
    if result.labels is not None:
        write_csv(result.labels, out / "labels_out.csv")
        write_csv(result.val_labels, out / "val_labels_out.csv")
    (out / "pipeline.json").write_bytes(serialize_pipeline(result.store))
    _log(args, f"fitted {len(result.store.sources)} columns, {result.train.shape[1]} returned; wrote {out}")


def cmd_apply(args):
    store = _load_store(args.pipeline)
    features, labels = pipeline.apply(store, read_csv(args.test), traindata=args.traindata,
                                      noise_augment=args.noise_augment)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(features, out / "test_out.csv")
    if labels is not None:
        write_csv(labels, out / "test_labels_out.csv")
    _log(args, f"applied to {len(features)} rows; wrote {out}")


def cmd_invert(args):
    store = _load_store(args.pipeline)
    data = _numeric_columns(read_csv(args.data))
    recovered, _, info = invert(store, data, target=args.target)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(recovered, out / "recovered.csv")
    (out / "inversion_info.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _log(args, f"recovered {list(recovered.columns)}; wrote {out}")


def cmd_report(args):
    store = _load_store(args.pipeline)
    print("columntype report")
    for kind, headers in store.columntype_report.items():
        if headers:
            print(f"  {kind}: {headers}")
    print("columns")
    for h, source in store.sources.items():
        role = "label" if source.is_label else store.config["column_kinds"][h]
        print(f"  {h} [{role}] root={source.root} infill={source.infill.get('strategy', '-')}")
        for b in source.bases:
            mark = "" if b.retained else " (replaced)"
            print(f"    {b.slot:<13} {b.category_id:<6} -> {', '.join(b.output_headers)}{mark}")


def _fractions(text):
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise argparse.ArgumentTypeError("fractions must lie in (0, 1]")
    return values


def cmd_bench(args):
    seed = _seed(args) or 0
    dataset = bench.generate_synthetic(args.rows, seed)
    results = bench.run_scenarios(dataset, fractions=args.fractions, repetitions=args.reps, seed=seed,
                                  learner=args.learner, metric=args.metric)
    if args.out:
        bench.results_frame(results).to_csv(args.out, index=False, lineterminator="\n")
    print(bench.format_table(results))


def build_parser():
    parser = argparse.ArgumentParser(prog="tabtree", description="Family-tree tabular preprocessing.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit a pipeline on a train CSV")
    p.add_argument("train")
    p.add_argument("--config", help="JSON config with transformdict/processdict/pipeline sections")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", parents=[common], help="apply a fitted pipeline to new data")
    p.add_argument("pipeline")
    p.add_argument("test")
    p.add_argument("--traindata", action="store_true", help="inject noise as on train data")
    p.add_argument("--noise-augment", type=int, default=0, metavar="N")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("invert", parents=[common], help="recover source columns from returned columns")
    p.add_argument("pipeline")
    p.add_argument("data")
    p.add_argument("--target", choices=("labels", "test"), default="test")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("report", parents=[common], help="print the columntype report and fitted bases")
    p.add_argument("pipeline")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", parents=[common], help="run the synthetic benchmark scenarios")
    p.add_argument("--rows", type=int, default=10000)
    p.add_argument("--fractions", type=_fractions, default=(0.1, 0.3, 1.0))
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--learner", choices=("logreg", "svc"), default="logreg")
    p.add_argument("--metric", choices=("auc", "acc"), default="auc")
    p.add_argument("--out", help="write results CSV here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (TabTreeError, OSError, ValueError) as exc:
        print(f"tabtree {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
