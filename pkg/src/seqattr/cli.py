"""Command line front end for the full pipeline.

Subcommands: ingest, train, grid, tpartite, epochs, synth, serve.
Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.
Every output file is byte-identical across runs given the same inputs
and seeds.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .attribution import (
    MODE_BOTH,
    SliceError,
    SliceSpec,
    build_grid,
    epoch_comparison,
    epoch_comparison_export,
    select_events,
    tpartite_document,
)
from .data import (
    DataError,
    Dataset,
    LABEL_POS,
    encode_dataset,
    load_dataset,
    save_dataset,
)
from .model import (
    ModelCheckpoint,
    TrainConfig,
    TrainingDiverged,
    extract_attentions,
    train,
)
from .svgrender import render_grid, render_tpartite
from .synth import GenerationError, PlantSpec, generate

MODE_TOKENS = {"pos": "positive", "neg": "negative",
               "both": "both", "diff": "difference"}


class CliError(Exception):
    """Failure with a chosen exit code."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this tool reserves 2 for data
    # errors, so remap and show the full help text
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pair(text: str, cast, sep=":"):
    lo, _, hi = text.partition(sep)
    if not _:
        raise ValueError(f"expected LO{sep}HI, got {text!r}")
    return cast(lo), cast(hi)


def float_pair(text: str):
    return _pair(text, float)


def int_pair(text: str):
    return _pair(text, int)


def attr_list(text: str):
    names = [n for n in text.split(",") if n]
    if not names:
        raise ValueError("expected a comma-separated attribute list")
    return tuple(names)


def write_text(path, content: str):
    if path is None:
        sys.stdout.write(content)
    else:
        Path(path).write_text(content)


def write_json(path, doc):
    write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_data(args) -> Dataset:
    overrides = None
    if getattr(args, "schema", None):
        try:
            overrides = json.loads(Path(args.schema).read_text())
        except json.JSONDecodeError as exc:
            raise CliError(f"schema file {args.schema}: {exc}", 2)
        except OSError as exc:
            raise CliError(f"schema file: {exc}", 2)
    return load_dataset(args.data, numeric_bins=args.bins,
                        schema_overrides=overrides)


def schema_report(dataset: Dataset) -> dict:
    n_pos = sum(1 for i in dataset.instances if i.label == LABEL_POS)
    return {
        "v": 1,
        "attributes": [
            {"index": i, "name": a.name, "kind": a.kind,
             "levels": list(a.level_labels())}
            for i, a in enumerate(dataset.schema)
        ],
        "t_max": dataset.t_max,
        "instances": {"pos": n_pos,
                      "neg": len(dataset.instances) - n_pos,
                      "total": len(dataset.instances)},
    }


def load_checkpoints(directory) -> dict:
    path = Path(directory)
    if not path.is_dir():
        raise CliError(f"checkpoint directory not found: {directory}", 2)
    store = {}
    for file in sorted(path.glob("epoch_*.json")):
        cp = ModelCheckpoint.load(file)
        store[cp.epoch] = cp
    if not store:
        raise CliError(f"no checkpoints under {directory}", 2)
    return store


def pick_checkpoint(store: dict, epoch) -> ModelCheckpoint:
    if epoch is None:
        return store[max(store)]
    if epoch not in store:
        raise CliError(
            f"no checkpoint for epoch {epoch}; have {sorted(store)}", 2)
    return store[epoch]


def resolve_attrs(dataset: Dataset, names) -> tuple:
    by_name = {a.name: i for i, a in enumerate(dataset.schema)}
    out = []
    for n in names:
        if n not in by_name:
            raise CliError(f"unknown attribute {n!r}; "
                           f"have {[a.name for a in dataset.schema]}", 2)
        out.append(by_name[n])
    return tuple(out)


def build_slice(args, dataset: Dataset, epoch: int) -> SliceSpec:
    attrs = resolve_attrs(dataset, args.attrs) if args.attrs else None
    att = args.att if args.att else (0.0, 1.0)
    mode = MODE_TOKENS[args.mode] if getattr(args, "mode", None) else MODE_BOTH
    spec = SliceSpec(attention_range=att, time_range=args.t,
                     attributes=attrs, mode=mode, epoch=epoch)
    spec.resolve(dataset)
    return spec


def cmd_ingest(args) -> int:
    write_json(args.out, schema_report(load_data(args)))
    return 0


_SYNTH_FLAG_FIELDS = (
    ("n", "n_instances"), ("t_max", "t_max"), ("n_attrs", "n_attributes"),
    ("levels", "levels_per_attribute"), ("planted_attr", "planted_attribute"),
    ("planted_level", "planted_level"), ("window", "window"),
    ("noise", "noise_rate"), ("min_length", "min_length"),
)


def _synth_spec(args) -> PlantSpec:
    given = {field: getattr(args, flag) for flag, field in _SYNTH_FLAG_FIELDS
             if getattr(args, flag) is not None}
    if args.spec is None:
        return PlantSpec(**given)
    if given:
        raise CliError("--spec replaces the shape flags; pass one or the other", 1)
    try:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read spec file: {exc}", 2)
    except json.JSONDecodeError as exc:
        raise CliError(f"spec file is not valid JSON: {exc}", 1)
    if not isinstance(raw, dict):
        raise CliError("spec file must hold a JSON object", 1)
    allowed = {f.name for f in dataclasses.fields(PlantSpec)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise CliError(f"unknown spec fields: {', '.join(unknown)}", 1)
    for key in ("window", "background", "balance_range"):
        if isinstance(raw.get(key), list):
            raw[key] = tuple(raw[key])
    return PlantSpec(**raw)


def cmd_synth(args) -> int:
    try:
        spec = _synth_spec(args)
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc), 1)
    dataset = generate(spec, seed=args.seed)
    fmt = "jsonl" if str(args.out).endswith(".jsonl") else "csv"
    save_dataset(dataset, args.out, format=fmt)
    return 0


def cmd_train(args) -> int:
    try:
        config = TrainConfig(hidden_size=args.hidden_size, epochs=args.epochs,
                             batch_size=args.batch_size,
                             learning_rate=args.learning_rate, seed=args.seed,
                             checkpoint_every=args.checkpoint_every,
                             holdout_fraction=args.holdout,
                             stop_accuracy=args.stop_accuracy)
    except ValueError as exc:
        raise CliError(str(exc), 1)
    dataset = load_data(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = train(dataset, config, checkpoint_dir=out)
    except TrainingDiverged:
        raise
    except ValueError as exc:
        raise CliError(str(exc), 2)
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "train_accuracy", "test_accuracy"])
        for row in result.history:
            writer.writerow([row.epoch, repr(row.loss), repr(row.train_accuracy),
                             "" if row.test_accuracy is None
                             else repr(row.test_accuracy)])
    final = result.final
    acc = final.test_accuracy if final.test_accuracy is not None \
        else final.train_accuracy
    print(f"trained {final.epoch} epochs, loss {final.loss:.6f}, "
          f"accuracy {acc:.4f}, checkpoints "
          f"{[cp.epoch for cp in result.checkpoints]}")
    return 0


def cmd_grid(args) -> int:
    dataset = load_data(args)
    store = load_checkpoints(args.checkpoints)
    cp = pick_checkpoint(store, args.epoch)
    records = extract_attentions(cp.params, encode_dataset(dataset))
    spec = build_slice(args, dataset, cp.epoch)
    doc = build_grid(dataset, records, spec).export()
    write_json(args.out, doc)
    if args.svg:
        write_text(args.svg, render_grid(doc))
    return 0


def cmd_tpartite(args) -> int:
    if args.attr2 is not None and args.attr2 == args.attr:
        raise CliError("attr and attr2 must differ; pass a single --attr "
                       "for the per-class view", 1)
    dataset = load_data(args)
    store = load_checkpoints(args.checkpoints)
    cp = pick_checkpoint(store, args.epoch)
    records = extract_attentions(cp.params, encode_dataset(dataset))
    (attr,) = resolve_attrs(dataset, (args.attr,))
    attr2 = resolve_attrs(dataset, (args.attr2,))[0] if args.attr2 else None
    spec = build_slice(args, dataset, cp.epoch)
    selection = select_events(dataset, records, spec)
    doc = tpartite_document(dataset, selection, attr, attr2,
                            args.class_label, cp.epoch)
    write_json(args.out, doc)
    if args.svg:
        write_text(args.svg, render_tpartite(doc))
    return 0


def cmd_epochs(args) -> int:
    dataset = load_data(args)
    store = load_checkpoints(args.checkpoints)
    checkpoints = [store[e] for e in sorted(store)]
    if len(checkpoints) < 2:
        raise CliError("band comparison needs at least 2 checkpoints", 2)
    attrs = resolve_attrs(dataset, args.attrs) if args.attrs else None
    results = epoch_comparison(checkpoints, dataset, slice_low=args.low,
                               slice_high=args.high, attributes=attrs)
    write_json(args.out, epoch_comparison_export(results))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    dataset = load_data(args)
    serve(dataset, checkpoint_dir=args.checkpoints, host=args.host,
          port=args.port)
    return 0


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="dataset file (csv or jsonl)")
    p.add_argument("--bins", type=int, default=9,
                   help="bin count for numerical attributes (default 9)")
    p.add_argument("--schema", default=None,
                   help="JSON file overriding inferred attribute kinds")


def _add_slice_flags(p):
    p.add_argument("--att", type=float_pair, default=None, metavar="LO:HI",
                   help="attention band, e.g. 0.6:1.0 (default 0:1)")
    p.add_argument("--t", type=int_pair, default=None, metavar="T0:T1",
                   help="closed timestep range, 1-based (default full)")
    p.add_argument("--epoch", type=int, default=None,
                   help="checkpoint epoch (default: latest)")


def build_parser() -> _Parser:
    parser = _Parser(prog="seqattr",
                     description="Train attention models over event sequences "
                                 "and inspect what they attend to.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="validate a dataset and "
                       "report its inferred schema")
    _add_data_flags(p)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("synth", help="generate a planted-pattern dataset")
    p.add_argument("--out", required=True, help="output file (.csv or .jsonl)")
    p.add_argument("--spec", default=None, metavar="FILE",
                   help="generator spec as JSON (replaces the shape flags)")
    p.add_argument("--n", type=int, default=None, help="instance count (1000)")
    p.add_argument("--t-max", type=int, default=None, help="maximum length (12)")
    p.add_argument("--n-attrs", type=int, default=None, help="attribute count (4)")
    p.add_argument("--levels", type=int, default=None,
                   help="levels per attribute (5)")
    p.add_argument("--planted-attr", type=int, default=None)
    p.add_argument("--planted-level", type=int, default=None)
    p.add_argument("--window", type=int_pair, default=None, metavar="W0:W1")
    p.add_argument("--noise", type=float, default=None, help="label flip rate (0.05)")
    p.add_argument("--min-length", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train and write checkpoints + metrics")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", "--hidden-size", dest="hidden_size",
                   type=int, default=32)
    p.add_argument("--batch", "--batch-size", dest="batch_size",
                   type=int, default=32)
    p.add_argument("--lr", "--learning-rate", dest="learning_rate",
                   type=float, default=1e-3)
    p.add_argument("--checkpoint-every", type=int, default=25)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--stop-accuracy", type=float, default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("grid", help="export the pairwise matrix grid")
    _add_data_flags(p)
    p.add_argument("--checkpoints", required=True, help="checkpoint directory")
    _add_slice_flags(p)
    p.add_argument("--attrs", type=attr_list, default=None, metavar="a,b,c",
                   help="attribute subset by name (default all)")
    p.add_argument("--mode", choices=sorted(MODE_TOKENS), default="both")
    p.add_argument("--out", default=None, help="JSON path (default stdout)")
    p.add_argument("--svg", default=None, help="also render a static SVG")
    p.set_defaults(handler=cmd_grid)

    p = sub.add_parser("tpartite", help="export temporal pattern graphs")
    _add_data_flags(p)
    p.add_argument("--checkpoints", required=True)
    _add_slice_flags(p)
    p.add_argument("--attr", required=True, help="attribute name")
    p.add_argument("--attr2", default=None, help="secondary attribute name")
    p.add_argument("--class", dest="class_label", choices=("pos", "neg"),
                   default=None, help="restrict the single-attr view")
    p.add_argument("--out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(handler=cmd_tpartite, attrs=None, mode=None)

    p = sub.add_parser("epochs", help="compare attention bands across epochs")
    _add_data_flags(p)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--low", type=float_pair, default=(0.0, 0.2), metavar="LO:HI")
    p.add_argument("--high", type=float_pair, default=(0.6, 1.0), metavar="LO:HI")
    p.add_argument("--attrs", type=attr_list, default=None, metavar="a,b,c")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_epochs)

    p = sub.add_parser("serve", help="launch the HTTP service")
    _add_data_flags(p)
    p.add_argument("--checkpoints", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"seqattr: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SliceError as exc:
        print(f"seqattr: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, GenerationError) as exc:
        print(f"seqattr: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"seqattr: error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"seqattr: error: training diverged: {exc}", file=sys.stderr)
        return 3


def entrypoint():
    sys.exit(run())
