"""Command-line front end.

Subcommands: ``fetch``, ``census``, ``train``, ``eval-cv``, ``sweep``,
``baseline``.  Settings come from built-in defaults, then an optional config
file (``--config``), then command-line flags; flags win.  The config file is
plain ``key = value`` lines (``#`` comments allowed) using the long flag names,
with either dashes or underscores, e.g.::

    dim = 20
    epochs = 100
    motif-subset = plusminus2

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import fields
from pathlib import Path

from . import __version__, datasets
from .autodiff import NumericError
from .evaluation import dimension_sweep, epoch_sweep, run_cv
from .graph import DataError, load_edge_list
from .model import SigatConfig, embed_all, train
from .motifs import census_records, extract, extract_cached
from .serialize import save_checkpoint, write_embeddings

logger = logging.getLogger("sigat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

CENSUS_SCHEMA = {
    "type": "array",
    "minItems": 38,
    "maxItems": 38,
    "items": {
        "type": "object",
        "required": ["motif_id", "kind", "descriptor", "edge_count"],
        "additionalProperties": False,
        "properties": {
            "motif_id": {"type": "integer", "minimum": 0, "maximum": 37},
            "kind": {"enum": ["undirected-sign", "directed-sign", "triangle"]},
            "descriptor": {"type": "array", "items": {"type": "string"},
                           "minItems": 1, "maxItems": 3},
            "edge_count": {"type": "integer", "minimum": 0},
        },
    },
}


class UsageError(Exception):
    pass


# settings that may appear in a config file, with their parsers
_SETTINGS = {
    "input": str, "format": str, "dataset": str, "data_dir": str, "out": str,
    "seed": int, "threads": int, "k": int, "cache_dir": str, "l2_c": float,
    "dim": int, "hidden": int, "epochs": int, "batch_size": int, "lr": float,
    "weight_decay": float, "loss_balance": str, "motif_subset": str,
    "neighbor_cap": int, "neighbor_mode": str, "freeze_features": bool,
    "no_shuffle": bool, "epoch_list": str, "dim_list": str, "test_fraction": float,
    "method": str,
}

_DEFAULTS = {"format": "snap-tsv", "out": "runs", "seed": 0, "threads": 1, "k": 5,
             "l2_c": 1.0, "test_fraction": 0.2, "freeze_features": False,
             "no_shuffle": False, "method": "random"}


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config(path):
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"config file {path}: {exc}") from None
    out = {}
    for key, raw in parser["run"].items():
        name = key.replace("-", "_")
        if name not in _SETTINGS:
            raise UsageError(f"config file {path}: unknown setting {key!r}")
        kind = _SETTINGS[name]
        try:
            out[name] = _parse_bool(raw) if kind is bool else kind(raw)
        except ValueError as exc:
            raise UsageError(f"config file {path}: {key}: {exc}") from None
    return out


def _add_data_args(p):
    src = p.add_argument_group("input")
    src.add_argument("--dataset", choices=sorted(datasets.DATASETS),
                     help="registered dataset (looked up in --data-dir)")
    src.add_argument("--input", help="edge list file (overrides --dataset)")
    src.add_argument("--format", choices=("snap-tsv", "weighted-csv"))
    src.add_argument("--data-dir", help=f"dataset directory (default ${datasets.DATA_ENV} or ./data)")


def _add_model_args(p):
    m = p.add_argument_group("model")
    m.add_argument("--dim", type=int)
    m.add_argument("--hidden", type=int, help="fusion hidden width (default: dim)")
    m.add_argument("--epochs", type=int)
    m.add_argument("--batch-size", type=int)
    m.add_argument("--lr", type=float)
    m.add_argument("--weight-decay", type=float)
    m.add_argument("--loss-balance", help="negative-term weight, or 'auto'")
    m.add_argument("--motif-subset", choices=("all38", "plusminus2"))
    m.add_argument("--neighbor-cap", type=int)
    m.add_argument("--neighbor-mode", choices=("union", "out", "in"))
    m.add_argument("--freeze-features", action="store_true", default=None)
    m.add_argument("--no-shuffle", action="store_true", default=None)
    m.add_argument("--cache-dir", help="directory for cached motif neighborhoods")


def _add_run_args(p):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--out", help="output directory (default ./runs)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads; 1 = deterministic mode")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="sigat", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download public datasets and check their sizes")
    p.add_argument("names", nargs="*", metavar="NAME",
                   help=f"datasets to fetch: {', '.join(sorted(datasets.DATASETS))} (default: all)")
    p.add_argument("--data-dir")
    p.add_argument("--url", help="alternative download URL (single dataset only)")
    p.add_argument("--strict", action="store_true", help="fail when counts differ")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("census", help="count motif neighborhood memberships")
    _add_data_args(p)
    _add_run_args(p)

    p = sub.add_parser("train", help="train on the full graph and write embeddings")
    _add_data_args(p)
    _add_model_args(p)
    _add_run_args(p)

    for name, helptext in (("eval-cv", "k-fold link-sign prediction"),
                           ("baseline", "k-fold evaluation of a baseline embedding")):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p)
        _add_model_args(p)
        _add_run_args(p)
        p.add_argument("--k", type=int, help="number of folds (default 5)")
        p.add_argument("--l2-c", type=float, help="inverse L2 strength of the classifier")
        if name == "baseline":
            p.add_argument("--method", choices=("random",))

    p = sub.add_parser("sweep", help="epoch and dimension curves on an 80/20 split")
    _add_data_args(p)
    _add_model_args(p)
    _add_run_args(p)
    p.add_argument("--epoch-list", help="comma-separated epochs, e.g. 10,20,50,100")
    p.add_argument("--dim-list", help="comma-separated dimensions, e.g. 5,10,20,40")
    p.add_argument("--test-fraction", type=float)
    return parser


def resolve_settings(args):
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key in _SETTINGS:
            settings[key] = value
    return settings


def make_config(settings, dataset_info=None):
    names = {f.name for f in fields(SigatConfig)}
    kwargs = {k: settings[k] for k in names if settings.get(k) is not None}
    if "epochs" not in kwargs and dataset_info is not None:
        kwargs["epochs"] = dataset_info.default_epochs
    if "loss_balance" in kwargs and kwargs["loss_balance"] != "auto":
        kwargs["loss_balance"] = float(kwargs["loss_balance"])
    kwargs["shuffle"] = not settings.get("no_shuffle", False)
    kwargs["freeze_features"] = bool(settings.get("freeze_features", False))
    kwargs.pop("no_shuffle", None)
    try:
        return SigatConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_graph(settings):
    """Return ``(graph, input_path, dataset_info_or_None)``."""
    if settings.get("input"):
        path = Path(settings["input"])
        if not path.is_file():
            raise DataError(f"no such file: {path}")
        return load_edge_list(path, settings.get("format", "snap-tsv")), path, None
    name = settings.get("dataset")
    if not name:
        raise UsageError("give --input or --dataset")
    info = datasets.DATASETS[name]
    path = datasets.locate(name, settings.get("data_dir"))
    if path is None:
        raise DataError(f"dataset {name!r} is not downloaded; run `sigat fetch {name}`")
    return load_edge_list(path, info.format), path, info


def _write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_manifest(out, command, argv, settings, config, inputs, outputs, seconds):
    doc = {
        "command": command,
        "argv": argv,
        "version": __version__,
        "settings": settings,
        "config": None if config is None else config.to_dict(),
        "seed": settings.get("seed"),
        "threads": settings.get("threads"),
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": sorted(str(o) for o in outputs),
        "seconds": seconds,
    }
    _write_atomic(Path(out) / "manifest.json", json.dumps(doc, indent=2, sort_keys=True))


def _parse_list(text, name):
    try:
        values = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{name} must be comma-separated integers") from None
    if not values:
        raise UsageError(f"--{name} is empty")
    return values


# -- commands --------------------------------------------------------------------

def cmd_fetch(args):
    names = args.names or sorted(datasets.DATASETS)
    unknown = [n for n in names if n not in datasets.DATASETS]
    if unknown:
        raise UsageError(f"unknown dataset(s): {', '.join(unknown)}")
    if args.url and len(names) != 1:
        raise UsageError("--url needs exactly one dataset name")
    failed = False
    for name in names:
        path, problems = datasets.fetch(name, args.data_dir, url=args.url)
        print(f"{name}: {path}")
        for p in problems:
            print(f"  count mismatch: {p}", file=sys.stderr)
        failed |= bool(problems)
    if failed and args.strict:
        raise DataError("downloaded data does not match the published counts")
    return {}


def cmd_census(args, settings):
    g, path, _ = load_graph(settings)
    nb = extract_cached(g, None, settings.get("cache_dir"))
    records = census_records(nb)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "census.json", json.dumps(records, indent=2))
    for r in records:
        print(f"{r['motif_id']:>3}  {r['kind']:<16} {' '.join(r['descriptor']):<14} {r['edge_count']}")
    return {"inputs": [path], "outputs": [out / "census.json"], "config": None}


def cmd_train(args, settings):
    g, path, info = load_graph(settings)
    cfg = make_config(settings, info)
    nb = extract_cached(g, cfg.motif_ids, settings.get("cache_dir"))
    model, trace = train(g, cfg, callbacks=lambda e, loss: logger.info("epoch %d loss %.6f", e, loss),
                         neighborhoods=nb)
    Z = embed_all(model, nb)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_embeddings(Z, out / "embeddings.tsv",
                     sidecar={"config": cfg.to_dict(), "seed": cfg.seed, "loss_trace": trace,
                              "num_nodes": g.num_nodes})
    save_checkpoint(model, out / "model.ckpt")
    return {"inputs": [path], "config": cfg,
            "outputs": [out / "embeddings.tsv", out / "embeddings.json", out / "model.ckpt"]}


def _cmd_cv(settings, embedder):
    g, path, info = load_graph(settings)
    cfg = make_config(settings, info)
    report = run_cv(g, cfg, k=settings["k"], seed=settings["seed"], embedder=embedder,
                    threads=settings["threads"], l2_c=settings["l2_c"],
                    cache_dir=settings.get("cache_dir"),
                    dataset=info.name if info else Path(path).name)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "report.json", report.to_json())
    _write_atomic(out / "report.txt", report.to_table() + "\n")
    print(report.to_table())
    return {"inputs": [path], "config": cfg,
            "outputs": [out / "report.json", out / "report.txt"],
            "timings": report.timings}


def cmd_eval_cv(args, settings):
    return _cmd_cv(settings, "sigat")


def cmd_baseline(args, settings):
    return _cmd_cv(settings, settings.get("method", "random"))


def cmd_sweep(args, settings):
    if not settings.get("epoch_list") and not settings.get("dim_list"):
        raise UsageError("sweep needs --epoch-list and/or --dim-list")
    g, path, info = load_graph(settings)
    cfg = make_config(settings, info)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if settings.get("epoch_list"):
        rows = epoch_sweep(g, cfg, _parse_list(settings["epoch_list"], "epoch-list"),
                           settings["seed"], settings["test_fraction"])
        outputs.append(out / "epochs.csv")
        _write_csv(outputs[-1], ("epoch", "loss", "auc"), rows)
    if settings.get("dim_list"):
        rows = dimension_sweep(g, cfg, _parse_list(settings["dim_list"], "dim-list"),
                               settings["seed"], settings["test_fraction"])
        outputs.append(out / "dims.csv")
        _write_csv(outputs[-1], ("dim", "auc"), rows)
    for o in outputs:
        print(o)
    return {"inputs": [path], "config": cfg, "outputs": outputs}


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


COMMANDS = {"census": cmd_census, "train": cmd_train, "eval-cv": cmd_eval_cv,
            "sweep": cmd_sweep, "baseline": cmd_baseline}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fetch":
            cmd_fetch(args)
            return EXIT_OK
        settings = resolve_settings(args)
        start = time.perf_counter()
        result = COMMANDS[args.command](args, settings)
        write_manifest(settings["out"], args.command, argv, settings, result.get("config"),
                       result.get("inputs", []), result.get("outputs", []),
                       {"total": time.perf_counter() - start, "folds": result.get("timings")})
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, OSError) as exc:
        print(f"sigat: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"sigat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
