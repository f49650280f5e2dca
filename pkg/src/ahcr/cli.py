"""Command-line interface.

Subcommands: train, eval, predict, extract-features, svm-train, cluster,
synth-data.  Exit codes: 0 success, 1 usage error, 2 data/format error,
3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import container
from .clustering import class_centroids, compare_partition, kmeans, reference_partition
from .config import PRESETS, ConfigError, RunConfig, build_config
from .dataset import (CLASS_NAMES, N_CLASSES, DataFormatError, Glyphs, load_csv, load_images,
                      save_split, split_paths, synth_dataset)
from .evaluation import (EvalReport, cluster_table, comparison_table, confusion_csv,
                         confusion_pairs, evaluate, per_class_table)
from .model import Model
from .optim import TrainingDiverged, train
from .svm import svm_predict, svm_train

log = logging.getLogger("ahcr")

EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 1, 2, 3
MODEL_FILE = "model.ahcr"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ helpers

def _config(args) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    return build_config(getattr(args, "preset", None), getattr(args, "config", None), overrides)


def _load_part(cfg: RunConfig, part: str) -> Glyphs:
    if cfg.synth:
        split = synth_dataset(cfg.data_seed, cfg.per_class)
        return getattr(split, part)
    images, labels = getattr(cfg, f"{part}_images"), getattr(cfg, f"{part}_labels")
    if cfg.data_dir and not (images or labels):
        images, labels = split_paths(cfg.data_dir, part)
    if not images or not labels:
        raise UsageError(f"no {part} data: set data_dir, {part}_images/{part}_labels, or synth")
    return load_csv(images, labels, cfg.invert)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_features(path, features: np.ndarray, labels: np.ndarray) -> None:
    rows = np.column_stack([features.astype(np.float64), labels])
    fmt = ["%.9g"] * features.shape[1] + ["%d"]
    np.savetxt(path, rows, fmt=fmt, delimiter=",")


def read_features(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    labels = data[:, -1]
    if np.any(labels != np.round(labels)):
        raise DataFormatError(f"{path}: last column must hold integer labels")
    return data[:, :-1], labels.astype(np.int64)


def _report_text(report: EvalReport, by_cluster: bool, clusters=None) -> str:
    text = [f"head: {report.head}", f"samples: {report.total}",
            f"CRR: {report.crr:.2f}%", f"ECR: {report.ecr:.2f}%", "", per_class_table(report)]
    if by_cluster:
        groups = reference_partition() if clusters is None else clusters
        title = "by master-stroke group:" if clusters is None else "by learned cluster:"
        text += [title, cluster_table(report, groups)]
    ref = reference_partition()
    pairs = confusion_pairs(report, 10) if report.total > np.trace(report.confusion) else []
    if pairs:
        text.append("most frequent confusions (true -> predicted, count, same stroke group):")
        for t, p, n in pairs:
            same = "yes" if ref[t - 1] == ref[p - 1] else "no"
            text.append(f"  {CLASS_NAMES[t - 1]} -> {CLASS_NAMES[p - 1]}: {n} ({same})")
    return "\n".join(text) + "\n"


def _write_report(out: Path, report: EvalReport, by_cluster: bool, clusters=None) -> None:
    (out / f"report_{report.head}.txt").write_text(_report_text(report, by_cluster, clusters))
    (out / f"confusion_{report.head}.csv").write_text(confusion_csv(report))


def _read_clusters(path) -> np.ndarray:
    clusters = np.zeros(N_CLASSES, dtype=np.int64)
    lines = Path(path).read_text().splitlines()[1:]
    try:
        for line in lines:
            cid, _, cluster = line.split(",")
            clusters[int(cid) - 1] = int(cluster)
    except (ValueError, IndexError):
        raise DataFormatError(f"{path}: expected class_id,class_name,cluster_id rows") from None
    if clusters.min() < 1:
        raise DataFormatError(f"{path}: cluster file does not cover all {N_CLASSES} classes")
    return clusters


# ----------------------------------------------------------------- commands

def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out_dir(cfg)
    train_set = _load_part(cfg, "train")
    test_set = _load_part(cfg, "test")
    model = Model(cfg.width_tuple(), cfg.dropout_rate, cfg.precision, seed=cfg.seed)
    log.info("model widths %s, %d parameters", model.widths, model.n_params())
    history = train(model, train_set, test_set, cfg.sgd())
    container.save_recognizer(out / MODEL_FILE, model)
    history.to_csv(out / "history.csv")
    report = evaluate(model.predict, test_set, "softmax")
    _write_report(out, report, by_cluster=False)
    (out / "summary.csv").write_text("head,crr,ecr\n" + report.summary_line() + "\n")
    print(report.summary_line())
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    out = _out_dir(cfg)
    model, svm = container.load_recognizer(args.model)
    samples = _load_part(cfg, args.split)
    clusters = _read_clusters(args.clusters) if args.clusters else None
    heads = ["softmax", "svm"] if args.head == "both" else [args.head]
    if "svm" in heads and svm is None:
        raise DataFormatError(f"{args.model} has no SVM section; run svm-train first")
    reports = []
    for head in heads:
        if head == "softmax":
            predict = model.predict
        else:
            predict = lambda images: svm_predict(svm, model.features(images))  # noqa: E731
        report = evaluate(predict, samples, head)
        _write_report(out, report, args.by_cluster or clusters is not None, clusters)
        reports.append(report)
    lines = ["head,crr,ecr"] + [r.summary_line() for r in reports]
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    if len(reports) > 1:
        (out / "comparison.txt").write_text(comparison_table(reports))
    print("\n".join(lines[1:]))
    return 0


def cmd_predict(args) -> int:
    cfg = _config(args)
    model, svm = container.load_recognizer(args.model)
    images = load_images(args.images, cfg.invert)
    if args.head == "svm":
        if svm is None:
            raise DataFormatError(f"{args.model} has no SVM section; run svm-train first")
        pred = svm_predict(svm, model.features(images))
    else:
        pred = model.predict(images)
    clusters = _read_clusters(args.clusters) if args.clusters else reference_partition()
    print("row,class_id,class_name,cluster_id")
    for i, c in enumerate(pred):
        print(f"{i},{c},{CLASS_NAMES[c - 1]},{clusters[c - 1]}")
    return 0


def cmd_extract_features(args) -> int:
    cfg = _config(args)
    model, _ = container.load_recognizer(args.model)
    samples = _load_part(cfg, args.split)
    features = model.features(samples.images)
    path = Path(args.output) if args.output else _out_dir(cfg) / f"features_{args.split}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_features(path, features, samples.labels)
    print(f"{path},{features.shape[0]},{features.shape[1]}")
    return 0


def cmd_svm_train(args) -> int:
    cfg = _config(args)
    model, _ = container.load_recognizer(args.model)
    features, labels = read_features(args.features)
    if features.shape[1] != model.hidden:
        raise DataFormatError(f"features have {features.shape[1]} columns, model expects {model.hidden}")
    svm = svm_train(features, labels, cfg.svm(), n_classes=model.n_classes)
    target = args.output or args.model
    container.save_recognizer(target, model, svm)
    train_crr = 100.0 * float(np.mean(svm_predict(svm, features) == labels))
    print(f"svm,train_crr,{train_crr:.4f}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _config(args)
    model, _ = container.load_recognizer(args.model)
    samples = _load_part(cfg, args.split)
    centroids = class_centroids(model.features(samples.images), samples.labels)
    result = kmeans(centroids, k=args.k, seed=cfg.seed)
    ari = compare_partition(result)
    lines = ["class_id,class_name,cluster_id"]
    lines += [f"{i + 1},{CLASS_NAMES[i]},{c}" for i, c in enumerate(result.labels)]
    path = Path(args.output) if args.output else _out_dir(cfg) / "clusters.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    print(json.dumps({"clusters": args.k, "inertia": round(result.inertia, 6),
                      "iterations": result.n_iter, "ari_vs_reference": round(ari, 6)}))
    return 0


def cmd_synth_data(args) -> int:
    cfg = _config(args)
    split = synth_dataset(cfg.data_seed, cfg.per_class)
    out = _out_dir(cfg)
    save_split(split, out)
    print(f"{out},{len(split.train)},{len(split.test)}")
    return 0


# ------------------------------------------------------------------- parser

_HELP = {
    "learning_rate": "SGD learning rate", "momentum": "SGD momentum",
    "weight_decay": "L2 weight decay (not applied to biases)", "batch_size": "mini-batch size",
    "epochs": "training epochs (passes over the training set)", "seed": "random seed",
    "widths": "conv channel widths c1,c2,c3", "dropout_rate": "dropout on the 1024-unit layer",
    "precision": "float32 or float64",
    "svm_reg_lambda": "SVM L2 penalty", "svm_learning_rate": "SVM subgradient step",
    "svm_epochs": "SVM epochs", "svm_batch_size": "SVM mini-batch size",
    "svm_dropout_rate": "feature dropout while fitting the SVM",
    "data_dir": "directory holding {train,test}_{images,labels}.csv",
    "train_images": "training image CSV", "train_labels": "training label CSV",
    "test_images": "test image CSV", "test_labels": "test label CSV",
    "invert": "invert pixel polarity on load", "synth": "use generated glyphs instead of files",
    "per_class": "generated glyphs per class", "data_seed": "seed of the glyph generator",
    "out_dir": "output directory",
}


def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="canonical: full widths; desk: widths 16,32,64 and 15 epochs")
    g = p.add_argument_group("config keys (also valid in --config files)")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        help_text = f"{_HELP[f.name]} (default: {f.default})"
        if f.type == "bool":
            g.add_argument(flag, dest=f.name, action="store_const", const=True,
                           default=argparse.SUPPRESS, help=help_text)
        else:
            g.add_argument(flag, dest=f.name, default=argparse.SUPPRESS, metavar=f.name.upper(),
                           help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ahcr", description="Handwritten Arabic character recognizer")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the network and save a container")
    _add_config_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a container on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--head", choices=["softmax", "svm", "both"], default="softmax")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--by-cluster", action="store_true", help="add the master-stroke group table")
    p.add_argument("--clusters", help="group by this clusters.csv instead of the reference groups")
    _add_config_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify images from a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--head", choices=["softmax", "svm"], default="softmax")
    p.add_argument("--clusters", help="clusters.csv from the cluster command")
    _add_config_options(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("extract-features", help="write 1024-d hidden features as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--output")
    _add_config_options(p)
    p.set_defaults(func=cmd_extract_features)

    p = sub.add_parser("svm-train", help="fit the SVM head and store it in the container")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", help="container to write (default: overwrite --model)")
    _add_config_options(p)
    p.set_defaults(func=cmd_svm_train)

    p = sub.add_parser("cluster", help="k-means over class centroids")
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--k", type=int, default=13)
    p.add_argument("--output")
    _add_config_options(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth-data", help="write a generated glyph dataset as CSV")
    _add_config_options(p)
    p.set_defaults(func=cmd_synth_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"ahcr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, container.ContainerError, FileNotFoundError) as exc:
        print(f"ahcr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDiverged as exc:
        print(f"ahcr: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
