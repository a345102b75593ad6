"""Command-line surface: reproducible pipelines over the library modules.

Subcommands: synth, encode, decode, gist, pca, gram, export-gram, train,
detect, eval.  Every option can come from a ``key=value`` config file
(--config), with command-line flags taking precedence.  Each output
artifact embeds the hash of its resolved configuration plus the seeds,
so re-running an artifact's config reproduces it byte-for-byte.

Exit codes: 0 success, 1 usage/config, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import anomaly, codec, data, evaluate, features, kernels, plots, svm
from .errors import ConfigError, DataError, FusegramError, NumericError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parse_config_file(path) -> dict:
    values = {}
    problems = []
    try:
        with open(path) as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    problems.append(
                        f"{path}:{line_no}: expected key=value, got {line!r}"
                    )
                    continue
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    if problems:
        raise ConfigError("\n".join(problems))
    return values


def _bool(text):
    if isinstance(text, bool):
        return text
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _mean_vector(text):
    values = [float(v) for v in str(text).split(",")]
    if len(values) != data.N_CHANNELS:
        raise ValueError(
            f"expected {data.N_CHANNELS} comma-separated values"
        )
    return values


def _resolve(args, schema: dict, config: dict) -> dict:
    """Merge CLI > config file > defaults, validating everything at once
    and reporting every problem rather than the first."""
    problems = []
    resolved = {}
    known = set(schema)
    for key in config:
        if key not in known:
            problems.append(f"config: unknown key {key!r}")
    for key, (default, caster) in schema.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in config:
            try:
                resolved[key] = caster(config[key])
            except (ValueError, TypeError) as exc:
                problems.append(f"config: bad value for {key!r}: {exc}")
        else:
            resolved[key] = default
    if problems:
        raise ConfigError("\n".join(problems))
    return resolved


def _config_hash(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _write_json(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(path, comment, header, rows):
    out = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        if comment:
            out.write(f"# {comment}\n")
        if header:
            out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _load_dataset(path, has_header) -> data.LabeledDataset:
    return data.load_csv(path, has_header=bool(has_header))


def _feature_matrix(dataset, cfg) -> np.ndarray | None:
    """None for the raw signal path; a descriptor matrix otherwise."""
    mode = cfg.get("feature", "signal")
    if mode == "signal":
        return None
    if mode == "gist":
        mat = features.gist_features(dataset, side=256)
    elif mode == "gist-raw":
        mat = features.gist_features(dataset, side=None)
    else:
        raise ConfigError(f"unknown feature path {mode!r}")
    if cfg.get("pca"):
        model = features.pca_fit(mat)
        k = features.pca_select_k(model, float(cfg["pca"]))
        mat = features.pca_transform(model, mat, k)
    return mat


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_synth(args, config):
    schema = {
        "n_per_class": (200, int),
        "noise_std": (1.0, float),
        "seed": (0, int),
        "offset": (20.0, float),
        "mean0": (None, _mean_vector),
        "mean1": (None, _mean_vector),
        "out": ("-", str),
    }
    cfg = _resolve(args, schema, config)
    means = data.default_synth_means(cfg["offset"])
    if cfg["mean0"] is not None:
        means[0] = cfg["mean0"]
    if cfg["mean1"] is not None:
        means[1] = cfg["mean1"]
    dataset = data.synthesize(data.SynthSpec(
        n_per_class=cfg["n_per_class"],
        class_means=means,
        noise_std=cfg["noise_std"],
        seed=cfg["seed"],
    ))
    data.save_csv(dataset, cfg["out"])
    return 0


def _cmd_encode(args, config):
    schema = {
        "input": (None, str),
        "out": (None, str),
        "format": ("sie", str),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"] or not cfg["out"]:
        raise ConfigError("encode needs an input CSV and --out directory")
    if cfg["format"] not in ("sie", "pgm"):
        raise ConfigError("format must be 'sie' or 'pgm'")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    os.makedirs(cfg["out"], exist_ok=True)
    files, labels, poses = [], [], []
    for s in dataset.samples:
        image = codec.encode(s)
        name = f"sample{s.id:05d}.{cfg['format']}"
        path = os.path.join(cfg["out"], name)
        if cfg["format"] == "sie":
            codec.write_sie(image, path)
        else:
            codec.write_pgm(image, path)
        files.append(name)
        labels.append(s.label)
        poses.append(s.pose)
    _write_json(os.path.join(cfg["out"], "manifest.json"), {
        "config_hash": _config_hash(cfg),
        "config": cfg,
        "count": len(files),
        "format": cfg["format"],
        "files": files,
        "labels": labels,
        "poses": poses,
    })
    return 0


def _cmd_decode(args, config):
    schema = {
        "input": (None, str),
        "out": ("-", str),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("decode needs an input directory")
    manifest_path = os.path.join(cfg["input"], "manifest.json")
    if os.path.exists(manifest_path):
        with open(manifest_path) as f:
            manifest = json.load(f)
        files = manifest["files"]
        fmt = manifest.get("format", "sie")
        labels = manifest.get("labels") or [0] * len(files)
        poses = manifest.get("poses") or [0.0] * len(files)
    else:
        files = sorted(
            f for f in os.listdir(cfg["input"]) if f.endswith(".sie")
        )
        fmt = "sie"
        labels = [0] * len(files)
        poses = [0.0] * len(files)
    if not files:
        raise DataError(f"{cfg['input']}: no encoded images found")
    samples = []
    for i, name in enumerate(files):
        path = os.path.join(cfg["input"], name)
        image = codec.read_sie(path) if fmt == "sie" else codec.read_pgm(path)
        sample = codec.decode(image, id=i, label=labels[i])
        sample.pose = poses[i]
        samples.append(sample)
    data.save_csv(data.LabeledDataset(samples), cfg["out"])
    return 0


def _cmd_gist(args, config):
    schema = {
        "input": (None, str),
        "out": ("-", str),
        "side": (256, int),
        "prefilter": (False, _bool),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("gist needs an input CSV")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    side = None if cfg["side"] <= codec.IMAGE_SIDE else cfg["side"]
    mat = features.gist_features(
        dataset, side=side, prefilter=cfg["prefilter"]
    )
    rows = (
        [_fmt(i)] + [_fmt(v) for v in row] for i, row in enumerate(mat)
    )
    _write_csv(cfg["out"], f"config_hash={_config_hash(cfg)}", None, rows)
    return 0


def _read_feature_csv(path):
    ids, rows = [], []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            ids.append(int(float(fields[0])))
            rows.append([float(v) for v in fields[1:]])
    if not rows:
        raise DataError(f"{path}: no feature rows")
    return ids, np.array(rows)


def _cmd_pca(args, config):
    schema = {
        "input": (None, str),
        "out": ("fusegram-out", str),
        "threshold": (0.99, float),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("pca needs an input feature CSV")
    _, mat = _read_feature_csv(cfg["input"])
    model = features.pca_fit(mat)
    k = features.pca_select_k(model, cfg["threshold"])
    os.makedirs(cfg["out"], exist_ok=True)
    features.save_pca(model, os.path.join(cfg["out"], "pca_model.json"))
    cumulative = np.cumsum(model.ratios)
    _write_csv(
        os.path.join(cfg["out"], "pareto.csv"),
        f"config_hash={_config_hash(cfg)} selected_k={k}",
        ["component", "ratio", "cumulative"],
        ([_fmt(i + 1), _fmt(r), _fmt(c)]
         for i, (r, c) in enumerate(zip(model.ratios, cumulative))),
    )
    plots.save_pareto_figure(
        model.ratios, os.path.join(cfg["out"], "pareto.png"),
        threshold=cfg["threshold"],
    )
    _write_json(os.path.join(cfg["out"], "pca_summary.json"), {
        "config_hash": _config_hash(cfg),
        "config": cfg,
        "selected_k": k,
        "rank": model.rank,
    })
    return 0


def _gram_for_config(cfg, dataset):
    X = dataset.channel_matrix()
    sigma = cfg.get("sigma") or kernels.median_sigma(X)
    spec = kernels.parse_kernel_tag(cfg["kernel"], sigma, cfg["epsilon"])
    return kernels.gram(spec, dataset), spec


def _cmd_gram(args, config):
    schema = {
        "input": (None, str),
        "out": ("fusegram-out", str),
        "kernel": ("rbf", str),
        "sigma": (None, float),
        "epsilon": (1e-10, float),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("gram needs an input CSV")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    gram, spec = _gram_for_config(cfg, dataset)
    os.makedirs(cfg["out"], exist_ok=True)
    _write_csv(
        os.path.join(cfg["out"], "gram.csv"),
        f"config_hash={_config_hash(cfg)} kernel={spec.tag} "
        f"sigma={spec.sigma:.17g}",
        None,
        ([_fmt(v) for v in row] for row in gram.values),
    )
    _write_json(os.path.join(cfg["out"], "gram_meta.json"), {
        "config_hash": _config_hash(cfg),
        "config": cfg,
        "kernel": spec.tag,
        "sigma": spec.sigma,
        "epsilon": spec.epsilon,
        "sample_ids": gram.sample_ids,
    })
    return 0


def _cmd_export_gram(args, config):
    schema = {
        "input": (None, str),
        "out": ("precomputed.txt", str),
        "kernel": ("rbf", str),
        "sigma": (None, float),
        "epsilon": (1e-10, float),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("export-gram needs an input CSV")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    gram, _ = _gram_for_config(cfg, dataset)
    labels = np.where(dataset.labels() == 1, 1, -1)
    svm.export_precomputed(gram, labels, cfg["out"])
    return 0


def _cmd_train(args, config):
    schema = {
        "input": (None, str),
        "out": ("model.json", str),
        "model": ("csvc", str),
        "kernel": ("rbf", str),
        "sigma": (None, float),
        "epsilon": (1e-10, float),
        "c": (1.0, float),
        "nu": (0.1, float),
        "tol": (1e-3, float),
        "positive_class": (1, int),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("train needs an input CSV")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    if cfg["model"] == "csvc":
        gram, _ = _gram_for_config(cfg, dataset)
        labels = np.where(dataset.labels() == 1, 1, -1)
        model = svm.train_csvc(gram, labels, c=cfg["c"], tol=cfg["tol"])
    elif cfg["model"] == "ocsvm":
        labels = dataset.labels()
        pos = data.subset(
            dataset, np.nonzero(labels == cfg["positive_class"])[0]
        )
        if len(pos) == 0:
            raise DataError(
                f"no samples with positive class {cfg['positive_class']}"
            )
        gram, _ = _gram_for_config(cfg, pos)
        model = svm.train_ocsvm(gram, nu=cfg["nu"], tol=cfg["tol"])
    else:
        raise ConfigError("train supports model 'csvc' or 'ocsvm'")
    svm.save_model(model, cfg["out"])
    return 0


def _confusion_csv_rows(cm):
    pos = str(cm.positive_class)
    return [
        ["", f"pred_{pos}", f"pred_not_{pos}"],
        [f"actual_{pos}", str(cm.tp), str(cm.fn)],
        [f"actual_not_{pos}", str(cm.fp), str(cm.tn)],
    ]


def _cmd_detect(args, config):
    schema = {
        "input": (None, str),
        "out": ("fusegram-out", str),
        "method": ("iforest", str),
        "positive_class": (1, int),
        "threshold": (0.5, float),
        "seed": (0, int),
        "train_fraction": (0.8, float),
        "trees": (100, int),
        "psi": (256, int),
        "gmm_k": (5, int),
        "nu": (0.1, float),
        "kernel": ("rbf", str),
        "sigma": (None, float),
        "feature": ("signal", str),
        "pca": (None, float),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if not cfg["input"]:
        raise ConfigError("detect needs an input CSV")
    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    mat = _feature_matrix(dataset, cfg)
    params = {}
    if cfg["method"] == "iforest":
        params = {"n_trees": cfg["trees"], "psi": cfg["psi"]}
    elif cfg["method"] == "gmm":
        params = {"k": cfg["gmm_k"]}
    elif cfg["method"] == "ocsvm":
        params = {"nu": cfg["nu"], "kernel": cfg["kernel"]}
        if cfg["sigma"]:
            params["sigma"] = cfg["sigma"]
    report = evaluate.novelty_eval(
        dataset,
        method=cfg["method"],
        positive_class=cfg["positive_class"],
        seed=cfg["seed"],
        train_fraction=cfg["train_fraction"],
        threshold=cfg["threshold"],
        feature_matrix=mat,
        **params,
    )
    os.makedirs(cfg["out"], exist_ok=True)
    stamp = f"config_hash={_config_hash(cfg)} seed={cfg['seed']}"
    _write_csv(
        os.path.join(cfg["out"], "scores.csv"),
        stamp,
        ["id", "score", "calibrated", "actual", "predicted"],
        ([_fmt(r["id"]), _fmt(r["score"]), _fmt(r["calibrated"]),
          _fmt(r["actual"]), _fmt(r["predicted"])] for r in report.rows),
    )
    _write_csv(
        os.path.join(cfg["out"], "confusion.csv"), stamp, None,
        _confusion_csv_rows(report.confusion),
    )
    payload = report.to_dict()
    payload["config_hash"] = _config_hash(cfg)
    payload["config"] = cfg
    _write_json(os.path.join(cfg["out"], "metrics.json"), payload)
    plots.save_confusion_figure(
        report.confusion,
        os.path.join(cfg["out"], "confusion.png"),
        title=f"{cfg['method']} (positive={cfg['positive_class']})",
    )
    return 0


def _cmd_eval(args, config):
    schema = {
        "input": ("-", str),
        "out": ("fusegram-out", str),
        "model": ("csvc", str),
        "kernel": ("all", str),
        "folds": (10, int),
        "inner_folds": (3, int),
        "seed_base": (0, int),
        "c": (1.0, float),
        "epsilon": (1e-10, float),
        "sigma": (None, float),
        "tol": (1e-3, float),
        "feature": ("signal", str),
        "pca": (None, float),
        "prob_mode": ("normalize", str),
        "bandwidth": (None, float),
        "threshold": (0.5, float),
        "positive_class": (1, int),
        "seed": (0, int),
        "train_fraction": (0.8, float),
        "has_header": (False, _bool),
    }
    cfg = _resolve(args, schema, config)
    if cfg["model"] != "csvc":
        # one-class models route through the novelty protocol
        args_detect = argparse.Namespace(
            input=cfg["input"], out=cfg["out"], method=cfg["model"],
            positive_class=cfg["positive_class"],
            threshold=cfg["threshold"], seed=cfg["seed"],
            train_fraction=cfg["train_fraction"], trees=None, psi=None,
            gmm_k=None, nu=None, kernel=None, sigma=cfg["sigma"],
            feature=cfg["feature"], pca=cfg["pca"],
            has_header=cfg["has_header"],
        )
        return _cmd_detect(args_detect, {})

    dataset = _load_dataset(cfg["input"], cfg["has_header"])
    mat = _feature_matrix(dataset, cfg)
    base = mat if mat is not None else dataset.channel_matrix()
    sigma = cfg["sigma"] or kernels.median_sigma(base)
    if cfg["kernel"] == "all":
        specs = kernels.enumerate_kernels(sigma, cfg["epsilon"])
    else:
        specs = [
            kernels.parse_kernel_tag(tag, sigma, cfg["epsilon"])
            for tag in cfg["kernel"].split(",")
        ]
    reports = evaluate.nested_cv(
        dataset, specs,
        outer_folds=cfg["folds"],
        seed_base=cfg["seed_base"],
        c=cfg["c"],
        tol=cfg["tol"],
        inner_folds=cfg["inner_folds"],
        prob_mode=cfg["prob_mode"],
        bandwidth=cfg["bandwidth"],
        feature_matrix=mat,
    )
    os.makedirs(cfg["out"], exist_ok=True)
    stamp = f"config_hash={_config_hash(cfg)} seed_base={cfg['seed_base']}"
    rows = []
    for rep in reports:
        for fm in rep.fold_metrics:
            rows.append([
                rep.spec_tag, _fmt(fm["fold"]), _fmt(fm["accuracy"]),
                _fmt(fm["sensitivity"]), _fmt(fm["specificity"]),
                _fmt(fm["sigma"]),
            ])
    _write_csv(
        os.path.join(cfg["out"], "report.csv"), stamp,
        ["spec", "fold", "accuracy", "sensitivity", "specificity", "sigma"],
        rows,
    )
    _write_json(os.path.join(cfg["out"], "report.json"), {
        "config_hash": _config_hash(cfg),
        "config": cfg,
        "reports": [rep.to_dict() for rep in reports],
    })
    for rep in reports:
        tag = rep.spec_tag.replace(":", "_")
        _write_csv(
            os.path.join(cfg["out"], f"confusion_{tag}.csv"), stamp, None,
            _confusion_csv_rows(rep.confusion),
        )
    plots.save_errorbar_figure(
        reports, os.path.join(cfg["out"], "accuracy_errorbars.png")
    )
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

_COMMANDS = {
    "synth": _cmd_synth,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "gist": _cmd_gist,
    "pca": _cmd_pca,
    "gram": _cmd_gram,
    "export-gram": _cmd_export_gram,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
}


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fusegram",
        description="sensor-fusion gesture detection pipelines",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    bool_action = argparse.BooleanOptionalAction

    p = sub.add_parser("synth", help="synthesize a labeled dataset")
    p.add_argument("--n-per-class", type=int, dest="n_per_class")
    p.add_argument("--noise-std", type=float, dest="noise_std")
    p.add_argument("--seed", type=int)
    p.add_argument("--offset", type=float)
    p.add_argument("--mean0", type=_mean_vector)
    p.add_argument("--mean1", type=_mean_vector)
    p.add_argument("--out")

    p = sub.add_parser("encode", help="encode samples to 4x4 images")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--format", choices=("sie", "pgm"))
    p.add_argument("--has-header", action=bool_action, dest="has_header")

    p = sub.add_parser("decode", help="decode images back to a CSV")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")

    p = sub.add_parser("gist", help="export 512-dim descriptors")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--side", type=int)
    p.add_argument("--prefilter", action=bool_action)
    p.add_argument("--has-header", action=bool_action, dest="has_header")

    p = sub.add_parser("pca", help="fit PCA on a feature CSV")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--threshold", type=float)

    for name in ("gram", "export-gram"):
        p = sub.add_parser(
            name,
            help="compute a Gram matrix" if name == "gram"
            else "export the precomputed-kernel text format",
        )
        p.add_argument("input", nargs="?")
        p.add_argument("--out")
        p.add_argument("--kernel")
        p.add_argument("--sigma", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--has-header", action=bool_action,
                       dest="has_header")

    p = sub.add_parser("train", help="train a csvc or ocsvm model")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--model", choices=("csvc", "ocsvm"))
    p.add_argument("--kernel")
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--positive-class", type=int, dest="positive_class")
    p.add_argument("--has-header", action=bool_action, dest="has_header")

    p = sub.add_parser("detect", help="one-class novelty evaluation")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--method", choices=("iforest", "gmm", "ocsvm"))
    p.add_argument("--positive-class", type=int, dest="positive_class")
    p.add_argument("--threshold", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--trees", type=int)
    p.add_argument("--psi", type=int)
    p.add_argument("--gmm-k", type=int, dest="gmm_k")
    p.add_argument("--nu", type=float)
    p.add_argument("--kernel")
    p.add_argument("--sigma", type=float)
    p.add_argument("--feature", choices=("signal", "gist", "gist-raw"))
    p.add_argument("--pca", type=float)
    p.add_argument("--has-header", action=bool_action, dest="has_header")

    p = sub.add_parser("eval", help="cross-validated kernel comparison")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--model", choices=("csvc", "ocsvm", "iforest", "gmm"))
    p.add_argument("--kernel")
    p.add_argument("--folds", type=int)
    p.add_argument("--inner-folds", type=int, dest="inner_folds")
    p.add_argument("--seed-base", type=int, dest="seed_base")
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--feature", choices=("signal", "gist", "gist-raw"))
    p.add_argument("--pca", type=float)
    p.add_argument("--prob-mode", choices=("normalize", "kde_smoothed"),
                   dest="prob_mode")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--positive-class", type=int, dest="positive_class")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--has-header", action=bool_action, dest="has_header")

    for name, sp in sub.choices.items():
        sp.add_argument("--config", help="key=value config file")
    return parser


def main(argv=None) -> int:
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        config = (
            _parse_config_file(args.config)
            if getattr(args, "config", None)
            else {}
        )
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"fusegram: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"fusegram: data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"fusegram: numeric error: {exc}", file=sys.stderr)
        return 3
    except FusegramError as exc:
        print(f"fusegram: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fusegram: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
