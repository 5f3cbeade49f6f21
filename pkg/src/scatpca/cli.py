"""Command-line interface: ``scatpca <subcommand> [options]``.

Configuration
-------------
Every subcommand reads the same flat set of settings (see :class:`RunConfig`).
Values are resolved with the following precedence, lowest first:

1. built-in defaults,
2. the ``key = value`` file given with ``--config``,
3. the ``SCATPCA_DATA_ROOT`` environment variable (``data_root`` only),
4. command-line flags (``--J 2``, ``--train-sizes 300,1000`` ...).

Results are written as CSV files in ``out_dir`` and summarised on stdout.
The exit status is 0 only when every requested file was written.
"""

import argparse
import csv
import io
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, fields

import numpy as np

from .classifier import ClassifierConfig, cross_validate, evaluate
from .datasets import (load_idx, load_mnist, load_texture_dir, load_usps, stratified_split,
                       subsample_train)
from .exceptions import ScatPCAError
from .filterbank import GaborParams
from .models import fit_class_models, in_out_curves, load_models, save_models
from .pipeline import compute_features, run_protocol
from .scattering import ScatteringConfig, load_features, save_features

log = logging.getLogger("scatpca")

ENV_DATA_ROOT = "SCATPCA_DATA_ROOT"


@dataclass
class RunConfig:
    dataset: str = "mnist"
    data_root: str = ""
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    patch_size: int = 200
    per_class: int = 0
    test_fraction: float = 0.5
    train_size: int = 0
    train_sizes: tuple = (300, 1000, 2000, 5000)
    J: int = 3
    m0: int = 2
    orientations: int = 6
    xi: float = 3 * math.pi / 4
    sigma: float = 1.0
    subsample_intermediate: bool = False
    K: int = 140
    beta: float = 0.0
    J_grid: tuple = (1, 2, 3, 4)
    beta_rel_min: float = 1e-4
    beta_rel_max: float = 1.0
    beta_rel_count: int = 17
    folds: int = 0
    reproduce_folds: int = 5
    val_fraction: float = 0.2
    k_max: int = 100
    seed: int = 0
    features: str = ""
    models: str = ""
    out_dir: str = "."
    workers: int = 1
    batch_size: int = 256

    def scattering(self, J=None):
        J = self.J if J is None else J
        params = GaborParams(xi=self.xi, sigma=self.sigma, num_orientations=self.orientations,
                             max_scale=J)
        return ScatteringConfig(J=J, m0=self.m0, params=params,
                                subsample_intermediate=self.subsample_intermediate)

    def beta_rel_grid(self):
        return tuple(np.logspace(np.log10(self.beta_rel_min), np.log10(self.beta_rel_max),
                                 self.beta_rel_count))


HELP = {
    "dataset": "input kind: mnist, usps, idx or texture",
    "data_root": "directory holding the MNIST/USPS files or the texture class folders",
    "train_images": "IDX image file of the training split (dataset=idx)",
    "train_labels": "IDX label file of the training split (dataset=idx)",
    "test_images": "IDX image file of the test split (dataset=idx, optional)",
    "test_labels": "IDX label file of the test split (dataset=idx, optional)",
    "patch_size": "texture patch side in pixels",
    "per_class": "textures: keep the first N files per class (0 = all)",
    "test_fraction": "textures: held-out fraction of every class used as test split",
    "train_size": "seeded class-balanced training subset for cv/train/scatter (0 = all)",
    "train_sizes": "training sizes swept by reproduce-mnist (comma separated)",
    "J": "scattering scale: averaging window 2^J (train, eval, scatter)",
    "m0": "scattering depth (maximum path length), 0..3",
    "orientations": "number of wavelet orientations",
    "xi": "mother wavelet centre frequency",
    "sigma": "mother wavelet Gaussian width",
    "subsample_intermediate": "subsample intermediate layers (faster, slight aliasing)",
    "K": "maximum affine model dimension",
    "beta": "absolute dimension penalty for train/eval",
    "J_grid": "scales tried by cross-validation (comma separated)",
    "beta_rel_min": "smallest relative penalty of the cross-validation grid",
    "beta_rel_max": "largest relative penalty of the cross-validation grid",
    "beta_rel_count": "number of log-spaced relative penalties",
    "folds": "cv: number of stratified folds (0 = one holdout of val_fraction)",
    "reproduce_folds": "folds used by the reproduce-* protocols (0 = one holdout)",
    "val_fraction": "held-out fraction for the single holdout",
    "k_max": "largest dimension reported by curves",
    "seed": "seed for every subset and split",
    "features": "feature container to read instead of computing features",
    "models": "model container written by train",
    "out_dir": "output directory",
    "workers": "FFT worker threads",
    "batch_size": "images per scattering batch",
}


class CLIError(Exception):
    """User-facing failure that ends the command with exit status 1."""


def _field_types():
    return {f.name: type(f.default) for f in fields(RunConfig)}


def _parse_value(key, text):
    kind = _field_types()[key]
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(text)
            return low in ("1", "true", "yes", "on")
        if kind is tuple:
            return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
        return kind(text)
    except ValueError:
        raise CLIError(f"invalid value for {key}: {text!r}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    if not os.path.isfile(path):
        raise CLIError(f"config file not found: {path}")
    known = _field_types()
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CLIError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise CLIError(f"{path}:{lineno}: unknown setting {key!r}")
            values[key] = _parse_value(key, value)
    return values


def resolve_config(args, environ=None):
    """Merge defaults, config file, environment and flags into a RunConfig."""
    environ = os.environ if environ is None else environ
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    if environ.get(ENV_DATA_ROOT):
        values["data_root"] = environ[ENV_DATA_ROOT]
    for key in _field_types():
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _parse_value(key, flag)
    cfg = RunConfig(**values)
    cfg.explicit = frozenset(values)
    return cfg


def _require(path, what):
    if not path:
        raise CLIError(f"no {what} given")
    if not os.path.exists(path):
        raise CLIError(f"{what} not found: {path}")
    return path


def load_splits(cfg):
    """Training and test :class:`LabeledDataset` (test may be None)."""
    kind = cfg.dataset
    if kind == "mnist":
        root = _require(cfg.data_root, "MNIST directory (data_root)")
        try:
            return load_mnist(root)
        except FileNotFoundError as exc:
            raise CLIError(str(exc)) from None
    if kind == "usps":
        root = _require(cfg.data_root, "USPS directory (data_root)")
        found = {}
        for split in ("train", "test"):
            for name in (f"zip.{split}", f"zip.{split}.gz"):
                if os.path.exists(os.path.join(root, name)):
                    found[split] = os.path.join(root, name)
                    break
            else:
                raise CLIError(f"USPS file not found: {os.path.join(root, 'zip.' + split)}")
        return load_usps(found["train"], "usps-train"), load_usps(found["test"], "usps-test")
    if kind == "idx":
        train = load_idx(_require(cfg.train_images, "training image file"),
                         _require(cfg.train_labels, "training label file"), name="train")
        test = None
        if cfg.test_images or cfg.test_labels:
            test = load_idx(_require(cfg.test_images, "test image file"),
                            _require(cfg.test_labels, "test label file"), name="test")
        return train, test
    if kind == "texture":
        root = _require(cfg.data_root, "texture directory (data_root)")
        data = load_texture_dir(root, cfg.patch_size, per_class_counts=cfg.per_class or None)
        fit, held = stratified_split(data.labels, cfg.test_fraction, seed=cfg.seed,
                                     class_count=data.class_count)
        return data.subset(fit, name="texture-train"), data.subset(held, name="texture-test")
    raise CLIError(f"unknown dataset kind {kind!r} (mnist, usps, idx, texture)")


def _training_set(cfg):
    train, test = load_splits(cfg)
    if cfg.train_size:
        train = subsample_train(train, cfg.train_size, seed=cfg.seed)
    return train, test


def _out(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def write_csv(path, header, rows):
    """Write a CSV atomically (temporary file renamed into place)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x):
    return repr(float(x))


def _features_for(cfg, images, J=None):
    return compute_features(images, J if J is not None else cfg.J, m0=cfg.m0,
                            params=cfg.scattering(J).params, batch_size=cfg.batch_size,
                            workers=cfg.workers,
                            subsample_intermediate=cfg.subsample_intermediate)


def _load_feature_file(cfg):
    features, labels, config, _ = load_features(_require(cfg.features, "feature file"))
    if labels is None:
        raise CLIError(f"feature file has no labels: {cfg.features}")
    return features.astype(np.float64), labels, config


def cmd_scatter(cfg):
    train, test = _training_set(cfg)
    config = cfg.scattering()
    written = []
    for split, data in (("train", train), ("test", test)):
        if data is None:
            continue
        feats = _features_for(cfg, data.images)
        path = _out(cfg, f"features_{split}.scpa")
        save_features(path, feats, config, data.images.shape[1:], labels=data.labels,
                      header={"dataset": data.name, "seed": cfg.seed})
        written.append(path)
        print(f"{split}: {len(data)} images x {feats.shape[1]} coefficients -> {path}")
    return written


def cmd_train(cfg):
    if cfg.features:
        feats, labels, config = _load_feature_file(cfg)
        shape = None
        class_count = int(labels.max()) + 1
    else:
        train, _ = _training_set(cfg)
        config = cfg.scattering()
        feats, labels = _features_for(cfg, train.images), train.labels
        shape = list(train.images.shape[1:])
        class_count = train.class_count
    models = fit_class_models(feats, labels, cfg.K, class_count)
    path = cfg.models or _out(cfg, "models.scpa")
    save_models(path, models, {"scattering": config.to_dict(), "source_shape": shape,
                               "beta": cfg.beta, "seed": cfg.seed})
    dims = [m.n_components for m in models]
    print(f"{len(models)} class models (dimensions {min(dims)}..{max(dims)}) -> {path}")
    return [path]


def cmd_cv(cfg):
    train, _ = _training_set(cfg)
    features = {J: _features_for(cfg, train.images, J) for J in cfg.J_grid}
    cv = cross_validate(features, train.labels, K=cfg.K, beta_rel_grid=cfg.beta_rel_grid(),
                        val_fraction=cfg.val_fraction, folds=cfg.folds or None,
                        seed=cfg.seed, class_count=train.class_count)
    path = _out(cfg, "cv.csv")
    write_csv(path, ["J", "beta_rel", "beta", "error"],
              [[r["J"], _fmt(r["beta_rel"]), _fmt(r["beta"]), _fmt(r["error"])]
               for r in cv.table])
    print(f"best J={cv.best_J} beta_rel={cv.best_beta_rel:.4g} beta={cv.best_beta:.4g} "
          f"validation error {100 * cv.best_error:.2f}% -> {path}")
    return [path]


def _models_and_config(cfg):
    models, header = load_models(_require(cfg.models, "model file"))
    config = ScatteringConfig.from_dict(header["scattering"])
    return models, header, config


def cmd_eval(cfg):
    models, header, config = _models_and_config(cfg)
    if cfg.features:
        feats, labels, fconfig = _load_feature_file(cfg)
        if fconfig != config:
            raise CLIError("feature file and models were computed with different settings")
    else:
        _, test = load_splits(cfg)
        if test is None:
            raise CLIError("dataset has no test split; give test_images/test_labels")
        feats = compute_features(test.images, config.J, m0=config.m0, params=config.params,
                                 batch_size=cfg.batch_size, workers=cfg.workers,
                                 subsample_intermediate=config.subsample_intermediate)
        labels = test.labels
    beta = cfg.beta if "beta" in getattr(cfg, "explicit", ()) else header.get("beta", 0.0)
    result = evaluate(feats, labels, models, ClassifierConfig(beta=beta, K=cfg.K, J=config.J),
                      class_count=max(len(models), int(labels.max()) + 1))
    path = _out(cfg, "confusion.csv")
    C = result.confusion.shape[0]
    write_csv(path, ["true"] + [str(c) for c in range(C)],
              [[i] + result.confusion[i].tolist() for i in range(C)])
    print(f"test error {100 * result.error_rate:.2f}% on {len(labels)} samples, "
          f"mean k {result.mean_k:.1f}, beta {beta:.4g} -> {path}")
    return [path]


def cmd_curves(cfg):
    models, _, config = _models_and_config(cfg)
    if cfg.features:
        feats, labels, _ = _load_feature_file(cfg)
    else:
        train, _ = _training_set(cfg)
        feats = compute_features(train.images, config.J, m0=config.m0, params=config.params,
                                 batch_size=cfg.batch_size, workers=cfg.workers,
                                 subsample_intermediate=config.subsample_intermediate)
        labels = train.labels
    k_max = min(cfg.k_max, max(m.n_components for m in models))
    curves = in_out_curves(models, feats, labels, k_max)
    path = _out(cfg, "curves.csv")
    write_csv(path, ["class", "k", "In", "Out"],
              [[c, k, _fmt(i), _fmt(o)] for c, k, i, o in curves.rows()])
    print(f"In/Out curves for {len(models)} classes, k = 0..{k_max} -> {path}")
    return [path]


def _reproduce(cfg, train, test, sizes, name):
    rows, cache = [], {}
    for size in sizes:
        t0 = time.perf_counter()
        res = run_protocol(train, test, train_size=size, J_grid=cfg.J_grid,
                           beta_rel_grid=cfg.beta_rel_grid(), K=cfg.K,
                           folds=cfg.reproduce_folds or None, val_fraction=cfg.val_fraction,
                           seed=cfg.seed, m0=cfg.m0, workers=cfg.workers, test_features=cache)
        rows.append([res.train_size, res.J, _fmt(res.beta), f"{res.mean_k:.2f}",
                     f"{100 * res.test_error:.2f}"])
        print(f"train_size={res.train_size} J*={res.J} beta*={res.beta:.4g} "
              f"mean k={res.mean_k:.1f} test error={100 * res.test_error:.2f}% "
              f"({time.perf_counter() - t0:.0f}s)")
    path = _out(cfg, f"{name}.csv")
    write_csv(path, ["train_size", "J_star", "beta_star", "mean_k", "test_error_percent"], rows)
    print(f"-> {path}")
    return [path]


def cmd_reproduce_mnist(cfg):
    if any(s <= 0 for s in cfg.train_sizes):
        raise CLIError(f"training sizes must be positive, got {list(cfg.train_sizes)}")
    train, test = load_splits(cfg)
    return _reproduce(cfg, train, test, cfg.train_sizes, "reproduce_mnist")


def cmd_reproduce_usps(cfg):
    cfg.dataset = "usps"
    train, test = load_splits(cfg)
    return _reproduce(cfg, train, test, [cfg.train_size or None], "reproduce_usps")


def cmd_reproduce_curet(cfg):
    cfg.dataset = "texture"
    train, test = load_splits(cfg)
    return _reproduce(cfg, train, test, [cfg.train_size or None], "reproduce_curet")


COMMANDS = {
    "scatter": (cmd_scatter, "compute scattering features of the train/test splits"),
    "train": (cmd_train, "fit one affine model per class and save the model set"),
    "cv": (cmd_cv, "cross-validate the scale J and penalty beta, write cv.csv"),
    "eval": (cmd_eval, "classify the test split with saved models, write confusion.csv"),
    "curves": (cmd_curves, "intra/outer class approximation curves, write curves.csv"),
    "reproduce-mnist": (cmd_reproduce_mnist, "MNIST error versus training size"),
    "reproduce-usps": (cmd_reproduce_usps, "USPS full protocol"),
    "reproduce-curet": (cmd_reproduce_curet, "texture directory protocol (CUReT layout)"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scatpca",
        description="Scattering features and PCA affine-model classification.",
        epilog=(f"Precedence: defaults < --config file < ${ENV_DATA_ROOT} (data_root) < flags."))
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="flat key = value settings file", default=None)
        for f in fields(RunConfig):
            default = f.default
            if isinstance(default, tuple):
                default = ",".join(str(v) for v in default)
            p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, metavar="VALUE",
                           default=None, help=f"{HELP[f.name]} (default: {default!r})")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = resolve_config(args)
        func(cfg)
    except (CLIError, ScatPCAError, FileNotFoundError) as exc:
        print(f"scatpca {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
