"""Command-line interface: ``nrcdt <command> [options]``.

Commands
--------
gen-academic    write a synthetic dataset of affine-transformed templates
transform       export mNR-CDT curves as CSV (``item_id,label,level,value``)
classify-nn     nearest-neighbour accuracy (template or iterated references)
cross-validate  k-fold cross validation of a representation and classifier
distances       pairwise sliced-W2 or mNR-CDT distance matrix as CSV

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then command-line flags. Exit status is 0 on success, 1 on data or
runtime errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cdt import EPS_STD
from .classify import (
    FeatureConfig,
    LinearSvm,
    NearestNeighbor,
    canonical_representation,
    cross_validate,
    dataset_features,
    featurize_many,
    iterated_reference_accuracy,
    template_accuracy,
)
from .datasets import (
    TEMPLATE_KINDS,
    AffineSamplerConfig,
    atomic_write,
    generate_academic,
    load_manifest,
    make_template,
    save_dataset,
)
from .errors import InvalidConfig, MissingFile, NrcdtError

USAGE_ERROR = 2
DATA_ERROR = 1

_NORMS = {"inf": "chebyshev", "l2": "euclidean"}
_REPS = ("euclidean", "rcdt", "mnrcdt")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Experiment settings shared by all commands."""

    angles: int = 16
    quantiles: int = 64
    norm: str = "inf"
    seed: int = 0
    folds: int = 10
    representation: str = "mnrcdt"
    eps_std: float = EPS_STD
    output_path: str | None = None
    antipodes: bool = True

    def __post_init__(self):
        if int(self.angles) != self.angles or self.angles < 1:
            raise InvalidConfig(f"angles must be an integer >= 1, got {self.angles!r}")
        if int(self.quantiles) != self.quantiles or self.quantiles < 2:
            raise InvalidConfig(f"quantiles must be an integer >= 2, got {self.quantiles!r}")
        if int(self.folds) != self.folds or self.folds < 2:
            raise InvalidConfig(f"folds must be an integer >= 2, got {self.folds!r}")
        if self.norm not in _NORMS:
            raise InvalidConfig(f"norm must be one of {sorted(_NORMS)}, got {self.norm!r}")
        if self.representation not in _REPS:
            raise InvalidConfig(f"representation must be one of {_REPS}, got {self.representation!r}")
        if not self.eps_std > 0:
            raise InvalidConfig("eps_std must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed!r}")

    @property
    def features(self) -> FeatureConfig:
        return FeatureConfig(self.angles, self.quantiles, self.antipodes, self.eps_std)


_RUN_FIELDS = {f.name for f in fields(RunConfig)}


def _load_config(path):
    """Parse a JSON config file into ``(run settings, sampler settings, other)``."""
    if path is None:
        return {}, {}, {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    sampler = doc.pop("sampler", {})
    run = {k: doc.pop(k) for k in list(doc) if k in _RUN_FIELDS}
    return run, sampler, doc


def resolve_config(args) -> tuple[RunConfig, dict, dict]:
    """Merge defaults, the config file and explicit flags (flags win)."""
    run, sampler, other = _load_config(getattr(args, "config", None))
    flags = {k: v for k, v in vars(args).items() if v is not None}
    for k in _RUN_FIELDS:
        if k in flags:
            run[k] = flags[k]
    if getattr(args, "no_antipodes", False):
        run["antipodes"] = False
    if "out" in flags:
        run["output_path"] = flags["out"]
    try:
        cfg = RunConfig(**run)
    except TypeError as e:
        raise UsageError(str(e)) from None
    except InvalidConfig as e:
        raise UsageError(str(e)) from None
    return cfg, sampler, other


def _setting(args, other, name, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return other.get(name, default)


def _load_dataset(path):
    try:
        return load_manifest(path)
    except MissingFile as e:
        raise UsageError(f"dataset not found: {e}") from None


def _emit(text, path):
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------


def cmd_gen_academic(args) -> int:
    cfg, sampler, other = resolve_config(args)
    classes = int(_setting(args, other, "classes", 3))
    per_class = int(_setting(args, other, "per_class", 10))
    resolution = int(_setting(args, other, "resolution", 64))
    if not 1 <= classes <= len(TEMPLATE_KINDS):
        raise UsageError(f"--classes must be between 1 and {len(TEMPLATE_KINDS)}")
    if per_class < 1:
        raise UsageError("--per-class must be >= 1")
    if resolution < 4:
        raise UsageError("--resolution must be >= 4")
    if cfg.output_path is None:
        raise UsageError("--out is required")
    try:
        if args.grid_preserving:
            sc = AffineSamplerConfig.grid_preserving(cfg.angles, seed=cfg.seed)
        else:
            sc = AffineSamplerConfig.from_dict({**sampler, "seed": cfg.seed})
    except InvalidConfig as e:
        raise UsageError(str(e)) from None
    templates = [make_template(k, resolution) for k in TEMPLATE_KINDS[:classes]]
    ds = generate_academic(templates, per_class, sc)
    manifest = save_dataset(ds, cfg.output_path)
    for c, n in enumerate(ds.class_sizes()):
        print(f"class {c} ({TEMPLATE_KINDS[c]}): {n} items")
    print(f"wrote {len(ds)} items to {manifest}")
    return 0


def cmd_transform(args) -> int:
    cfg, _, _ = resolve_config(args)
    ds = _load_dataset(args.dataset)
    fc = cfg.features
    levels = fc.quantile_grid.levels
    rows = []
    for i, it in enumerate(ds.items):
        try:
            v = featurize_many([it.measure], "mnrcdt", fc)[0]
        except NrcdtError as e:
            raise DataError(f"item {i}: {type(e).__name__}: {e}") from None
        rows.append((i, it.label, v))
    buf = io.StringIO()
    buf.write("item_id,label,level,value\n")
    for i, lab, v in rows:
        for p, x in zip(levels, v):
            buf.write(f"{i},{lab},{float(p)!r},{float(x)!r}\n")
    _emit(buf.getvalue(), cfg.output_path)
    if cfg.output_path:
        print(f"wrote {len(rows) * len(levels)} rows to {cfg.output_path}")
    return 0


def _report(doc, cfg):
    text = json.dumps(doc, indent=1) + "\n"
    if cfg.output_path:
        atomic_write(cfg.output_path, text)


def cmd_classify_nn(args) -> int:
    cfg, _, _ = resolve_config(args)
    ds = _load_dataset(args.dataset)
    rep = canonical_representation(cfg.representation)
    norm = _NORMS[cfg.norm]
    doc = {
        "command": "classify-nn",
        "mode": args.mode,
        "representation": rep,
        "angles": cfg.angles,
        "quantiles": cfg.quantiles,
        "norm": cfg.norm,
        "antipodes": cfg.antipodes,
        "items": len(ds),
    }
    if args.mode == "templates":
        if not ds.templates:
            raise UsageError("dataset has no templates; use --mode iterate")
        acc = template_accuracy(ds, rep, norm, cfg.features)
        doc["accuracy"] = acc
        print(f"accuracy {acc:.4f}")
    else:
        r = iterated_reference_accuracy(ds, rep, norm, cfg.features)
        doc.update(mean=r.mean, std=r.std, folds=list(r.fold_accuracies))
        print(f"accuracy {r.mean:.4f} +- {r.std:.4f} over {len(r.fold_accuracies)} rounds")
    _report(doc, cfg)
    return 0


def cmd_cross_validate(args) -> int:
    cfg, _, other = resolve_config(args)
    ds = _load_dataset(args.dataset)
    pipe_name = _setting(args, other, "pipeline", "svm")
    reg = float(_setting(args, other, "reg", 1e-2))
    if pipe_name == "svm":
        if not reg > 0:
            raise UsageError("--reg must be positive")
        pipeline = LinearSvm(reg=reg)
    else:
        pipeline = NearestNeighbor(_NORMS[cfg.norm])
    inverted = not args.conventional
    r = cross_validate(ds, cfg.representation, cfg.folds, pipeline, cfg.seed, cfg.features, inverted)
    doc = {
        "command": "cross-validate",
        "representation": canonical_representation(cfg.representation),
        "angles": cfg.angles,
        "quantiles": cfg.quantiles,
        "antipodes": cfg.antipodes,
        "class_size": r.meta["class_size"],
        "pipeline": pipe_name,
        "seed": cfg.seed,
        "k": cfg.folds,
        "inverted": inverted,
        "mean": r.mean,
        "std": r.std,
        "folds": list(r.fold_accuracies),
    }
    print(f"accuracy {r.mean:.4f} +- {r.std:.4f} ({cfg.folds} folds, seed {cfg.seed})")
    _report(doc, cfg)
    return 0


def distance_matrix(x, norm: str) -> np.ndarray:
    """Pairwise sup-norm or quadrature-L2 distances between feature rows."""
    x = np.asarray(x, dtype=np.float64)
    d = np.empty((len(x), len(x)))
    for i in range(len(x)):
        diff = np.abs(x - x[i])
        d[i] = diff.max(axis=1) if norm == "chebyshev" else np.sqrt(np.mean(diff**2, axis=1))
    return d


def cmd_distances(args) -> int:
    cfg, _, _ = resolve_config(args)
    ds = _load_dataset(args.dataset)
    if args.metric == "sw2":
        # sliced W2 is the quadrature L2 norm of the stacked CDT curves
        d = distance_matrix(dataset_features(ds, "rcdt_stack", cfg.features), "euclidean")
    else:
        d = distance_matrix(dataset_features(ds, "mnrcdt", cfg.features), _NORMS[cfg.norm])
    buf = io.StringIO()
    buf.write(",".join(["item_id"] + [str(j) for j in range(len(d))]) + "\n")
    for i, row in enumerate(d):
        buf.write(",".join([str(i)] + [repr(float(v)) for v in row]) + "\n")
    _emit(buf.getvalue(), cfg.output_path)
    if cfg.output_path:
        print(f"wrote {len(d)}x{len(d)} {args.metric} distances to {cfg.output_path}")
    return 0


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s):
    try:
        return int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None


def _common(p, dataset=True):
    if dataset:
        p.add_argument("dataset", help="manifest file or dataset directory")
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--angles", "-L", type=_positive_int, help="number of angles in [0, pi) (default 16)")
    p.add_argument("--quantiles", "-M", type=_positive_int, help="number of quantile levels (default 64)")
    p.add_argument("--eps-std", dest="eps_std", type=float, help="degenerate projection threshold")
    p.add_argument("--no-antipodes", action="store_true", help="use only the angles in [0, pi)")
    p.add_argument("--out", "-o", help="output path (written atomically)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nrcdt", description="Max-normalized Radon CDT features and classifiers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-academic", help="generate a synthetic affine dataset")
    _common(p, dataset=False)
    p.add_argument("--classes", type=_positive_int, help=f"number of templates, at most {len(TEMPLATE_KINDS)}")
    p.add_argument("--per-class", dest="per_class", type=_positive_int, help="items per class (default 10)")
    p.add_argument("--seed", type=_positive_int)
    p.add_argument("--resolution", type=_positive_int, help="template raster size (default 64)")
    p.add_argument("--grid-preserving", action="store_true",
                   help="only translations, isotropic scalings, grid rotations and grid reflections")
    p.set_defaults(func=cmd_gen_academic)

    p = sub.add_parser("transform", help="export mNR-CDT curves as CSV")
    _common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("classify-nn", help="nearest-neighbour classification accuracy")
    _common(p)
    p.add_argument("--mode", choices=("templates", "iterate"), default="templates")
    p.add_argument("--norm", choices=sorted(_NORMS))
    p.add_argument("--representation", "--rep", dest="representation", choices=_REPS)
    p.set_defaults(func=cmd_classify_nn)

    p = sub.add_parser("cross-validate", help="k-fold cross validation")
    _common(p)
    p.add_argument("--representation", "--rep", dest="representation", choices=_REPS)
    p.add_argument("--pipeline", choices=("svm", "nn"))
    p.add_argument("--norm", choices=sorted(_NORMS), help="norm of the nn pipeline")
    p.add_argument("--reg", type=float, help="SVM regularization (default 1e-2)")
    p.add_argument("--folds", "-k", type=_positive_int)
    p.add_argument("--seed", type=_positive_int)
    p.add_argument("--conventional", action="store_true",
                   help="train on k-1 folds and test on one instead of the inverted split")
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("distances", help="pairwise distance matrix as CSV")
    _common(p)
    p.add_argument("--metric", choices=("sw2", "mnrcdt"), default="mnrcdt")
    p.add_argument("--norm", choices=sorted(_NORMS), help="norm for the mnrcdt metric")
    p.set_defaults(func=cmd_distances)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return USAGE_ERROR
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_ERROR
    except (NrcdtError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
