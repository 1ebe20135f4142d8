"""Feature extraction, nearest-neighbour and linear SVM classification, and
the cross-validation protocol used in the experiments.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cdt import EPS_STD, QuantileGrid, curve_distance, mnrcdt, rcdt
from .errors import (
    DimensionMismatch,
    EmptyReferences,
    InvalidK,
    OutOfRange,
    SingleClass,
    TooFewItems,
)
from .kernels import get_kernel
from .measures import DiscreteMeasure2D, measure_from_image, rasterize
from .radon import AngleGrid

REPRESENTATIONS = ("euclidean_pixels", "rcdt_stack", "mnrcdt")
_ALIASES = {"euclidean": "euclidean_pixels", "rcdt": "rcdt_stack", "pixels": "euclidean_pixels"}


def canonical_representation(rep: str) -> str:
    rep = _ALIASES.get(rep, rep)
    if rep not in REPRESENTATIONS:
        raise OutOfRange(f"unknown representation {rep!r}")
    return rep


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    representation: str

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.isfinite(v).all():
            raise OutOfRange("feature vector contains NaN or infinity")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class FeatureConfig:
    """Discretization shared by every item of an experiment."""

    angles: int = 16
    quantiles: int = 64
    antipodes: bool = True
    eps_std: float = EPS_STD
    raster_shape: tuple = (32, 32)
    raster_extent: float = 1.5

    @property
    def angle_grid(self):
        return AngleGrid(self.angles)

    @property
    def quantile_grid(self):
        return QuantileGrid(self.quantiles)


def featurize(item, rep: str, ag: AngleGrid, g: QuantileGrid, *, antipodes=True,
              eps_std=EPS_STD, raster_shape=(32, 32), raster_extent=1.5) -> FeatureVector:
    """Feature vector of a measure or a grayscale raster.

    ``euclidean_pixels`` flattens a raster (scaled to unit maximum); measures
    are first rasterized on ``raster_shape`` pixels covering
    ``[-raster_extent/2, raster_extent/2]^2``. ``rcdt_stack`` concatenates
    all CDT curves and ``mnrcdt`` is the max-normalized curve.
    """
    rep = canonical_representation(rep)
    if rep == "euclidean_pixels":
        if isinstance(item, DiscreteMeasure2D):
            img = rasterize(item, raster_shape, raster_extent)
        else:
            img = np.asarray(item, dtype=np.float64)
            peak = img.max()
            img = img / peak if peak > 0 else img
        return FeatureVector(img.ravel(), rep)
    m = item if isinstance(item, DiscreteMeasure2D) else measure_from_image(item)
    if rep == "rcdt_stack":
        return FeatureVector(rcdt(m, ag, g, antipodes).values.ravel(), rep)
    return FeatureVector(mnrcdt(m, ag, g, antipodes, eps_std).values, rep)


def thread_count() -> int:
    """Worker count from ``NRCDT_THREADS`` (0 or unset: automatic)."""
    try:
        n = int(os.environ.get("NRCDT_THREADS", "0") or 0)
    except ValueError:
        n = 0
    return n if n > 0 else min(8, os.cpu_count() or 1)


def featurize_many(items, rep: str, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Stack the features of many measures or rasters into an ``(n, d)`` array."""
    rep = canonical_representation(rep)
    ag, g = cfg.angle_grid, cfg.quantile_grid

    def one(it):
        return featurize(it, rep, ag, g, antipodes=cfg.antipodes, eps_std=cfg.eps_std,
                         raster_shape=cfg.raster_shape, raster_extent=cfg.raster_extent).values

    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 4:
        rows = [one(it) for it in items]
    else:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, items))
    return np.vstack(rows) if rows else np.zeros((0, 0))


def dataset_features(ds, rep: str, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Features of a :class:`~nrcdt.datasets.LabeledDataset`, preferring stored rasters for pixels."""
    rep = canonical_representation(rep)
    if rep == "euclidean_pixels":
        items = [it.raster if it.raster is not None else it.measure for it in ds.items]
    else:
        items = [it.measure for it in ds.items]
    return featurize_many(items, rep, cfg)


def _as_array(v):
    return np.asarray(getattr(v, "values", v), dtype=np.float64)


# -- nearest neighbour ------------------------------------------------------


def nn_classify(references, query, norm: str = "chebyshev"):
    """Label of the reference nearest to ``query``; ties go to the lowest index."""
    references = list(references)
    if not references:
        raise EmptyReferences("no reference vectors")
    q = _as_array(query)
    best, label = np.inf, None
    for vec, lab in references:
        v = _as_array(vec)
        if v.shape != q.shape:
            raise DimensionMismatch(f"reference length {v.size} != query length {q.size}")
        d = curve_distance(v, q, norm)
        if d < best:
            best, label = d, lab
    return label


def nn_predict(ref_x, ref_y, queries, norm: str = "chebyshev") -> np.ndarray:
    """Vectorized :func:`nn_classify` for arrays of references and queries."""
    ref_x, queries = np.atleast_2d(ref_x), np.atleast_2d(queries)
    if len(ref_x) == 0:
        raise EmptyReferences("no reference vectors")
    if ref_x.shape[1] != queries.shape[1]:
        raise DimensionMismatch(f"reference length {ref_x.shape[1]} != query length {queries.shape[1]}")
    diff = np.abs(queries[:, None, :] - ref_x[None, :, :])
    if norm in ("chebyshev", "inf"):
        dist = diff.max(axis=2)
    elif norm in ("euclidean", "l2"):
        dist = np.sqrt(np.mean(diff**2, axis=2))
    else:
        raise OutOfRange(f"unknown norm {norm!r}")
    return np.asarray(ref_y)[np.argmin(dist, axis=1)]  # argmin picks the first minimum


# -- linear SVM ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearModel:
    """One weight row per one-vs-rest problem; a single row for two classes.

    For two classes the row scores ``classes[1]`` against ``classes[0]``.
    """

    weights: np.ndarray
    bias: np.ndarray
    classes: tuple
    history: np.ndarray = field(default=None, repr=False)

    def decision_function(self, x) -> np.ndarray:
        return np.atleast_2d(x) @ self.weights.T + self.bias

    def predict(self, x) -> np.ndarray:
        s = self.decision_function(x)
        if len(self.classes) == 2:
            return np.where(s[:, 0] > 0, self.classes[1], self.classes[0])
        return np.asarray(self.classes)[np.argmax(s, axis=1)]  # first maximum wins ties


def hinge_objective(w, b, x, y, reg) -> float:
    margins = y * (x @ w + b)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + reg * (w @ w))


def svm_fit(x, y, reg: float = 1e-2, max_iters: int = 10_000, tol: float = 1e-8,
            backend: str | None = None) -> LinearModel:
    """L2-regularized hinge loss by full-batch subgradient descent.

    Minimizes ``mean(max(0, 1 - y (<w, x> + b))) + reg * |w|^2`` with steps
    ``1 / (reg (t + 1))``, returning the best iterate seen. Stops when the
    objective changes by less than ``tol`` or after ``max_iters`` steps.
    More than two classes are handled one-vs-rest.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y)
    if len(x) != len(y):
        raise DimensionMismatch(f"{len(x)} feature rows but {len(y)} labels")
    if reg <= 0:
        raise OutOfRange("reg must be positive")
    classes = tuple(np.unique(y).tolist())
    if len(classes) < 2:
        raise SingleClass(f"need at least two classes, got {classes}")
    problems = [classes[1]] if len(classes) == 2 else list(classes)
    # w stays in the row span of x, so iterate on w = x^T alpha
    gram = x @ x.T
    solve = get_kernel(backend, "svm_subgradient")
    ws, bs, hs = [], [], []
    for pos in problems:
        alpha, b, h = solve(gram, np.where(y == pos, 1.0, -1.0), reg, int(max_iters), tol)
        ws.append(x.T @ alpha)
        bs.append(b)
        hs.append(h)
    return LinearModel(np.array(ws), np.array(bs), classes, hs[0] if len(hs) == 1 else hs)


def svm_train(data, reg: float = 1e-2, max_iters: int = 10_000, tol: float = 1e-8) -> LinearModel:
    """:func:`svm_fit` on a sequence of ``(feature vector, label)`` pairs."""
    data = list(data)
    if not data:
        raise SingleClass("no training data")
    lengths = {_as_array(v).size for v, _ in data}
    if len(lengths) > 1:
        raise DimensionMismatch(f"feature lengths differ: {sorted(lengths)}")
    return svm_fit(np.vstack([_as_array(v) for v, _ in data]), [lab for _, lab in data], reg, max_iters, tol)


# -- pipelines and cross validation ---------------------------------------------


@dataclass(frozen=True)
class NearestNeighbor:
    norm: str = "chebyshev"

    def fit_predict(self, x_train, y_train, x_test):
        return nn_predict(x_train, y_train, x_test, self.norm)


@dataclass(frozen=True)
class LinearSvm:
    reg: float = 1e-2
    max_iters: int = 10_000
    tol: float = 1e-8

    def fit_predict(self, x_train, y_train, x_test):
        if len(np.unique(y_train)) < 2:
            return np.full(len(x_test), y_train[0])
        return svm_fit(x_train, y_train, self.reg, self.max_iters, self.tol).predict(x_test)


@dataclass(frozen=True)
class CvReport:
    fold_accuracies: tuple
    mean: float
    std: float
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_folds(cls, accs, **meta):
        a = np.asarray(accs, dtype=np.float64)
        return cls(tuple(a.tolist()), float(a.mean()), float(a.std()), meta)

    def to_dict(self) -> dict:
        return {**self.meta, "mean": self.mean, "std": self.std, "folds": list(self.fold_accuracies)}

    @classmethod
    def from_dict(cls, d):
        meta = {k: v for k, v in d.items() if k not in ("mean", "std", "folds")}
        return cls(tuple(d["folds"]), float(d["mean"]), float(d["std"]), meta)


def stratified_folds(labels, k: int, seed: int = 0) -> list[np.ndarray]:
    """Shuffle each class with ``seed`` and deal its members round-robin into ``k`` folds."""
    labels = np.asarray(labels)
    if int(k) != k or k < 2:
        raise InvalidK(f"k must be an integer >= 2, got {k!r}")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            raise TooFewItems(f"class {c} has {len(members)} items, fewer than k={k}")
        members = members[rng.permutation(len(members))]
        for j, idx in enumerate(members):
            folds[(j + offset) % k].append(idx)
        offset += len(members)
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def cross_validate_features(x, y, k: int = 10, pipeline=None, seed: int = 0, inverted: bool = True,
                            **meta) -> CvReport:
    """k-fold cross validation on precomputed features.

    With ``inverted`` set, each fold in turn is the training set and the
    remaining ``k - 1`` folds are the test set; otherwise the usual split.
    """
    pipeline = pipeline or LinearSvm()
    x, y = np.asarray(x), np.asarray(y)
    folds = stratified_folds(y, k, seed)
    accs = []
    for f in folds:
        mask = np.zeros(len(y), dtype=bool)
        mask[f] = True
        train, test = (mask, ~mask) if inverted else (~mask, mask)
        pred = pipeline.fit_predict(x[train], y[train], x[test])
        accs.append(float(np.mean(pred == y[test])))
    return CvReport.from_folds(accs, k=k, seed=seed, inverted=inverted, **meta)


def cross_validate(data, rep: str, k: int = 10, pipeline=None, seed: int = 0,
                   cfg: FeatureConfig = FeatureConfig(), inverted: bool = True) -> CvReport:
    """Featurize a labeled dataset and cross-validate a pipeline on it."""
    rep = canonical_representation(rep)
    x = dataset_features(data, rep, cfg)
    sizes = data.class_sizes()
    return cross_validate_features(
        x, data.labels, k, pipeline, seed, inverted,
        representation=rep, angles=cfg.angles, quantiles=cfg.quantiles,
        class_size=min(sizes),
    )


def template_accuracy(ds, rep: str = "mnrcdt", norm: str = "chebyshev",
                      cfg: FeatureConfig = FeatureConfig()) -> float:
    """Nearest-neighbour accuracy with the class templates as the only references."""
    if not ds.templates:
        raise EmptyReferences("dataset carries no templates")
    ref = featurize_many([t.measure for t in ds.templates], rep, cfg)
    x = dataset_features(ds, rep, cfg)
    pred = nn_predict(ref, [t.label for t in ds.templates], x, norm)
    return float(np.mean(pred == ds.labels))


def iterated_reference_accuracy(ds, rep: str = "mnrcdt", norm: str = "chebyshev",
                                cfg: FeatureConfig = FeatureConfig()) -> CvReport:
    """Round ``r`` uses the ``r``-th member of every class as its reference and
    classifies all other items; one round per member of the smallest class.
    """
    x = dataset_features(ds, rep, cfg)
    y = ds.labels
    members = [np.flatnonzero(y == c) for c in range(ds.class_count)]
    rounds = min(len(m) for m in members)
    accs = []
    for r in range(rounds):
        ref = np.array([m[r] for m in members])
        rest = np.setdiff1d(np.arange(len(y)), ref)
        if len(rest) == 0:
            pred, truth = nn_predict(x[ref], y[ref], x[ref], norm), y[ref]
        else:
            pred, truth = nn_predict(x[ref], y[ref], x[rest], norm), y[rest]
        accs.append(float(np.mean(pred == truth)))
    return CvReport.from_folds(accs, representation=canonical_representation(rep), norm=norm, rounds=rounds)
