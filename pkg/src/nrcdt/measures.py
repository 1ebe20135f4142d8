"""Discrete probability measures on the line and on the plane.

Measures are immutable: the arrays held by :class:`DiscreteMeasure1D` and
:class:`DiscreteMeasure2D` are flagged read-only on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFinite, OutOfRange, ZeroMass

#: Projected atoms closer than this are merged into one atom.
MERGE_TOL = 1e-12
#: Cumulative weights exceeding a level by at most this much count as a tie.
TIE_TOL = 1e-12
#: Admissible deviation of the total mass from 1.
MASS_TOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Direction:
    """Unit vector ``(cos theta, sin theta)``."""

    theta: float
    ux: float
    uy: float

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        theta = float(theta)
        return cls(theta, math.cos(theta), math.sin(theta))

    @classmethod
    def from_vector(cls, vx: float, vy: float) -> "Direction":
        norm = math.hypot(vx, vy)
        if norm == 0.0:
            raise OutOfRange("zero vector has no direction")
        return cls(math.atan2(vy, vx), vx / norm, vy / norm)

    def __post_init__(self):
        if abs(self.ux - math.cos(self.theta)) > 1e-12 or abs(self.uy - math.sin(self.theta)) > 1e-12:
            raise OutOfRange(f"({self.ux}, {self.uy}) is not the unit vector of angle {self.theta}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.ux, self.uy])

    def antipode(self) -> "Direction":
        return Direction(self.theta + math.pi, -self.ux, -self.uy)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure2D:
    """Weighted point set in the plane with total mass one.

    Parameters
    ----------
    points : array-like, shape (n, 2)
    weights : array-like, shape (n,)
        Nonnegative, summing to one within ``MASS_TOL``.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points).reshape(-1, 2) if np.size(self.points) else np.zeros((0, 2))
        w = _frozen(self.weights).reshape(-1)
        if len(pts) != len(w):
            raise DimensionMismatch(f"{len(pts)} points but {len(w)} weights")
        if not (np.isfinite(pts).all() and np.isfinite(w).all()):
            raise NonFinite("points and weights must be finite")
        if (w < 0).any():
            raise OutOfRange("weights must be nonnegative")
        if not (w > 0).any():
            raise ZeroMass("measure has no positive weight")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise OutOfRange(f"weights sum to {w.sum()!r}, not 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def support(self) -> np.ndarray:
        """Points carrying positive weight."""
        return self.points[self.weights > 0]

    def diameter(self) -> float:
        h = convex_hull(self.support)
        if len(h) < 2:
            return 0.0
        d = h[:, None, :] - h[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())


@dataclass(frozen=True, eq=False)
class DiscreteMeasure1D:
    """Canonical atomic probability measure on the real line.

    Positions are strictly increasing and all weights are positive. Build
    instances with :func:`make_measure_1d`, which sorts and merges atoms.
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = _frozen(self.positions).reshape(-1)
        w = _frozen(self.weights).reshape(-1)
        if len(x) != len(w):
            raise DimensionMismatch(f"{len(x)} positions but {len(w)} weights")
        if len(x) == 0:
            raise ZeroMass("empty measure")
        if not (np.isfinite(x).all() and np.isfinite(w).all()):
            raise NonFinite("positions and weights must be finite")
        if (np.diff(x) <= 0).any():
            raise OutOfRange("positions must be strictly increasing")
        if (w <= 0).any():
            raise OutOfRange("weights must be strictly positive")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise OutOfRange(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_cum", _frozen(np.cumsum(w)))

    def __len__(self):
        return len(self.positions)

    def mean(self) -> float:
        return float(self.positions @ self.weights)

    def allclose(self, other: "DiscreteMeasure1D", atol: float = 1e-10) -> bool:
        return (
            len(self) == len(other)
            and np.allclose(self.positions, other.positions, rtol=0, atol=atol)
            and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
        )


def convex_hull(points) -> np.ndarray:
    """Vertices of the convex hull (Andrew's monotone chain)."""
    pts = np.unique(np.asarray(points, dtype=np.float64).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                (ax, ay), (bx, by) = out[-2], out[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) > 0:
                    break
                out.pop()
            out.append(p)
        return out[:-1]

    pl = pts.tolist()
    return np.array(half(pl) + half(pl[::-1]))


def merge_sorted_atoms(x, w, tol=MERGE_TOL):
    """Merge runs of sorted positions whose consecutive gaps are ``<= tol``.

    Each run is represented by its smallest position and the summed weight.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if len(x) == 0:
        return x, w
    start = np.empty(len(x), dtype=bool)
    start[0] = True
    start[1:] = np.diff(x) > tol
    idx = np.flatnonzero(start)
    return x[idx], np.add.reduceat(w, idx)


def make_measure_1d(positions, weights, tol=MERGE_TOL) -> DiscreteMeasure1D:
    """Sort atoms, drop zero weights, merge coincident positions, renormalize."""
    x = np.asarray(positions, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(x) != len(w):
        raise DimensionMismatch(f"{len(x)} positions but {len(w)} weights")
    if not (np.isfinite(x).all() and np.isfinite(w).all()):
        raise NonFinite("positions and weights must be finite")
    if (w < 0).any():
        raise OutOfRange("weights must be nonnegative")
    keep = w > 0
    if not keep.any():
        raise ZeroMass("measure has no positive weight")
    x, w = x[keep], w[keep]
    order = np.argsort(x, kind="stable")
    x, w = merge_sorted_atoms(x[order], w[order], tol)
    return DiscreteMeasure1D(x, w / w.sum())


def make_measure_2d(points: Sequence, raw_weights: Sequence) -> DiscreteMeasure2D:
    """Build a probability measure from points and unnormalized weights.

    Raises
    ------
    DimensionMismatch
        If the number of points and weights differ.
    NonFinite
        On NaN or infinite input.
    ZeroMass
        If every weight is zero.
    """
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(raw_weights, dtype=np.float64).reshape(-1)
    if pts.size == 0:
        pts = pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DimensionMismatch(f"points must have shape (n, 2), got {pts.shape}")
    if len(pts) != len(w):
        raise DimensionMismatch(f"{len(pts)} points but {len(w)} weights")
    if not (np.isfinite(pts).all() and np.isfinite(w).all()):
        raise NonFinite("points and weights must be finite")
    if (w < 0).any():
        raise OutOfRange("raw weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ZeroMass("all raw weights are zero")
    return DiscreteMeasure2D(pts, w / total)


def measure_from_image(image, name="image") -> DiscreteMeasure2D:
    """Convert a grayscale raster to a measure, one atom per nonzero pixel.

    Pixel ``(i, j)`` of an ``H x W`` image sits at
    ``((j + 0.5)/W - 0.5, 0.5 - (i + 0.5)/H)``, so the frame is the centered
    unit square with the first row at the top.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionMismatch(f"{name}: expected a 2-D raster, got shape {img.shape}")
    if not np.isfinite(img).all():
        raise NonFinite(f"{name}: raster contains NaN or infinity")
    if (img < 0).any():
        raise OutOfRange(f"{name}: negative intensities")
    if not (img > 0).any():
        raise ZeroMass(f"{name}: image has zero total intensity")
    h, w = img.shape
    i, j = np.nonzero(img)
    pts = np.column_stack([(j + 0.5) / w - 0.5, 0.5 - (i + 0.5) / h])
    return make_measure_2d(pts, img[i, j])


def rasterize(m: DiscreteMeasure2D, shape=(32, 32), extent=1.0) -> np.ndarray:
    """Nearest-pixel histogram of ``m`` on ``[-extent/2, extent/2]^2``.

    Inverse of :func:`measure_from_image` when ``extent == 1`` and the atoms
    sit on pixel centers. Atoms outside the frame are dropped. The result is
    scaled to a maximum of one.
    """
    h, w = shape
    x, y = m.points[:, 0] / extent, m.points[:, 1] / extent
    j = np.floor((x + 0.5) * w).astype(np.int64)
    i = np.floor((0.5 - y) * h).astype(np.int64)
    inside = (i >= 0) & (i < h) & (j >= 0) & (j < w)
    img = np.zeros(shape)
    np.add.at(img, (i[inside], j[inside]), m.weights[inside])
    peak = img.max()
    return img / peak if peak > 0 else img


def cdf(m: DiscreteMeasure1D, t: float) -> float:
    """Mass of ``(-inf, t]``."""
    k = np.searchsorted(m.positions, t, side="right")
    return 0.0 if k == 0 else float(min(m._cum[k - 1], 1.0))


def _first_exceeding(cum, p):
    # smallest index with cum > p; cumulative values within TIE_TOL above p
    # are float noise around an exact tie and do not exceed it
    k = np.searchsorted(cum, p + TIE_TOL, side="right")
    return np.minimum(k, len(cum) - 1)


def quantile(m: DiscreteMeasure1D, p: float) -> float:
    """Generalized inverse ``inf {s : F(s) > p}`` for ``0 <= p < 1``."""
    if not (0.0 <= p < 1.0):
        raise OutOfRange(f"quantile level {p!r} outside [0, 1)")
    return float(m.positions[_first_exceeding(m._cum, p)])


def quantiles(m: DiscreteMeasure1D, levels) -> np.ndarray:
    """Vectorized :func:`quantile` over an array of levels."""
    p = np.asarray(levels, dtype=np.float64)
    if ((p < 0) | (p >= 1)).any():
        raise OutOfRange("quantile levels must lie in [0, 1)")
    return m.positions[_first_exceeding(m._cum, p)]


def mean_vector(m: DiscreteMeasure2D) -> tuple[float, float]:
    mx, my = m.weights @ m.points
    return float(mx), float(my)


def second_moment_singular_values(m: DiscreteMeasure2D) -> np.ndarray:
    """Singular values (descending) of the weight-centered second-moment matrix."""
    c = m.points - np.asarray(mean_vector(m))
    cov = (c * m.weights[:, None]).T @ c
    return np.linalg.svd(cov, compute_uv=False)


def is_non_collinear(m: DiscreteMeasure2D, tol: float = 1e-9) -> bool:
    """Whether the support spans the plane.

    The smaller singular value of the centered second-moment matrix must
    exceed ``tol`` times the larger one; the test is therefore invariant
    under rescaling of the measure.
    """
    if tol <= 0:
        raise OutOfRange("tol must be positive")
    s = second_moment_singular_values(m)
    return bool(s[0] > 0 and s[1] > tol * s[0])
