"""Cumulative distribution transforms of sliced measures.

The reference measure is the uniform distribution on ``[0, 1]``, discretized
by midpoint levels ``(k + 0.5) / M``; every mean, standard deviation and
norm uses the matching uniform quadrature weights ``1 / M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearSupport, DegenerateProjection, DimensionMismatch, OutOfRange
from .kernels import get_kernel
from .measures import (
    MERGE_TOL,
    TIE_TOL,
    DiscreteMeasure1D,
    DiscreteMeasure2D,
    Direction,
    is_non_collinear,
    quantiles,
)
from .radon import AngleGrid, slice_measure

EPS_STD = 1e-8
COLLINEAR_TOL = 1e-9
NORMS = ("chebyshev", "euclidean")


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuantileGrid:
    count: int = 64

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise OutOfRange(f"quantile count must be a positive integer, got {self.count!r}")

    @property
    def levels(self) -> np.ndarray:
        return (np.arange(self.count) + 0.5) / self.count


@dataclass(frozen=True, eq=False)
class CdtCurve:
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values).reshape(-1)
        if (np.diff(v) < 0).any():
            raise OutOfRange("CDT curves are nondecreasing")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class RcdtField:
    """CDT curves of all projections, one row per direction.

    Rows follow ``angles``: the grid angles and, when ``antipodes`` is set,
    the same angles shifted by pi.
    """

    values: np.ndarray
    angle_count: int
    antipodes: bool = True
    angles: np.ndarray = field(default=None)

    def __post_init__(self):
        v = _readonly(self.values)
        rows = self.angle_count * (2 if self.antipodes else 1)
        if v.ndim != 2 or v.shape[0] != rows:
            raise DimensionMismatch(f"expected {rows} curves, got array of shape {v.shape}")
        object.__setattr__(self, "values", v)
        if self.angles is None:
            object.__setattr__(
                self, "angles", _readonly(AngleGrid(self.angle_count).all_angles(self.antipodes))
            )

    @property
    def shape(self):
        return self.values.shape

    def curve(self, i) -> CdtCurve:
        return CdtCurve(self.values[i])


@dataclass(frozen=True, eq=False)
class NrcdtField(RcdtField):
    """Row-wise standardized :class:`RcdtField`; keeps the removed means and stds."""

    means: np.ndarray = field(default=None)
    stds: np.ndarray = field(default=None)


@dataclass(frozen=True, eq=False)
class MnrcdtCurve:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values).reshape(-1))

    def __len__(self):
        return len(self.values)


def _values(c):
    return np.asarray(getattr(c, "values", c), dtype=np.float64)


def cdt(m: DiscreteMeasure1D, g: QuantileGrid) -> CdtCurve:
    """Quantile function of ``m`` sampled at the grid levels."""
    return CdtCurve(quantiles(m, g.levels))


def wasserstein2(a, b) -> float:
    """Wasserstein-2 distance of two measures given by their CDT curves."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"curve shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def rcdt(
    m: DiscreteMeasure2D,
    ag: AngleGrid,
    g: QuantileGrid,
    antipodes: bool = True,
    backend: str | None = None,
) -> RcdtField:
    """CDT of every projection of ``m`` on the angle grid (and its antipodes)."""
    theta = ag.angles
    kernel = get_kernel(backend)
    vals = kernel(
        m.points, m.weights, np.cos(theta), np.sin(theta), g.levels, antipodes, MERGE_TOL, TIE_TOL
    )
    return RcdtField(vals, ag.count, antipodes)


def sliced_wasserstein2(a: RcdtField, b: RcdtField) -> float:
    """Root mean square over directions of the per-direction Wasserstein-2 distances."""
    if a.shape != b.shape or a.antipodes != b.antipodes:
        raise DimensionMismatch(f"field shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a.values - b.values) ** 2)))


def curve_mean(values) -> np.ndarray:
    return np.mean(values, axis=-1)


def curve_std(values) -> np.ndarray:
    v = np.asarray(values)
    return np.sqrt(np.mean((v - curve_mean(v)[..., None]) ** 2, axis=-1))


def normalize(f: RcdtField, eps_std: float = EPS_STD) -> NrcdtField:
    """Standardize every curve to zero mean and unit standard deviation.

    Raises
    ------
    DegenerateProjection
        If some curve has standard deviation below ``eps_std``, i.e. the
        projection is numerically a single atom.
    """
    mu = curve_mean(f.values)
    sd = curve_std(f.values)
    bad = np.flatnonzero(sd < eps_std)
    if len(bad):
        raise DegenerateProjection(f.angles[bad[0]], sd[bad[0]])
    vals = (f.values - mu[:, None]) / sd[:, None]
    return NrcdtField(
        vals, f.angle_count, f.antipodes, f.angles, means=_readonly(mu), stds=_readonly(sd)
    )


def nrcdt_curve(m: DiscreteMeasure2D, d: Direction, g: QuantileGrid, eps_std: float = EPS_STD):
    """Normalized CDT curve of ``m`` along an arbitrary direction ``d``."""
    v = cdt(slice_measure(m, d), g).values
    sd = float(curve_std(v))
    if sd < eps_std:
        raise DegenerateProjection(d.theta, sd)
    return (v - curve_mean(v)) / sd


def mnrcdt(
    m: DiscreteMeasure2D,
    ag: AngleGrid,
    g: QuantileGrid,
    antipodes: bool = True,
    eps_std: float = EPS_STD,
    collinear_tol: float = COLLINEAR_TOL,
    backend: str | None = None,
) -> MnrcdtCurve:
    """Level-wise maximum of the normalized R-CDT over all grid directions.

    Parameters
    ----------
    m : DiscreteMeasure2D
        Must not be supported on a line.
    ag, g : AngleGrid, QuantileGrid
        Direction and quantile discretizations.
    antipodes : bool
        Include the opposite directions ``theta + pi`` in the maximum. The
        transform is defined as a supremum over the full circle; disabling
        this only serves comparisons.
    """
    if not is_non_collinear(m, collinear_tol):
        raise CollinearSupport("measure support lies on a line")
    return max_normalized(rcdt(m, ag, g, antipodes, backend), eps_std)


def max_normalized(f: RcdtField, eps_std: float = EPS_STD) -> MnrcdtCurve:
    return MnrcdtCurve(normalize(f, eps_std).values.max(axis=0))


def support_bound(m: DiscreteMeasure2D, f: RcdtField) -> float:
    """``diam(m) / c`` with ``c`` the smallest curve std of the field."""
    return m.diameter() / float(curve_std(f.values).min())


def curve_distance(a, b, norm: str = "chebyshev") -> float:
    """Sup-norm or quadrature L2 norm of ``a - b``."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"curve shapes differ: {a.shape} vs {b.shape}")
    if norm in ("chebyshev", "inf"):
        return float(np.max(np.abs(a - b))) if a.size else 0.0
    if norm in ("euclidean", "l2"):
        return float(np.sqrt(np.mean((a - b) ** 2))) if a.size else 0.0
    raise OutOfRange(f"unknown norm {norm!r}")

