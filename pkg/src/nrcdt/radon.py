"""Slicing pushforward of planar measures and its behaviour under affine maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, SingularMatrix
from .measures import (
    MERGE_TOL,
    DiscreteMeasure1D,
    DiscreteMeasure2D,
    Direction,
    make_measure_1d,
)

DET_TOL = 1e-12


@dataclass(frozen=True)
class AffineMap:
    """The map ``x -> A x + y`` with ``A = [[a11, a12], [a21, a22]]`` invertible."""

    a11: float
    a12: float
    a21: float
    a22: float
    y1: float = 0.0
    y2: float = 0.0

    def __post_init__(self):
        if not np.isfinite([self.a11, self.a12, self.a21, self.a22, self.y1, self.y2]).all():
            raise OutOfRange("affine map entries must be finite")
        if abs(self.det) <= DET_TOL:
            raise SingularMatrix(f"|det A| = {abs(self.det):.3g} is not above {DET_TOL}")

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def shift(self) -> np.ndarray:
        return np.array([self.y1, self.y2])

    @classmethod
    def from_arrays(cls, matrix, shift=(0.0, 0.0)) -> "AffineMap":
        (a11, a12), (a21, a22) = np.asarray(matrix, dtype=float)
        y1, y2 = np.asarray(shift, dtype=float)
        return cls(float(a11), float(a12), float(a21), float(a22), float(y1), float(y2))

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def translation(cls, y1, y2) -> "AffineMap":
        return cls(1.0, 0.0, 0.0, 1.0, y1, y2)

    @classmethod
    def rotation(cls, phi) -> "AffineMap":
        c, s = math.cos(phi), math.sin(phi)
        return cls(c, -s, s, c)

    @classmethod
    def reflection(cls, phi) -> "AffineMap":
        """Reflection across the line through the origin at angle ``phi / 2``."""
        c, s = math.cos(phi), math.sin(phi)
        return cls(c, s, s, -c)

    @classmethod
    def scaling(cls, a, b=None) -> "AffineMap":
        return cls(a, 0.0, 0.0, a if b is None else b)

    @classmethod
    def vertical_shear(cls, c) -> "AffineMap":
        return cls(1.0, 0.0, c, 1.0)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``."""
        a = self.matrix @ inner.matrix
        return AffineMap.from_arrays(a, self.matrix @ inner.shift + self.shift)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("a11", "a12", "a21", "a22", "y1", "y2")}


@dataclass(frozen=True)
class AngleGrid:
    """``count`` equispaced angles ``j * pi / count`` in ``[0, pi)``."""

    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise OutOfRange(f"angle count must be a positive integer, got {self.count!r}")

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.count) * (math.pi / self.count)

    def directions(self) -> list[Direction]:
        return [Direction.from_angle(t) for t in self.angles]

    def all_angles(self, antipodes=True) -> np.ndarray:
        """Angles in field row order: the grid, then its antipodes."""
        a = self.angles
        return np.concatenate([a, a + math.pi]) if antipodes else a


def slice_measure(m: DiscreteMeasure2D, d: Direction) -> DiscreteMeasure1D:
    """Pushforward of ``m`` under ``x -> <x, d>``, with coincident atoms merged."""
    proj = m.points[:, 0] * d.ux + m.points[:, 1] * d.uy
    return make_measure_1d(proj, m.weights, MERGE_TOL)


def apply_affine(m: DiscreteMeasure2D, t: AffineMap) -> DiscreteMeasure2D:
    """Pushforward ``(A . + y)_# m``: every atom moves, weights stay."""
    pts = m.points @ t.matrix.T + t.shift
    return DiscreteMeasure2D(pts, m.weights)


def remap_direction(t: AffineMap, d: Direction) -> tuple[Direction, float, float]:
    """Direction, scale and shift relating the slices of ``m`` and ``t_# m``.

    For every measure ``m``, ``slice(apply_affine(m, t), d)`` equals
    ``(scale * . + shift)_# slice(m, d_new)`` where ``d_new`` is the
    normalized ``A^T d``.
    """
    v = t.matrix.T @ d.vector
    scale = math.hypot(v[0], v[1])
    if scale == 0.0:
        raise SingularMatrix("A^T d vanishes")
    return Direction.from_vector(v[0], v[1]), scale, float(t.shift @ d.vector)


def _wrap(theta):
    # angle representative in [-pi, pi); exact for angles already inside
    if -math.pi <= theta < math.pi:
        return theta
    return (theta + math.pi) % (2 * math.pi) - math.pi


CLOSED_FORM_KINDS = ("translation", "rotation", "reflection", "anisotropic_scaling", "vertical_shear")


def closed_form_affine(kind: str, params) -> AffineMap:
    """The affine map belonging to a closed-form row of :func:`closed_form_remap`."""
    p = [float(v) for v in params]
    if kind == "translation":
        return AffineMap.translation(*p)
    if kind == "rotation":
        return AffineMap.rotation(*p)
    if kind == "reflection":
        return AffineMap.reflection(*p)
    if kind == "anisotropic_scaling":
        a, b = p
        if a <= 0 or b <= 0:
            raise OutOfRange("scaling factors must be positive")
        return AffineMap.scaling(a, b)
    if kind == "vertical_shear":
        # the closed form below holds for [[1, c], [0, 1]], whose adjoint
        # shears the direction vertically
        return AffineMap(1.0, p[0], 0.0, 1.0)
    raise OutOfRange(f"unknown transformation kind {kind!r}")


def closed_form_remap(kind: str, params, theta: float) -> tuple[float, float, float]:
    """Closed-form remapping for common transformations.

    Independent of :func:`remap_direction`; used to cross-check it. Returns
    ``(theta_new, scale, shift)`` in the pushforward convention, with the
    angle wrapped to ``[-pi, pi)``.

    Parameters
    ----------
    kind : str
        One of ``CLOSED_FORM_KINDS``.
    params : sequence of float
        ``(y1, y2)`` for translation, ``(phi,)`` for rotation and reflection,
        ``(a, b)`` with ``a, b > 0`` for anisotropic scaling, ``(c,)`` for
        vertical shear.
    theta : float
        Angle in the open interval ``(-pi/2, pi/2)``.
    """
    if not (-math.pi / 2 < theta < math.pi / 2):
        raise OutOfRange(f"theta={theta!r} outside (-pi/2, pi/2)")
    closed_form_affine(kind, params)  # validates kind and parameters
    p = [float(v) for v in params]
    if kind == "translation":
        return theta, 1.0, p[0] * math.cos(theta) + p[1] * math.sin(theta)
    if kind == "rotation":
        return _wrap(theta - p[0]), 1.0, 0.0
    if kind == "reflection":
        return _wrap(p[0] - theta), 1.0, 0.0
    if kind == "anisotropic_scaling":
        a, b = p
        scale = math.sqrt(a * a * math.cos(theta) ** 2 + b * b * math.sin(theta) ** 2)
        return math.atan(b / a * math.tan(theta)), scale, 0.0
    c = p[0]
    scale = math.sqrt(1 + c * c * math.cos(theta) ** 2 + c * math.sin(2 * theta))
    return math.atan(c + math.tan(theta)), scale, 0.0


def antipodal_reflect(m: DiscreteMeasure1D) -> DiscreteMeasure1D:
    """Negation pushforward: the slice along ``-d`` from the slice along ``d``."""
    return DiscreteMeasure1D(-m.positions[::-1], m.weights[::-1])
