import math

import numpy as np
import pytest

from nrcdt.errors import OutOfRange, SingularMatrix
from nrcdt.measures import DiscreteMeasure1D, Direction, make_measure_1d, make_measure_2d, mean_vector
from nrcdt.radon import (
    CLOSED_FORM_KINDS,
    AffineMap,
    AngleGrid,
    antipodal_reflect,
    apply_affine,
    remap_direction,
    slice_measure,
    closed_form_affine,
    closed_form_remap,
)

from conftest import random_affine, random_measure

E1, E2 = Direction.from_angle(0.0), Direction.from_angle(math.pi / 2)


class TestSlice:
    def test_point_along_axis(self):
        s = slice_measure(make_measure_2d([(1, 0)], [1]), E1)
        np.testing.assert_array_equal(s.positions, [1.0])

    def test_point_orthogonal(self):
        s = slice_measure(make_measure_2d([(1, 0)], [1]), E2)
        assert abs(s.positions[0]) < 1e-16

    def test_diagonal(self):
        s = slice_measure(make_measure_2d([(0, 0), (1, 1)], [1, 1]), Direction.from_angle(math.pi / 4))
        np.testing.assert_allclose(s.positions, [0, math.sqrt(2)], atol=1e-15)
        np.testing.assert_allclose(s.weights, [0.5, 0.5])

    def test_merges_coincident_projections(self):
        s = slice_measure(make_measure_2d([(0, 0), (0, 1), (1, 0)], [1, 1, 1]), E1)
        np.testing.assert_array_equal(s.positions, [0.0, 1.0])
        np.testing.assert_allclose(s.weights, [2 / 3, 1 / 3])

    def test_mass_and_mean(self, rng):
        for _ in range(20):
            m = random_measure(rng)
            d = Direction.from_angle(rng.uniform(0, 2 * math.pi))
            s = slice_measure(m, d)
            assert abs(s.weights.sum() - 1) < 1e-12
            mx, my = mean_vector(m)
            assert s.mean() == pytest.approx(mx * d.ux + my * d.uy, abs=1e-12)


class TestAffine:
    def test_identity(self, rng):
        m = random_measure(rng)
        np.testing.assert_array_equal(apply_affine(m, AffineMap.identity()).points, m.points)

    def test_scaling(self):
        m = apply_affine(make_measure_2d([(1, 1)], [1]), AffineMap.scaling(2.0))
        np.testing.assert_array_equal(m.points, [[2, 2]])

    def test_quarter_rotation(self):
        m = apply_affine(make_measure_2d([(1, 0)], [1]), AffineMap.rotation(math.pi / 2))
        np.testing.assert_allclose(m.points, [[0, 1]], atol=1e-15)

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            AffineMap(1.0, 2.0, 2.0, 4.0)

    def test_compose(self, rng):
        a, b = random_affine(rng), random_affine(rng)
        m = random_measure(rng)
        np.testing.assert_allclose(
            apply_affine(m, a.compose(b)).points, apply_affine(apply_affine(m, b), a).points, atol=1e-12
        )

    def test_reflection_is_involution(self):
        r = AffineMap.reflection(0.7)
        np.testing.assert_allclose(r.matrix @ r.matrix, np.eye(2), atol=1e-15)


class TestRemap:
    def test_rotation(self):
        d, s, sh = remap_direction(AffineMap.rotation(0.4), Direction.from_angle(1.0))
        assert d.theta == pytest.approx(0.6, abs=1e-14) and s == pytest.approx(1.0) and sh == 0.0

    def test_anisotropic_scaling_at_zero(self):
        d, s, sh = remap_direction(AffineMap.scaling(3.0, 0.5), E1)
        assert d.theta == 0.0 and s == 3.0 and sh == 0.0

    def test_translation(self):
        d, s, sh = remap_direction(AffineMap.translation(3.0, 4.0), E1)
        assert (d.ux, d.uy, s, sh) == (1.0, 0.0, 1.0, 3.0)

    def test_pushforward_identity(self, rng):
        for _ in range(50):
            m, t = random_measure(rng), random_affine(rng)
            d = Direction.from_angle(rng.uniform(-math.pi, math.pi))
            dn, scale, shift = remap_direction(t, d)
            lhs = slice_measure(apply_affine(m, t), d)
            base = slice_measure(m, dn)
            rhs = make_measure_1d(scale * base.positions + shift, base.weights)
            assert lhs.allclose(rhs, 1e-10)


class TestClosedForms:
    def test_anisotropic_scaling(self):
        assert closed_form_remap("anisotropic_scaling", (2, 1), 0.0) == (0.0, 2.0, 0.0)

    def test_vertical_shear(self):
        t, s, sh = closed_form_remap("vertical_shear", (1,), 0.0)
        assert t == pytest.approx(math.pi / 4, abs=1e-15)
        assert s == pytest.approx(math.sqrt(2), abs=1e-15)
        assert sh == 0.0

    @pytest.mark.parametrize("theta", [-1.2, 0.0, 0.9])
    def test_identity_rotation(self, theta):
        assert closed_form_remap("rotation", (0.0,), theta) == (theta, 1.0, 0.0)

    @pytest.mark.parametrize("theta", [-math.pi / 2, math.pi / 2, 2.0])
    def test_theta_domain(self, theta):
        with pytest.raises(OutOfRange):
            closed_form_remap("rotation", (0.0,), theta)

    def test_unknown_kind(self):
        with pytest.raises(OutOfRange):
            closed_form_remap("shear", (1,), 0.0)

    @pytest.mark.parametrize("kind", CLOSED_FORM_KINDS)
    def test_agrees_with_remap(self, kind, rng):
        for _ in range(100):
            params = {
                "translation": rng.uniform(-3, 3, 2),
                "rotation": rng.uniform(-4, 4, 1),
                "reflection": rng.uniform(-4, 4, 1),
                "anisotropic_scaling": rng.uniform(0.2, 3, 2),
                "vertical_shear": rng.uniform(-2, 2, 1),
            }[kind]
            theta = rng.uniform(-1.5, 1.5)
            tn, s, sh = closed_form_remap(kind, params, theta)
            d, s2, sh2 = remap_direction(closed_form_affine(kind, params), Direction.from_angle(theta))
            assert math.cos(tn) == pytest.approx(d.ux, abs=1e-12)
            assert math.sin(tn) == pytest.approx(d.uy, abs=1e-12)
            assert s == pytest.approx(s2, abs=1e-12)
            assert sh == pytest.approx(sh2, abs=1e-12)


class TestAntipodal:
    def test_negation(self):
        r = antipodal_reflect(DiscreteMeasure1D([1.0, 2.0], [0.3, 0.7]))
        np.testing.assert_array_equal(r.positions, [-2.0, -1.0])
        np.testing.assert_array_equal(r.weights, [0.7, 0.3])

    def test_fixed_point(self):
        r = antipodal_reflect(DiscreteMeasure1D([0.0], [1.0]))
        assert r.positions[0] == 0.0 and r.weights[0] == 1.0

    def test_involution(self, rng):
        m = make_measure_1d(rng.normal(size=10), rng.uniform(0.1, 1, 10))
        assert antipodal_reflect(antipodal_reflect(m)).allclose(m, 0.0)

    def test_matches_opposite_slice(self, rng):
        m = random_measure(rng)
        d = Direction.from_angle(0.8)
        assert antipodal_reflect(slice_measure(m, d)).allclose(slice_measure(m, d.antipode()), 1e-12)


class TestAngleGrid:
    def test_spacing(self):
        a = AngleGrid(8).angles
        assert a[0] == 0.0 and a[-1] < math.pi
        np.testing.assert_allclose(np.diff(a), math.pi / 8, atol=1e-12)

    def test_all_angles(self):
        a = AngleGrid(4).all_angles()
        assert len(a) == 8
        np.testing.assert_allclose(a[4:] - a[:4], math.pi)

    @pytest.mark.parametrize("n", [0, -1, 2.5])
    def test_invalid(self, n):
        with pytest.raises(OutOfRange):
            AngleGrid(n)
