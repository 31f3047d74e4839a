import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvlab.curvature import (
    QuadraticStrain,
    RiemannTensor,
    constant_sectional,
    saint_venant,
    saint_venant_recover,
    strain_field,
    symmetrize_curvature,
    validate_symmetries,
)
from conftest import random_tensors


def brute_strain(R, x):
    """(1/6) R_kijl x^k x^l by explicit loops."""
    n = len(x)
    e = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    e[i, j] += R[k, i, j, l] * x[k] * x[l] / 6
    return e


def explicit_symmetrization(raw):
    """Oracle: average over the 8 pair symmetries, then subtract the Bianchi-sum third."""
    R = np.zeros_like(raw)
    n = raw.shape[0]
    for i, j, k, l in np.ndindex(raw.shape):
        R[i, j, k, l] = (
            raw[i, j, k, l] - raw[j, i, k, l] - raw[i, j, l, k] + raw[j, i, l, k]
            + raw[k, l, i, j] - raw[l, k, i, j] - raw[k, l, j, i] + raw[l, k, j, i]
        ) / 8
    out = np.zeros_like(R)
    for i, j, k, l in np.ndindex(R.shape):
        out[i, j, k, l] = R[i, j, k, l] - (R[i, j, k, l] + R[i, k, l, j] + R[i, l, j, k]) / 3
    return out


class TestValidate:
    def test_constant_curvature_valid(self):
        assert validate_symmetries(constant_sectional(3, 1.7), 1e-12)

    def test_sign_contradiction(self):
        R = np.zeros((2, 2, 2, 2))
        R[0, 1, 0, 1] = 1.0
        R[1, 0, 0, 1] = 1.0
        assert not validate_symmetries(RiemannTensor(2, R))

    def test_dimension_one_rejected(self):
        with pytest.raises(ValueError):
            RiemannTensor(1, np.zeros((1, 1, 1, 1)))

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            validate_symmetries(constant_sectional(2, 1.0), 0.0)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_symmetrized_random_valid(self, n, rng):
        t = symmetrize_curvature(rng.standard_normal((n,) * 4))
        assert validate_symmetries(t, 1e-12)


class TestSymmetrize:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_explicit_oracle(self, n, rng):
        raw = rng.standard_normal((n,) * 4)
        np.testing.assert_allclose(symmetrize_curvature(raw).components, explicit_symmetrization(raw), atol=1e-14)

    def test_fixes_valid_tensor(self):
        t = constant_sectional(3, 2.0)
        np.testing.assert_array_equal(symmetrize_curvature(t.components).components, t.components)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_idempotent_and_contractive(self, n, rng):
        raw = rng.standard_normal((n,) * 4)
        once = symmetrize_curvature(raw)
        twice = symmetrize_curvature(once.components)
        assert np.abs(twice.components - once.components).max() <= 1e-14
        assert once.frobenius() <= np.linalg.norm(raw)

    def test_orthogonal_projection(self, rng):
        raw = rng.standard_normal((3,) * 4)
        p = symmetrize_curvature(raw).components
        other = symmetrize_curvature(rng.standard_normal((3,) * 4)).components
        assert abs(np.sum((raw - p) * other)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            symmetrize_curvature(np.zeros((2, 2, 3, 2)))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (3, 3, 3, 3), elements=st.floats(-10, 10)))
    def test_property_valid_output(self, raw):
        assert validate_symmetries(symmetrize_curvature(raw), 1e-12)


class TestConstantSectional:
    def test_flat(self):
        assert constant_sectional(2, 0.0).is_zero()

    def test_unit_sphere_2d(self):
        R = constant_sectional(2, 1.0).components
        assert R[0, 1, 0, 1] == 1.0
        assert R[0, 1, 1, 0] == -1.0
        assert R[0, 0, 0, 0] == 0.0 and R[0, 0, 1, 1] == 0.0

    def test_3d(self):
        assert constant_sectional(3, 2.0).components[0, 2, 0, 2] == 2.0

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_sectional_curvatures(self, n):
        R = constant_sectional(n, -0.7).components
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert R[i, j, i, j] == pytest.approx(-0.7)


class TestStrain:
    def test_zero(self):
        e = strain_field(constant_sectional(3, 0.0))
        assert not np.any(e([0.3, -1.0, 2.0]))

    def test_examples(self):
        e = strain_field(constant_sectional(2, 1.0))
        np.testing.assert_allclose(e([1.0, 0.0]), [[0, 0], [0, -1 / 6]], atol=1e-16)
        assert e([1.0, 1.0])[0, 1] == pytest.approx(1 / 6, abs=1e-16)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_loop_oracle(self, n, rng):
        t = random_tensors(n, 1, seed=n)[0]
        x = rng.standard_normal(n)
        np.testing.assert_allclose(strain_field(t)(x), brute_strain(t.components, x), atol=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_symmetric_homogeneous_zero_at_origin(self, n, rng):
        e = strain_field(random_tensors(n, 1, seed=10 + n)[0])
        x = rng.standard_normal(n)
        v = e(x)
        np.testing.assert_allclose(v, v.T, atol=1e-15)
        np.testing.assert_allclose(e(2.5 * x), 2.5**2 * v, rtol=1e-13)
        assert not np.any(e(np.zeros(n)))

    def test_linear(self, rng):
        t1, t2 = random_tensors(3, 2, seed=5)
        a, b = 1.3, -0.4
        lhs = strain_field(a * t1 + b * t2).coeffs
        rhs = a * strain_field(t1).coeffs + b * strain_field(t2).coeffs
        assert np.abs(lhs - rhs).max() <= 1e-14


class TestSaintVenant:
    def test_zero(self):
        assert saint_venant_recover(QuadraticStrain(3, np.zeros((3,) * 4))).is_zero()

    def test_round_trip_sphere(self):
        t = constant_sectional(2, 1.0)
        assert np.abs(saint_venant_recover(strain_field(t)).components - t.components).max() <= 1e-14

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_round_trip_random(self, n):
        for t in random_tensors(n, 10, seed=100 + n):
            back = saint_venant_recover(strain_field(t)).components
            assert np.abs(back - t.components).max() <= 1e-12 * np.abs(t.components).max()

    def test_annihilates_symmetric_gradients(self, rng):
        # f_i = A_ijkl... cubic field; Sym df is quadratic with constant Hessian
        n = 3
        T = rng.standard_normal((n, n, n, n))  # f_i = T_iabc x^a x^b x^c
        T = (T + T.transpose(0, 2, 1, 3) + T.transpose(0, 3, 2, 1) + T.transpose(0, 1, 3, 2)
             + T.transpose(0, 2, 3, 1) + T.transpose(0, 3, 1, 2)) / 6
        # d_j f_i = 3 T_ijbc x^b x^c, so Sym df has coeffs 1.5 (T_ijkl + T_jikl)
        e = QuadraticStrain(n, 1.5 * (T + T.transpose(1, 0, 2, 3)))
        assert np.abs(saint_venant(e.hessian())).max() < 1e-13


def test_n2_space_is_one_dimensional(rng):
    for _ in range(5):
        t = symmetrize_curvature(rng.standard_normal((2,) * 4))
        expected = t.components[0, 1, 0, 1] * constant_sectional(2, 1.0).components
        np.testing.assert_allclose(t.components, expected, atol=1e-15)


def test_json_round_trip_exact(rng):
    t = random_tensors(4, 1, seed=3)[0]
    back = RiemannTensor.from_json(json.dumps(json.loads(t.to_json())))
    np.testing.assert_array_equal(back.components, t.components)
    assert len(t.to_dict()["components"]) == 4**4
