import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from so3track.errors import DegenerateInput, NonSkewInput, NonUnitAxis
from so3track.so3 import (E1, E2, E3, I3, attitude_error_vector, conjugacy_angle, conjugacy_decompose, cross,
                          exp_rodrigues, hat, is_rotation, project_so3, random_rotation, random_unit_vector,
                          rotation_distance, rotation_z, transport_matrix, vee)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def power_series_exp(a, terms=20):
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def cross_componentwise(v, w):
    return np.array([v[1] * w[2] - v[2] * w[1], v[2] * w[0] - v[0] * w[2], v[0] * w[1] - v[1] * w[0]])


class TestHatVee:
    def test_hat_example(self):
        assert np.array_equal(hat([1, 2, 3]), np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]]))

    def test_hat_zero(self):
        assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))

    def test_hat_is_cross_product(self, rng):
        for _ in range(1000):
            v, w = rng.normal(size=3), rng.normal(size=3)
            assert np.allclose(hat(v) @ w, cross_componentwise(v, w), atol=1e-14)

    def test_vee_examples(self):
        assert np.array_equal(vee(hat([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])
        assert np.array_equal(vee(np.zeros((3, 3))), np.zeros(3))

    def test_vee_roundtrip_exact(self, rng):
        for v in rng.normal(size=(1000, 3)) * 10:
            assert np.array_equal(vee(hat(v)), v)

    def test_vee_rejects_symmetric(self):
        with pytest.raises(NonSkewInput):
            vee(np.eye(3))

    @given(vec3)
    def test_hat_skew(self, v):
        m = hat(v)
        assert np.array_equal(m, -m.T)
        assert np.array_equal(vee(m), v)

    @given(vec3, vec3)
    def test_inner_product_identity(self, v, w):
        lhs = np.trace(hat(v).T @ hat(w))
        assert lhs == pytest.approx(2.0 * np.dot(v, w), rel=1e-12, abs=1e-9)

    def test_cross_matches_numpy(self, rng):
        v, w = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(cross(v, w), np.cross(v, w), atol=1e-15)


class TestExp:
    def test_zero_angle(self, rng):
        assert np.array_equal(exp_rodrigues(0.0, random_unit_vector(rng)), I3)

    def test_quarter_turn_about_e3(self):
        assert np.allclose(exp_rodrigues(math.pi / 2, E3), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)
        assert np.allclose(exp_rodrigues(math.pi / 2, E3), rotation_z(math.pi / 2), atol=1e-15)

    def test_matches_power_series(self, rng):
        # the 20-term series truncates at theta^20/20!, below 1e-10 only for theta <= 2.5
        for _ in range(1000):
            theta = rng.uniform(0, 2.5)
            v = random_unit_vector(rng)
            assert np.max(np.abs(exp_rodrigues(theta, v) - power_series_exp(theta * hat(v), 20))) <= 1e-10

    def test_non_unit_axis(self):
        with pytest.raises(NonUnitAxis):
            exp_rodrigues(1.0, [1.0, 1.0, 0.0])

    def test_rotation_invariants(self, rng):
        for _ in range(1000):
            r = exp_rodrigues(rng.uniform(0, math.pi), random_unit_vector(rng))
            assert np.linalg.norm(r.T @ r - I3) <= 1e-12
            assert abs(np.linalg.det(r) - 1) <= 1e-12


class TestRotationZ:
    def test_identity_and_half_turn(self):
        assert np.allclose(rotation_z(0.0), I3)
        assert np.allclose(rotation_z(math.pi), np.diag([-1.0, -1.0, 1.0]), atol=1e-15)

    def test_equals_exp_about_e3(self, rng):
        for theta in rng.uniform(-10, 10, size=100):
            assert np.allclose(rotation_z(theta), exp_rodrigues(theta, E3), atol=1e-14)

    def test_distance_formula(self, rng):
        for t1, t2 in rng.uniform(-2 * math.pi, 2 * math.pi, size=(1000, 2)):
            expected = 2.0 * math.sqrt(1.0 - math.cos(t1 - t2))
            assert rotation_distance(rotation_z(t1), rotation_z(t2)) == pytest.approx(expected, abs=1e-12)


class TestDistance:
    def test_self_distance(self, rng):
        r = random_rotation(rng)
        assert rotation_distance(r, r) == 0.0

    def test_half_turn_is_maximal(self, rng):
        for _ in range(100):
            d = rotation_distance(I3, exp_rodrigues(math.pi, random_unit_vector(rng)))
            assert d == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_never_exceeds_max(self, rng):
        for _ in range(1000):
            assert rotation_distance(random_rotation(rng), random_rotation(rng)) <= 2 * math.sqrt(2) + 1e-12

    def test_bi_invariance(self, rng):
        for _ in range(1000):
            r, r1, r2 = (random_rotation(rng) for _ in range(3))
            d = rotation_distance(r1, r2)
            assert rotation_distance(r @ r1, r @ r2) == pytest.approx(d, abs=1e-12)
            assert rotation_distance(r1 @ r, r2 @ r) == pytest.approx(d, abs=1e-12)


class TestConjugacy:
    def test_angle_examples(self):
        assert conjugacy_angle(I3) == 0.0
        assert conjugacy_angle(rotation_z(math.pi)) == pytest.approx(math.pi, abs=1e-15)
        assert conjugacy_angle(exp_rodrigues(0.999 * math.pi, E2)) == pytest.approx(0.999 * math.pi, abs=1e-9)

    def test_angle_clamped(self):
        # trace slightly above 3 from roundoff must not produce NaN
        assert conjugacy_angle(I3 * (1 + 1e-15)) == 0.0
        assert conjugacy_angle(-I3 * (1 + 1e-15) + 2 * np.diag([0, 0, 1.0])) == pytest.approx(math.pi)

    def test_decompose_identity(self):
        dec = conjugacy_decompose(I3)
        assert dec.theta == 0.0
        assert np.array_equal(dec.u, I3)

    def test_decompose_canonical(self):
        dec = conjugacy_decompose(rotation_z(math.pi / 2))
        assert dec.theta == pytest.approx(math.pi / 2)
        assert np.allclose(dec.u[:, 2], E3, atol=1e-15)
        assert np.linalg.norm(dec.reconstruct() - rotation_z(math.pi / 2)) <= 1e-15

    def test_decompose_random(self, rng):
        for _ in range(1000):
            x = random_rotation(rng)
            dec = conjugacy_decompose(x)
            assert 0.0 <= dec.theta <= math.pi
            assert is_rotation(dec.u, 1e-12)
            assert np.linalg.norm(dec.reconstruct() - x) <= 1e-9
            assert dec.theta == pytest.approx(conjugacy_angle(x), abs=1e-7)

    @pytest.mark.parametrize("theta", [1e-6, 3e-7, 1e-9, math.pi - 1e-4, math.pi - 1e-5, math.pi - 1e-6,
                                       math.pi - 1e-9, math.pi])
    def test_decompose_near_degenerate(self, rng, theta):
        for _ in range(200):
            v = random_unit_vector(rng)
            x = exp_rodrigues(theta, v)
            dec = conjugacy_decompose(x)
            assert np.linalg.norm(dec.reconstruct() - x) <= 1e-9
            assert dec.theta == pytest.approx(theta, abs=1e-8)

    def test_half_turn_sign_convention(self):
        dec = conjugacy_decompose(exp_rodrigues(math.pi, -E2))
        # both signs are valid at exactly pi; the first nonzero component is made positive
        assert np.allclose(dec.axis, E2)

    def test_axis_orientation(self, rng):
        for _ in range(100):
            v = random_unit_vector(rng)
            theta = rng.uniform(0.1, math.pi - 0.1)
            assert np.allclose(conjugacy_decompose(exp_rodrigues(theta, v)).axis, v, atol=1e-12)


class TestAttitudeError:
    def test_zero(self, rng):
        r = random_rotation(rng)
        assert np.allclose(attitude_error_vector(r, r), 0.0, atol=1e-16)

    def test_norm_is_sine(self, rng):
        for _ in range(1000):
            rd = random_rotation(rng)
            theta = rng.uniform(0, math.pi)
            r = rd @ exp_rodrigues(theta, random_unit_vector(rng))
            assert np.linalg.norm(attitude_error_vector(r, rd)) == pytest.approx(math.sin(theta), abs=1e-12)

    def test_error_vector_identities(self, rng):
        for _ in range(10_000):
            r, rd = random_rotation(rng), random_rotation(rng)
            e2 = float(np.sum(attitude_error_vector(r, rd) ** 2))
            big = float(np.sum((r - rd) ** 2))
            assert abs(e2 - 0.5 * big * (1 - big / 8)) <= 1e-10
            assert e2 <= 0.5 * big + 1e-10
            a = rng.uniform(0, 1)
            if math.sqrt(big) <= 2 * math.sqrt(2 * a):
                assert 0.5 * (1 - a) * big <= e2 + 1e-10


class TestTransport:
    def test_identity(self, rng):
        r = random_rotation(rng)
        assert np.allclose(transport_matrix(r, r), I3, atol=1e-15)

    def test_spectral_norm_bounded(self, rng):
        for _ in range(1000):
            c = transport_matrix(random_rotation(rng), random_rotation(rng))
            assert np.linalg.norm(c, 2) <= 1 + 1e-12

    def test_error_rate_finite_difference(self, rng):
        # constant body rates: R(t) = R0 exp(t W^), Rd(t) = Rd0 exp(t Wd^)
        for _ in range(50):
            r0, rd0 = random_rotation(rng), random_rotation(rng)
            w, wd = rng.normal(size=3), rng.normal(size=3)

            def e_r(t):
                return attitude_error_vector(r0 @ _expm(t * w), rd0 @ _expm(t * wd))

            errs = []
            for h in (1e-3, 5e-4):
                fd = (e_r(h) - e_r(-h)) / (2 * h)
                predicted = transport_matrix(r0, rd0) @ (w - wd) + cross(e_r(0.0), wd)
                errs.append(np.linalg.norm(fd - predicted))
            assert errs[0] < 1e-4
            assert errs[1] < errs[0] / 3.0 or errs[1] < 1e-10  # O(h^2)


def _expm(w):
    theta = np.linalg.norm(w)
    return exp_rodrigues(theta, w / theta) if theta > 0 else I3


class TestProjection:
    def test_idempotent(self, rng):
        for _ in range(100):
            r = random_rotation(rng)
            assert np.linalg.norm(project_so3(r) - r) <= 1e-14

    def test_small_perturbation(self, rng):
        for _ in range(100):
            r = random_rotation(rng)
            p = project_so3(r + 1e-6 * rng.uniform(-1, 1, size=(3, 3)) / 3.0)
            assert is_rotation(p, 1e-12)
            assert np.linalg.norm(p - r) <= 2e-6

    def test_scaling_removed(self, rng):
        r = random_rotation(rng)
        assert np.linalg.norm(project_so3(1.0001 * r) - r) <= 1e-9

    def test_reflection_rejected(self):
        with pytest.raises(DegenerateInput):
            project_so3(np.diag([1.0, 1.0, -1.0]))

    def test_is_nearest(self, rng):
        # polar factor beats nearby rotations in Frobenius distance
        m = random_rotation(rng) + 0.05 * rng.normal(size=(3, 3))
        p = project_so3(m)
        for _ in range(200):
            q = p @ _expm(0.05 * rng.normal(size=3))
            assert np.linalg.norm(m - p) <= np.linalg.norm(m - q) + 1e-12
