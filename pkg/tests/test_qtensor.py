import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcsbv.errors import InvalidInputError
from lcsbv.oracle import jacobi_eigen
from lcsbv.qtensor import (Biaxial, QTensor, UniaxialState, check_director, invariants, normalize,
                           q_matrix, q_vector, spectral, to_qtensor, uniaxial_of)

from conftest import random_q, random_rotation, random_unit

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1).map(normalize)
orders = st.floats(-0.5, 1.0)


class TestStorage:
    def test_zz_is_implied(self):
        q = QTensor(0.2, -0.5, 0.1, 0.0, 0.3)
        assert q.zz == pytest.approx(0.3)
        assert abs(np.trace(q.matrix())) < 1e-14
        np.testing.assert_array_equal(q.matrix(), q.matrix().T)

    def test_from_matrix_round_trip(self, rng):
        m = random_q(rng)
        np.testing.assert_allclose(QTensor.from_matrix(m).matrix(), m, atol=1e-15)

    def test_from_matrix_rejects_trace(self):
        with pytest.raises(InvalidInputError):
            QTensor.from_matrix(np.eye(3))

    def test_vector_helpers_invert(self, rng):
        q5 = rng.normal(size=(7, 5))
        np.testing.assert_allclose(q_vector(q_matrix(q5)), q5)

    def test_arithmetic(self):
        a, b = QTensor(1, 0, 0, 0, 0), QTensor(0, 1, 0, 0, 0)
        assert (a + b).zz == -2
        assert (2 * a - b).components().tolist() == [2, -1, 0, 0, 0]


class TestToQTensor:
    def test_e3(self):
        m = to_qtensor(UniaxialState(1.0, (0, 0, 1))).matrix()
        np.testing.assert_allclose(m, np.diag([-1 / 3, -1 / 3, 2 / 3]), atol=1e-15)

    def test_isotropic(self):
        assert to_qtensor(UniaxialState(0.0, (0.6, 0.8, 0))).norm() == 0.0

    def test_diagonal_director(self):
        q = to_qtensor(UniaxialState(0.5, (1 / math.sqrt(2), 1 / math.sqrt(2), 0)))
        assert q.xx == pytest.approx(1 / 12, abs=1e-15)
        assert q.yy == pytest.approx(1 / 12, abs=1e-15)
        assert q.xy == pytest.approx(0.25, abs=1e-15)
        assert q.zz == pytest.approx(-1 / 6, abs=1e-15)

    def test_non_unit_director(self):
        with pytest.raises(InvalidInputError):
            to_qtensor(UniaxialState(1.0, (0, 0, 1.01)))

    @given(orders, unit_vectors)
    def test_uniaxial_spectrum(self, s, n):
        lam, _ = spectral(to_qtensor(UniaxialState(s, n)))
        np.testing.assert_allclose(np.sort(lam), np.sort([2 * s / 3, -s / 3, -s / 3]), atol=1e-10)


class TestSpectral:
    def test_zero(self):
        lam, v = spectral(QTensor.zero())
        np.testing.assert_array_equal(lam, 0.0)
        np.testing.assert_array_equal(v, np.eye(3))

    def test_uniaxial_e1(self):
        lam, v = spectral(to_qtensor(UniaxialState(1.0, (1, 0, 0))))
        np.testing.assert_allclose(lam, [2 / 3, -1 / 3, -1 / 3], atol=1e-14)
        np.testing.assert_allclose(v[:, 0], [1, 0, 0], atol=1e-14)

    def test_plate_midpoint(self):
        e1, e3 = np.eye(3)[0], np.eye(3)[2]
        Q0 = np.outer(e1, e1) - np.eye(3) / 3
        Q1 = np.outer(e3, e3) - np.eye(3) / 3
        lam, _ = spectral(0.5 * (Q0 + Q1))
        assert lam[0] == pytest.approx(1 / 6, abs=1e-14)
        assert lam[0] == pytest.approx(1 * 1 / (3 * (1 + 1)), abs=1e-14)

    def test_sign_and_tie_break(self):
        # degenerate top pair spanned by e1, e2: lexicographically largest is e1
        lam, v = spectral(np.diag([1 / 3, 1 / 3, -2 / 3]))
        np.testing.assert_allclose(v[:, 0], [1, 0, 0], atol=1e-14)
        for k in range(3):
            first = v[np.abs(v[:, k]) > 1e-12, k][0]
            assert first > 0

    @given(st.integers(0, 2 ** 32 - 1))
    def test_against_jacobi(self, seed):
        rng = np.random.default_rng(seed)
        m = random_q(rng)
        lam, v = spectral(m)
        ref = jacobi_eigen(m).value
        np.testing.assert_allclose(lam, ref, atol=1e-12)
        assert lam[0] >= lam[1] >= lam[2]
        assert abs(lam.sum()) < 1e-12
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)
        assert np.abs(m @ v - v * lam).max() <= 1e-10 * max(np.linalg.norm(m), 1e-300)

    def test_nearly_degenerate(self, rng):
        R = random_rotation(rng)
        m = R @ np.diag([0.4, -0.2 + 1e-9, -0.2 - 1e-9]) @ R.T
        lam, v = spectral(m)
        assert np.abs(m @ v - v * lam).max() < 1e-10


class TestUniaxialOf:
    def test_round_trip_e2(self):
        u = uniaxial_of(to_qtensor(UniaxialState(0.7, (0, 1, 0))))
        assert u.s == pytest.approx(0.7)
        assert abs(u.n[1]) == pytest.approx(1.0)

    def test_biaxial_marker(self):
        out = uniaxial_of(np.diag([0.2, 0.1, -0.3]), tol=1e-6)
        assert isinstance(out, Biaxial)
        assert not out

    def test_canonical(self):
        u = uniaxial_of(np.diag([2 / 3, -1 / 3, -1 / 3]))
        assert u.s == pytest.approx(1.0)
        np.testing.assert_allclose(u.n, [1, 0, 0], atol=1e-14)

    def test_negative_order(self):
        u = uniaxial_of(to_qtensor(UniaxialState(-0.4, (0, 0, 1))))
        assert u.s == pytest.approx(-0.4)

    def test_bad_tol(self):
        with pytest.raises(InvalidInputError):
            uniaxial_of(np.zeros((3, 3)), tol=0)

    def test_round_trip_sample(self, rng):
        for _ in range(10_000 // 20):
            s = rng.uniform(0.05, 1.0)
            n = random_unit(rng)
            q = to_qtensor(UniaxialState(s, n))
            u = uniaxial_of(q)
            assert u.s == pytest.approx(s, abs=1e-10)
            assert abs(abs(np.dot(u.n, n)) - 1) < 1e-10
            np.testing.assert_allclose(to_qtensor(u).matrix(), q.matrix(), atol=1e-7)


class TestInvariants:
    def test_rotation_invariance(self, rng):
        m = random_q(rng)
        t0, d0 = invariants(m)
        for _ in range(1000):
            R = random_rotation(rng)
            t, d = invariants(R @ m @ R.T)
            assert abs(t - t0) <= 1e-10 * abs(t0)
            assert abs(d - d0) <= 1e-10 * max(abs(d0), t0 ** 1.5)

    def test_normalize_unit(self, rng):
        v = normalize(rng.normal(size=(50, 3)))
        assert np.abs(np.linalg.norm(v, axis=1) - 1).max() < 1e-12
        check_director(v)
