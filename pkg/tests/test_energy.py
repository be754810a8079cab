import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcsbv import energy as en
from lcsbv.errors import InvalidInputError, InvalidModelError
from lcsbv.oracle import bulk_uniaxial_reference, frank_constants_reference, scan_1d
from lcsbv.qtensor import uniaxial_matrix

from conftest import central_diff, random_q, random_qgrad, random_rotation, random_unit, rel_err

E1, E2, E3 = np.eye(3)
ONE = en.FrankConstants.one_constant()
GENERAL = en.FrankConstants(1.0, 0.7, 1.3, 0.2, 0.0)


def tangent_gradient(rng, n, scale=1.0):
    G = rng.normal(size=(3, 3)) * scale
    return G - np.outer(n, n @ G)


class TestParameters:
    def test_ericksen_flag(self):
        assert GENERAL.ericksen_ok
        assert not en.FrankConstants(1.0, 1.0, 1.0, 1.5).ericksen_ok
        assert not en.FrankConstants(0.4, 1.0, 1.0, 0.0).ericksen_ok

    @pytest.mark.parametrize("kw", [{"a": 0, "b": 1, "c": 0}, {"a": 0, "b": -1, "c": 1}])
    def test_bulk_validation(self, kw):
        with pytest.raises(InvalidInputError):
            en.BulkParams(**kw)

    @pytest.mark.parametrize("r", [0.0, 1.0, 1.5])
    def test_jump_exponent(self, r):
        with pytest.raises(InvalidInputError, match=r"\(0, 1\)"):
            en.JumpEnergyParams(1.0, r)

    def test_growth_validation(self):
        with pytest.raises(InvalidInputError):
            en.GrowthModParams(p=2.0)
        with pytest.raises(InvalidInputError):
            en.GrowthModParams(alpha=0.0)

    def test_nematic_branch(self):
        assert en.BulkParams(1 / 27, 1, 1).nematic
        assert not en.BulkParams(0.04, 1, 1).nematic


class TestFrankFromLdG:
    def test_one_constant(self):
        K = en.frank_from_ldg(en.LdGElasticConstants(0, 0, 1, 0, 0), 0.5)
        assert (K.K1, K.K2, K.K3, K.K4, K.q0) == (0.5, 0.5, 0.5, 0.0, 0.0)

    def test_pitch(self):
        assert en.frank_from_ldg(en.LdGElasticConstants(0, 0, 1, 0, 2), 1.0).q0 == 0.5

    def test_mixed(self):
        K = en.frank_from_ldg(en.LdGElasticConstants(1, 1, 1, 1, 0), 1.0)
        assert K.K1 == pytest.approx(10 / 3, abs=1e-15)
        assert K.K2 == pytest.approx(4 / 3, abs=1e-15)
        assert K.K3 == pytest.approx(16 / 3, abs=1e-15)
        assert K.K4 == 1.0

    def test_undefined_pitch(self):
        with pytest.raises(InvalidModelError):
            en.frank_from_ldg(en.LdGElasticConstants(0, 0, 2, -3, 1), 1.0)

    @given(st.lists(st.floats(-5, 5), min_size=5, max_size=5), st.floats(0.01, 2))
    def test_matches_reference(self, L, s):
        L = en.LdGElasticConstants(*L)
        if abs(L.L3 + 2 / 3 * L.L4) < 1e-6:
            return
        got = en.frank_from_ldg(L, s)
        ref = frank_constants_reference(*L.as_tuple(), s)
        for a, b in zip((got.K1, got.K2, got.K3, got.K4, got.q0), ref):
            assert abs(a - b) <= 1e-14 * max(1.0, abs(b))


class TestOseenFrank:
    def test_zero_gradient(self):
        assert en.oseen_frank(E3, np.zeros((3, 3)), GENERAL) == 0.0

    def test_hedgehog_point(self):
        assert en.oseen_frank(E1, np.diag([0.0, 1.0, 1.0]), ONE) == pytest.approx(2.0, abs=1e-14)

    def test_disclination_splay(self):
        # n = e_r at r = 2: G = (I - e_r e_r) / r
        G = (np.eye(3) - np.outer(E1, E1) - np.outer(E3, E3)) / 2.0
        K = en.FrankConstants(1.0, 0.0, 0.0, 0.0)
        assert en.oseen_frank(E1, G, K) == pytest.approx(0.25, abs=1e-15)

    def test_one_constant_is_dirichlet(self, rng):
        for _ in range(100):
            n = random_unit(rng)
            G = tangent_gradient(rng, n)
            assert en.oseen_frank(n, G, ONE) == pytest.approx(np.sum(G * G), rel=1e-12)

    def test_positivity(self, rng):
        lo, hi = en.frank_bounds(GENERAL)
        assert 0 < lo <= hi
        for _ in range(2000):
            n = random_unit(rng)
            G = tangent_gradient(rng, n)
            w = en.oseen_frank(n, G, GENERAL)
            g2 = np.sum(G * G)
            assert lo * g2 * (1 - 1e-10) <= w <= hi * g2 * (1 + 1e-10)

    def test_frame_indifference(self, rng):
        K = en.FrankConstants(1.0, 0.7, 1.3, 0.2, 0.3)
        n = random_unit(rng)
        G = tangent_gradient(rng, n)
        w0 = en.oseen_frank(n, G, K)
        for _ in range(1000):
            R = random_rotation(rng)
            assert en.oseen_frank(R @ n, R @ G @ R.T, K) == pytest.approx(w0, rel=1e-9)


class TestWAlpha:
    M = en.GrowthModParams(1.5, 0.1)

    def test_zero(self):
        assert en.w_alpha(E3, np.zeros((3, 3)), ONE, self.M) == 0.0

    def test_scalar_value(self):
        m = en.GrowthModParams(1.5, 0.01)
        expected = (2 / 0.015) * (1.02 ** 0.75 - 1)
        assert en.w_alpha_scalar(2.0, m) == pytest.approx(expected, rel=1e-14)
        assert en.w_alpha_scalar(2.0, m) == pytest.approx(1.9950412, abs=1e-7)

    def test_negative_frank_rejected(self):
        K = en.FrankConstants(1.0, 1.0, 1.0, 5.0)
        G = np.zeros((3, 3))
        G[0, 1], G[1, 0] = 1.0, -1.0
        G[0, 0] = G[1, 1] = 1.0
        with pytest.raises(InvalidModelError):
            en.w_alpha(E3, G, K, self.M)

    def test_convexity_in_gradient(self, rng):
        for K in (ONE, GENERAL):
            bad = 0
            for _ in range(10_000 // 2):
                n = random_unit(rng)
                G, H = tangent_gradient(rng, n, 3.0), tangent_gradient(rng, n, 3.0)
                lam = rng.uniform()
                lhs = en.w_alpha(n, lam * G + (1 - lam) * H, K, self.M)
                rhs = lam * en.w_alpha(n, G, K, self.M) + (1 - lam) * en.w_alpha(n, H, K, self.M)
                bad += lhs > rhs + 1e-12
            assert bad == 0

    def test_growth_bounds(self, rng):
        C, Cp = en.growth_constants(GENERAL, self.M)
        assert C > 0 and Cp > 0
        for _ in range(5000):
            n = random_unit(rng)
            G = tangent_gradient(rng, n, 10 ** rng.uniform(-3, 3))
            gp = np.sqrt(np.sum(G * G)) ** self.M.p
            w = en.w_alpha(n, G, GENERAL, self.M)
            assert Cp * (gp - 1) <= w <= C * gp

    def test_small_alpha(self):
        W = np.linspace(0, 10, 201)
        for alpha in (1e-3, 1e-4, 1e-5):
            m = en.GrowthModParams(1.5, alpha)
            c = en.small_alpha_constant(m)
            assert np.all(np.abs(en.w_alpha_scalar(W, m) - W) <= alpha * W ** 2 * c + 1e-13)

    def test_monotone_in_gradient_size(self):
        res = scan_1d(lambda t: en.w_alpha_scalar(t * t, self.M), 0.0, 5.0, 2001)
        assert res.value == 0.0


class TestBulk:
    def test_zero(self):
        assert en.ldg_bulk(np.zeros((3, 3)), en.BulkParams(-1, 1, 1)) == 0.0

    def test_uniaxial_restriction(self, rng):
        for _ in range(50):
            a, b, c = rng.uniform(-2, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)
            s = rng.uniform(-1, 1)
            P = en.BulkParams(a, b, c)
            Q = uniaxial_matrix(s, random_unit(rng))
            assert en.ldg_bulk(Q, P) == pytest.approx(float(en.bulk_uniaxial(s, P)), abs=1e-13)
            assert en.bulk_uniaxial(s, P) == pytest.approx(bulk_uniaxial_reference(s, a, b, c), abs=1e-13)

    def test_minimum_value(self):
        P = en.BulkParams(0, 1, 1)
        assert en.bulk_uniaxial(0.5, P) == pytest.approx(-1 / 216, abs=1e-16)
        assert scan_1d(lambda s: float(en.bulk_uniaxial(s, P)), 0, 1).extra["min"] == pytest.approx(-1 / 216)

    def test_coexistence(self):
        P = en.BulkParams(1 / 27, 1, 1)
        assert abs(float(en.bulk_uniaxial(1 / 3, P))) < 1e-16

    @pytest.mark.parametrize("a,expected", [(0.0, 0.5), (1 / 27, 1 / 3), (1 / 24, None)])
    def test_minimizer(self, a, expected):
        out = en.bulk_minimizer_s(en.BulkParams(a, 1, 1))
        if expected is None:
            assert not out.nematic and out.s == 0.0
        else:
            assert out.nematic and out.s == pytest.approx(expected, abs=1e-15)

    def test_discriminant_zero_formula(self):
        # the closed form at b^2 = 24 a c, reached only past the nematic branch
        b, c = 1.0, 1.0
        a = b * b / (24 * c)
        assert (b + math.sqrt(max(b * b - 24 * a * c, 0))) / (4 * c) == 0.25

    def test_barrier_blows_up(self):
        P = en.BulkParams(-1, 1, 1, barrier=0.1)
        near = uniaxial_matrix(-0.999, E3)   # smallest eigenvalue 2(-0.999)/3 ~ -1/3 + ...
        far = uniaxial_matrix(-1.0001, E3)
        assert en.ldg_bulk(near, P) > en.ldg_bulk(np.zeros((3, 3)), P)
        assert en.ldg_bulk(far, P) == np.inf


class TestElastic:
    def test_zero(self):
        L = en.LdGElasticConstants(1, 1, 1, 1, 1)
        assert en.ldg_elastic(np.zeros((3, 3)), np.zeros((3, 3, 3)), L) == 0.0

    def test_dirichlet(self, rng):
        H = random_qgrad(rng)
        assert en.ldg_elastic(random_q(rng), H, en.LdGElasticConstants()) == pytest.approx(np.sum(H * H))

    def test_bend_profile_density(self):
        s, delta = 1.0, 1.0
        x = 0.37
        theta = math.pi * x / (2 * delta)
        n = np.array([math.cos(theta), 0, math.sin(theta)])
        dn = math.pi / (2 * delta) * np.array([-math.sin(theta), 0, math.cos(theta)])
        H = np.zeros((3, 3, 3))
        H[:, :, 2] = s * (np.outer(dn, n) + np.outer(n, dn))
        val = en.ldg_elastic(uniaxial_matrix(s, n), H, en.LdGElasticConstants())
        assert val == pytest.approx(s * s * math.pi ** 2 / (2 * delta ** 2), rel=1e-14)

    def test_quadratic_positivity(self, rng):
        for L in (en.LdGElasticConstants(1, 1, 1), en.LdGElasticConstants(0.5, -0.4, 1.0)):
            for _ in range(2000):
                assert en.ldg_elastic(np.zeros((3, 3)), random_qgrad(rng), L) > 0

    def test_frame_indifference(self, rng):
        L = en.LdGElasticConstants(0.3, 0.2, 1.0, 0.4, 0.5)
        Q, H = random_q(rng), random_qgrad(rng)
        v0 = en.ldg_elastic(Q, H, L)
        for _ in range(1000):
            R = random_rotation(rng)
            v = en.ldg_elastic(R @ Q @ R.T, np.einsum("ia,jb,kc,abc->ijk", R, R, R, H), L)
            assert v == pytest.approx(v0, rel=1e-9)


class TestEricksen:
    P0 = en.BulkParams(-1, 1, 1)

    def test_melted_core(self):
        G = np.diag([0.0, 1.0, 1.0])
        assert en.ericksen_density(0.0, np.zeros(3), E1, G, 1.0, self.P0) == 0.0

    def test_substitution(self):
        G = np.zeros((3, 3))
        G[1, 1] = 1.0
        zero_bulk = en.BulkParams(0.0, 1e-300, 1e-300)
        assert en.ericksen_density(1.0, np.zeros(3), E1, G, 1.0, zero_bulk) == pytest.approx(2.0)

    def test_matches_ldg_on_constant_order(self, rng):
        # one-constant LdG of s(nn - I/3) with constant s is 2 s^2 |grad n|^2
        for _ in range(20):
            s = rng.uniform(0.1, 1.0)
            n = random_unit(rng)
            G = tangent_gradient(rng, n)
            H = s * (np.einsum("ik,j->ijk", G, n) + np.einsum("i,jk->ijk", n, G))
            ldg = en.ldg_elastic(uniaxial_matrix(s, n), H, en.LdGElasticConstants())
            eri = en.ericksen_density(s, np.zeros(3), n, G, 1.0, self.P0) - en.bulk_uniaxial(s, self.P0)
            assert eri == pytest.approx(ldg, rel=1e-12)


class TestJump:
    J = en.JumpEnergyParams(1.0, 0.5)

    def test_equal_traces(self, rng):
        Q = random_q(rng)
        assert en.jump_energy(Q, Q, E3, self.J) == 0.0

    def test_plate_tensors(self):
        Q0 = np.outer(E1, E1) - np.eye(3) / 3
        Q1 = np.outer(E3, E3) - np.eye(3) / 3
        assert en.jump_energy(Q1, Q0, E3, self.J) == pytest.approx(2 ** 0.25, rel=1e-15)

    def test_director_kernel(self):
        assert en.director_jump_energy(E1, E2, 1.0, 1.0) == 1.0

    def test_head_to_tail(self, rng):
        for _ in range(100):
            a, b = random_unit(rng), random_unit(rng)
            f = en.director_jump_energy(a, b, 1.3, 0.5)
            assert en.director_jump_energy(-a, b, 1.3, 0.5) == f
            assert en.director_jump_energy(a, -b, 1.3, 0.5) == f

    def test_general_kernel_normal_flip(self, rng):
        J = en.JumpEnergyParams(kernel=lambda p, q, r, s: 1 + p + 2 * q + 3 * r + 4 * s)
        Qp, Qm, nu = random_q(rng), random_q(rng), random_unit(rng)
        assert en.jump_energy(Qp, Qm, -nu, J) == pytest.approx(en.jump_energy(Qp, Qm, nu, J))

    def test_frame_indifference(self, rng):
        J = en.JumpEnergyParams(kernel=lambda p, q, r, s: p * p + q * r + np.cos(s))
        Qp, Qm, nu = random_q(rng), random_q(rng), random_unit(rng)
        for params in (J, self.J):
            v0 = en.jump_energy(Qp, Qm, nu, params)
            for _ in range(1000):
                R = random_rotation(rng)
                v = en.jump_energy(R @ Qp @ R.T, R @ Qm @ R.T, R @ nu, params)
                assert v == pytest.approx(v0, rel=1e-9)

    def test_invariants(self):
        assert en.jump_invariants(E1, E1, E1) == (1.0, 1.0, 1.0, 1.0)
        assert en.jump_invariants(E1, E2, E1) == (0.0, 1.0, 0.0, 0.0)

    def test_invariants_in_domain(self, rng):
        a, b, c = (random_unit(rng, 100_000) for _ in range(3))
        ab, an, bn = (np.einsum("ij,ij->i", *p) for p in ((a, b), (a, c), (b, c)))
        al, be, ga, de = ab ** 2, an ** 2, bn ** 2, ab * an * bn
        assert np.abs(de ** 2 - al * be * ga).max() <= 1e-12
        assert (al + be + ga - 2 * de).max() <= 1 + 1e-12
        for i in range(0, 100_000, 997):
            en.jump_invariants(a[i], b[i], c[i])

    def test_invariants_reject_non_unit(self):
        with pytest.raises(InvalidInputError):
            en.jump_invariants(1.5 * E1, E2, E1)


class TestSmectic:
    S = en.SmecticParams()

    def test_zero(self):
        Q = uniaxial_matrix(1.0, E3)
        assert en.smectic_density(Q, np.zeros((3, 3, 3)), 0.0, np.zeros((3, 3)), self.S) == 0.0

    def test_middle_operator_reduces(self, rng):
        Q = uniaxial_matrix(self.S.s, E3)
        H = np.zeros((3, 3, 3))
        for _ in range(20):
            rho, rpp = rng.normal(), rng.normal()
            Hr = np.zeros((3, 3))
            Hr[2, 2] = rpp
            f = self.S.a * rho ** 2 / 2 + self.S.c * rho ** 4 / 4
            val = en.smectic_density(Q, H, rho, Hr, self.S)
            assert val - f == pytest.approx(self.S.B * (rpp + self.S.q ** 2 * rho) ** 2, rel=1e-12, abs=1e-12)

    def test_layer_ground_state(self):
        Q = uniaxial_matrix(self.S.s, E3)
        q = self.S.q
        for x in np.linspace(0, 1, 7):
            rho = 0.8 * math.cos(q * x)
            Hr = np.zeros((3, 3))
            Hr[2, 2] = -q * q * rho
            f = self.S.a * rho ** 2 / 2 + self.S.c * rho ** 4 / 4
            assert en.smectic_density(Q, np.zeros((3, 3, 3)), rho, Hr, self.S) - f == pytest.approx(0, abs=1e-12)

    def test_non_uniaxial_rejected(self):
        with pytest.raises(InvalidInputError):
            en.smectic_density(np.diag([0.2, 0.1, -0.3]), np.zeros((3, 3, 3)), 0.0, np.zeros((3, 3)), self.S)

    def test_coercivity(self, rng):
        S = en.SmecticParams(p=1.5, alpha=0.5)
        C, D = en.smectic_coercivity(S)
        for _ in range(500):
            H = random_qgrad(rng, 10 ** rng.uniform(-2, 3))
            assert en.smectic_elastic(H, S) >= C * np.sqrt(np.sum(H * H)) ** S.p + D - 1e-9


class TestKlemanParodi:
    def test_penalty_vanishes(self, rng):
        n = random_unit(rng)
        G = tangent_gradient(rng, n)
        val = en.kleman_parodi_density(n, G, n, GENERAL, 2.0, 1.0)
        assert val == pytest.approx(en.oseen_frank(n, G, GENERAL))

    def test_parallel(self):
        assert en.kleman_parodi_density(E3, np.zeros((3, 3)), np.zeros(3), ONE, 2.0, 1.0) == pytest.approx(1.0)

    def test_mixed(self):
        assert en.kleman_parodi_density(E3, np.zeros((3, 3)), E1, ONE, 2.0, 1.0) == pytest.approx(1.5)


class TestElastomer:
    def test_identity(self):
        assert en.elastomer_density(np.eye(3), 2.0, 1.0) == pytest.approx(3.0)


def _sample(rng, name):
    """Random arguments and (value, grads) of one density, with the slots to perturb."""
    n = random_unit(rng)
    G = rng.normal(size=(3, 3))
    Q, H = random_q(rng), random_qgrad(rng)
    K = en.FrankConstants(1.0, 0.7, 1.3, 0.2, 0.4)
    if name == "oseen_frank":
        return (n, G), lambda a, b: en.oseen_frank(a, b, K), en.oseen_frank_grad(n, G, K)[1:]
    if name == "w_alpha":
        G = tangent_gradient(rng, n)
        m = en.GrowthModParams(1.5, 0.3)
        return (n, G), lambda a, b: en.w_alpha(a, b, GENERAL, m), en.w_alpha_grad(n, G, GENERAL, m)[1:]
    if name == "ldg_bulk":
        P = en.BulkParams(-0.7, 1.1, 0.9)
        return (Q,), lambda a: en.ldg_bulk(a, P), en.ldg_bulk_grad(Q, P)[1:]
    if name == "ldg_bulk_barrier":
        P = en.BulkParams(-0.7, 1.1, 0.9, barrier=0.2)
        Q = 0.2 * Q / np.linalg.norm(Q)
        return (Q,), lambda a: en.ldg_bulk(a, P), en.ldg_bulk_grad(Q, P)[1:]
    if name == "ldg_elastic":
        L = en.LdGElasticConstants(0.3, -0.2, 1.0, 0.4, 0.5)
        return (Q, H), lambda a, b: en.ldg_elastic(a, b, L), en.ldg_elastic_grad(Q, H, L)[1:]
    if name == "ericksen":
        s, gs = rng.normal(), rng.normal(size=3)
        P = en.BulkParams(-0.5, 1.0, 1.0)
        out = en.ericksen_density_grad(s, gs, n, G, 1.3, P)
        return ((np.array(s), gs, n, G), lambda a, b, c, d: en.ericksen_density(a, b, c, d, 1.3, P), out[1:])
    if name == "jump":
        J = en.JumpEnergyParams(1.2, 0.6)
        Qm = random_q(rng)
        return (Q, Qm), lambda a, b: en.jump_energy(a, b, E3, J), en.jump_energy_grad(Q, Qm, E3, J)[1:]
    if name == "jump_kernel":
        J = en.JumpEnergyParams(kernel=lambda p, q, r, s: p ** 2 + q * r + np.sin(s),
                                kernel_grad=lambda p, q, r, s: (2 * p, r, q, np.cos(s)))
        Qm, nu = random_q(rng), random_unit(rng)
        return (Q, Qm), lambda a, b: en.jump_energy(a, b, nu, J), en.jump_energy_grad(Q, Qm, nu, J)[1:]
    if name == "smectic":
        S = en.SmecticParams(p=1.5, alpha=0.3, b=0.4)
        rho, Hr = np.array(rng.normal()), rng.normal(size=(3, 3))
        out = en.smectic_density_grad(Q, H, rho, Hr, S, check=False)
        return ((Q, H, rho, Hr), lambda a, b, c, d: en.smectic_density(a, b, c, d, S, check=False), out[1:])
    if name == "kleman_parodi":
        gphi = rng.normal(size=3)
        out = en.kleman_parodi_density_grad(n, G, gphi, K, 2.0, 0.7)
        return ((n, G, gphi), lambda a, b, c: en.kleman_parodi_density(a, b, c, K, 2.0, 0.7),
                (out[1], out[2], out[3]))
    raise KeyError(name)


DENSITIES = ["oseen_frank", "w_alpha", "ldg_bulk", "ldg_bulk_barrier", "ldg_elastic", "ericksen",
             "jump", "jump_kernel", "smectic", "kleman_parodi"]


@pytest.mark.parametrize("name", DENSITIES)
def test_density_gradients(name):
    rng = np.random.default_rng(hash(name) % 2 ** 32)
    worst = 0.0
    for _ in range(100):
        args, fun, grads = _sample(rng, name)
        slots = [i for i in range(len(args)) if not (name == "ericksen" and i == 2)]
        for i in slots:
            def partial(x, i=i):
                a = list(args)
                a[i] = x
                return float(fun(*a))
            fd = central_diff(partial, np.array(args[i], float))
            worst = max(worst, rel_err(grads[i], fd))
    assert worst < 1e-6
