import math

import numpy as np
import pytest

from lcsbv import energy as en
from lcsbv.errors import InvalidInputError
from lcsbv.grid import (Field, GridSpec, energy_and_gradient, gradient_at, hessian_at, read_field,
                        shift_periodic, total_energy, write_field)
from lcsbv.models import (EricksenModel, FrankModel, LdGModel, SmecticModel, UniaxialLift,
                          WAlphaModel)

from conftest import central_diff, random_unit, rel_err

E3 = np.array([0.0, 0.0, 1.0])


def bend_field(nodes, delta=1.0):
    g = GridSpec((nodes - 1,), (delta,))
    th = math.pi / 2 * g.axis_coords(0) / delta
    return Field(g, "director", np.stack([np.cos(th), 0 * th, np.sin(th)], axis=-1))


class TestGridSpec:
    @pytest.mark.parametrize("kw", [{"cells": (1,), "lengths": (1.0,)},
                                    {"cells": (4,), "lengths": (0.0,)},
                                    {"cells": (4, 4), "lengths": (1.0,)},
                                    {"cells": (4,), "lengths": (1.0,), "bc": ("open",)},
                                    {"cells": (4,), "lengths": (1.0,), "geometry": "spherical"}])
    def test_rejects(self, kw):
        with pytest.raises(InvalidInputError):
            GridSpec(**kw)

    def test_node_counts(self):
        g = GridSpec((4, 5), (1.0, 2.0), bc=("dirichlet", "periodic"))
        assert g.node_shape == (5, 5)
        assert g.boundary_mask().sum() == 10

    def test_dict_round_trip(self):
        g = GridSpec((4,), (2.0,), origin=(0.5,), geometry="cylindrical", spacing="geometric")
        assert GridSpec.from_dict(g.to_dict()) == g

    def test_geometric_axis(self):
        g = GridSpec((10,), (0.99,), origin=(0.01,), spacing="geometric")
        x = g.axis_coords(0)
        assert x[0] == pytest.approx(0.01) and x[-1] == pytest.approx(1.0)
        np.testing.assert_allclose(x[1:] / x[:-1], (x[1] / x[0]) * np.ones(10))


class TestNodeDerivatives:
    def test_linear_exact(self):
        g = GridSpec((5, 6, 7), (1.0, 1.3, 0.7))
        f = Field.from_function(g, "scalar", lambda x: 2 * x[:, 0] + 0.0 * x[:, 1])
        for node in [(0, 0, 0), (2, 3, 4), (5, 6, 7)]:
            np.testing.assert_allclose(gradient_at(f, node), [2, 0, 0], atol=1e-12)

    def test_quadratic_hessian(self):
        g = GridSpec((4, 4, 6), (1.0, 1.0, 1.0))
        f = Field.from_function(g, "scalar", lambda x: x[:, 2] ** 2)
        for node in [(2, 2, 3), (0, 0, 0), (4, 4, 6)]:
            assert hessian_at(f, node)[2, 2] == pytest.approx(2.0, abs=1e-9)
            assert gradient_at(f, node)[2] == pytest.approx(2 * node[2] / 6, abs=1e-12)

    def test_mixed_hessian(self):
        g = GridSpec((6, 6), (1.0, 1.0))
        f = Field.from_function(g, "scalar", lambda x: x[:, 0] * x[:, 1])
        assert hessian_at(f, (3, 3))[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_periodic_wrap(self):
        g = GridSpec((32,), (1.0,), bc=("periodic",))
        f = Field.from_function(g, "scalar", lambda x: np.sin(2 * math.pi * x[:, 0]))
        d = gradient_at(f, (0,))[2]
        assert d == pytest.approx(2 * math.pi, rel=1e-2)

    def test_disclination_gradient(self):
        h = 0.01
        g = GridSpec((2, 2), (2 * h, 2 * h), origin=(2 - h, -h))
        f = Field.from_function(g, "director",
                                lambda x: np.column_stack([x[:, 0], x[:, 1], 0 * x[:, 0]])
                                / np.hypot(x[:, 0], x[:, 1])[:, None])
        G = gradient_at(f, (1, 1))
        assert np.sum(G * G) == pytest.approx(0.25, abs=1e-3)


class TestTotalEnergy:
    def test_constant_director(self):
        g = GridSpec((4, 4, 4), (1.0, 1.0, 1.0))
        f = Field(g, "director", np.tile(E3, (g.n_nodes, 1)))
        res = total_energy(f, FrankModel(en.FrankConstants(1.0, 0.7, 1.3, 0.2)))
        assert res.total == 0.0 and res.bulk == 0.0

    def test_hedgehog_radial(self):
        g = GridSpec((999,), (1 - 1e-3,), origin=(1e-3,), geometry="spherical", spacing="geometric")
        f = Field(g, "director", np.tile([1.0, 0.0, 0.0], (g.n_nodes, 1)))
        E = total_energy(f, FrankModel()).total
        assert E == pytest.approx(8 * math.pi, rel=0.02)

    def test_bend_profile(self):
        model = UniaxialLift(LdGModel(en.LdGElasticConstants()), 1.0)
        E = total_energy(bend_field(400), model).total
        assert E == pytest.approx(math.pi ** 2 / 2, rel=1e-3)

    def test_geodesic_bend_exact(self):
        model = UniaxialLift(LdGModel(en.LdGElasticConstants()), 1.0, interpolation="geodesic")
        for nodes in (5, 50):
            assert total_energy(bend_field(nodes), model).total == pytest.approx(math.pi ** 2 / 2, rel=1e-12)

    def test_bulk_and_elastic_split(self):
        P = en.BulkParams(-1.0, 1.0, 1.0)
        model = UniaxialLift(LdGModel(en.LdGElasticConstants(), P), 1.0)
        res = total_energy(bend_field(200), model)
        assert res.bulk == pytest.approx(float(en.bulk_uniaxial(1.0, P)), rel=1e-3)
        assert res.total == pytest.approx(res.bulk + res.elastic)

    def test_incompatible(self):
        with pytest.raises(InvalidInputError):
            total_energy(bend_field(5), LdGModel())

    def test_geodesic_needs_one_constant(self):
        from lcsbv.errors import InvalidModelError
        with pytest.raises(InvalidModelError):
            UniaxialLift(LdGModel(en.LdGElasticConstants(1, 0, 1)), 1.0, interpolation="geodesic")

    def test_periodic_shift(self, rng):
        g = GridSpec((6, 5), (1.0, 1.0), bc=("periodic", "periodic"))
        f = Field(g, "director", random_unit(rng, g.n_nodes))
        model = FrankModel(en.FrankConstants(1.0, 0.7, 1.3, 0.2, 0.5))
        E0 = total_energy(f, model).total
        for axis in (0, 1):
            assert total_energy(shift_periodic(f, axis), model).total == pytest.approx(E0, abs=1e-12)

    def test_quadrature_order(self):
        # smooth manufactured field n = (cos t, sin t, 0) with t = sin(pi x)
        def energy(cells):
            g = GridSpec((cells,), (1.0,))
            t = np.sin(math.pi * g.axis_coords(0))
            f = Field(g, "director", np.stack([np.cos(t), np.sin(t), 0 * t], axis=-1))
            return total_energy(f, FrankModel()).total
        E = [energy(c) for c in (20, 40, 80)]
        order = math.log2((E[0] - E[1]) / (E[1] - E[2]))
        assert order >= 1.9


class TestFieldIO:
    def test_round_trip(self, tmp_path, rng):
        g = GridSpec((3, 4), (1.0, 2.0), bc=("dirichlet", "periodic"))
        f = Field(g, "qtensor", rng.normal(size=(g.n_nodes, 5)))
        write_field(f, tmp_path / "q", FrankModel(), {"note": "x"})
        back = read_field(tmp_path / "q")
        assert back.grid == g and back.kind == "qtensor"
        np.testing.assert_array_equal(back.values, f.values)
        np.testing.assert_array_equal(back.fixed, f.fixed)
        header = (tmp_path / "q.csv").read_text().splitlines()[0]
        assert header == "x0,x1,fixed,qxx,qyy,qxy,qxz,qyz"


def _fd_check(grid, kind, model, u):
    res, g = energy_and_gradient(grid, kind, model, u)
    fd = central_diff(lambda v: energy_and_gradient(grid, kind, model, v, with_grad=False)[0].total, u)
    return rel_err(g, fd)


class TestDiscreteGradient:
    def test_frank_3d(self, rng):
        g = GridSpec((7, 7, 7), (1.0, 1.2, 0.8))
        u = random_unit(rng, g.n_nodes)
        assert _fd_check(g, "director", FrankModel(en.FrankConstants(1.0, 0.7, 1.3, 0.2, 0.4)), u) < 1e-6

    def test_walpha_3d(self, rng):
        g = GridSpec((7, 7, 7), (1.0, 1.0, 1.0), bc=("periodic", "dirichlet", "dirichlet"))
        # near-uniform, so the Frank density stays positive on every cell
        u = E3 + 0.3 * rng.normal(size=(g.n_nodes, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        model = WAlphaModel(en.FrankConstants.one_constant(), en.GrowthModParams(1.5, 0.3))
        assert _fd_check(g, "director", model, u) < 1e-6

    def test_ldg_3d(self, rng):
        g = GridSpec((7, 7, 7), (1.0, 1.0, 1.0))
        u = 0.3 * rng.normal(size=(g.n_nodes, 5))
        model = LdGModel(en.LdGElasticConstants(0.3, 0.2, 1.0, 0.2, 0.3), en.BulkParams(-1, 1, 1))
        assert _fd_check(g, "qtensor", model, u) < 1e-6

    def test_ericksen_2d(self, rng):
        g = GridSpec((6, 6), (1.0, 1.0))
        u = np.column_stack([rng.uniform(0.2, 1, g.n_nodes), random_unit(rng, g.n_nodes)])
        assert _fd_check(g, "ericksen", EricksenModel(1.3, en.BulkParams(-1, 1, 1)), u) < 1e-6

    @pytest.mark.parametrize("interp", ["linear", "geodesic"])
    def test_uniaxial_lift_1d(self, rng, interp):
        g = GridSpec((12,), (2.0,))
        u = random_unit(rng, g.n_nodes)
        model = UniaxialLift(LdGModel(en.LdGElasticConstants(), en.BulkParams(-1, 1, 1)), 0.8, interp)
        assert _fd_check(g, "director", model, u) < 1e-6

    @pytest.mark.parametrize("geometry", ["cylindrical", "spherical"])
    def test_radial(self, rng, geometry):
        g = GridSpec((15,), (0.9,), origin=(0.1,), geometry=geometry, spacing="geometric")
        u = random_unit(rng, g.n_nodes)
        if geometry == "spherical":
            u[:, 2] = 0.0
            u /= np.linalg.norm(u, axis=1, keepdims=True)
        assert _fd_check(g, "director", FrankModel(), u) < 1e-6

    @pytest.mark.parametrize("cells,bc", [((24,), ("periodic",)), ((6, 6), ("periodic", "dirichlet"))])
    def test_smectic(self, rng, cells, bc):
        g = GridSpec(cells, (1.0,) * len(cells), bc=bc)
        u = rng.normal(size=(g.n_nodes, 1))
        model = SmecticModel(en.SmecticParams(b=0.3), n0=(0.0, 0.6, 0.8) if len(cells) == 2 else (0, 0, 1))
        assert _fd_check(g, "scalar", model, u) < 1e-6
