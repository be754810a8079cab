"""Structured grids, node-centered fields and quadrature of energy densities.

Nodes sit on cell corners.  Along a Dirichlet axis the first and last nodes
carry boundary values and are held fixed; a periodic axis wraps and has as
many nodes as cells.

Total energies use a cell-midpoint rule: inside each cell the field value is
the corner average and each gradient component is the mean of the corner
differences along that axis.  The resulting sparse operators are linear, so
the exact gradient of the discrete energy is their transpose applied to the
density derivatives.

One-dimensional radial grids are reductions of 3D director fields:

* ``cylindrical`` -- values are director components in the local frame
  ``(e_r, e_theta, e_z)`` of a field independent of ``theta`` and ``z``;
  energies are per unit height.
* ``spherical`` -- values ``m = (cos psi, sin psi, 0)`` encode
  ``n(x) = R_z(psi(|x|)) x/|x|`` (a hedgehog twisted about ``e_z``); the
  density is averaged over the sphere with Gauss-Legendre quadrature.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import energy as en
from .errors import InvalidInputError
from .models import EnergyModel, UniaxialLift, check_compatible
from .qtensor import BASIS, q_matrix, q_vector, q_vector_grad

COMPONENTS = {"director": 3, "qtensor": 5, "scalar": 1, "ericksen": 4}
COMPONENT_NAMES = {
    "director": ["n1", "n2", "n3"],
    "qtensor": ["qxx", "qyy", "qxy", "qxz", "qyz"],
    "scalar": ["value"],
    "ericksen": ["s", "n1", "n2", "n3"],
}
DEFAULT_AXES = {1: (2,), 2: (0, 1), 3: (0, 1, 2)}


@dataclass(frozen=True)
class GridSpec:
    cells: tuple
    lengths: tuple
    bc: Optional[tuple] = None
    geometry: str = "cartesian"
    origin: Optional[tuple] = None
    axes: Optional[tuple] = None
    spacing: str = "uniform"

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        dim = len(cells)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)
        if dim not in (1, 2, 3) or len(lengths) != dim:
            raise InvalidInputError("grid needs 1-3 axes with one length per axis")
        if any(c < 2 for c in cells):
            raise InvalidInputError("grid needs at least 2 cells per axis")
        if any(not v > 0 for v in lengths):
            raise InvalidInputError("grid lengths must be positive")
        bc = tuple(self.bc) if self.bc is not None else ("dirichlet",) * dim
        if len(bc) != dim or any(b not in ("dirichlet", "periodic") for b in bc):
            raise InvalidInputError("bc entries must be 'dirichlet' or 'periodic'")
        object.__setattr__(self, "bc", bc)
        origin = tuple(float(v) for v in self.origin) if self.origin is not None else (0.0,) * dim
        object.__setattr__(self, "origin", origin)
        axes = tuple(self.axes) if self.axes is not None else DEFAULT_AXES[dim]
        object.__setattr__(self, "axes", axes)
        if self.geometry not in ("cartesian", "cylindrical", "spherical"):
            raise InvalidInputError(f"unknown geometry {self.geometry!r}")
        if self.geometry != "cartesian":
            if dim != 1 or bc != ("dirichlet",):
                raise InvalidInputError("radial grids are 1D with Dirichlet ends")
            if not origin[0] > 0:
                raise InvalidInputError("radial grids need a positive inner radius (cutoff)")
        if self.spacing not in ("uniform", "geometric"):
            raise InvalidInputError("spacing must be 'uniform' or 'geometric'")
        if self.spacing == "geometric" and (dim != 1 or not origin[0] > 0):
            raise InvalidInputError("geometric spacing needs a 1D grid starting at a positive coordinate")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def node_shape(self) -> tuple:
        return tuple(c + (1 if b == "dirichlet" else 0) for c, b in zip(self.cells, self.bc))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    def axis_coords(self, k: int) -> np.ndarray:
        """Node coordinates along grid axis ``k``."""
        a, L, c = self.origin[k], self.lengths[k], self.cells[k]
        if self.spacing == "geometric":
            x = np.geomspace(a, a + L, c + 1)
        else:
            x = a + L * np.arange(c + 1) / c
        return x if self.bc[k] == "dirichlet" else x[:-1]

    def axis_widths(self, k: int) -> np.ndarray:
        a, L, c = self.origin[k], self.lengths[k], self.cells[k]
        x = np.geomspace(a, a + L, c + 1) if self.spacing == "geometric" else a + L * np.arange(c + 1) / c
        return np.diff(x)

    def spacing_of(self, k: int) -> float:
        return float(self.axis_widths(k).max())

    def node_coords(self) -> np.ndarray:
        """(n_nodes, dim) array in C order."""
        mesh = np.meshgrid(*[self.axis_coords(k) for k in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def physical_coords(self) -> np.ndarray:
        """(n_nodes, 3) node positions embedded in R^3 via ``axes``."""
        out = np.zeros((self.n_nodes, 3))
        out[:, list(self.axes)] = self.node_coords()
        return out

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.node_shape, dtype=bool)
        for k, b in enumerate(self.bc):
            if b == "dirichlet":
                idx = [slice(None)] * self.dim
                idx[k] = 0
                mask[tuple(idx)] = True
                idx[k] = -1
                mask[tuple(idx)] = True
        return mask

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()})

    # ---------------------------------------------------------- operators

    @cached_property
    def cell_ops(self) -> "CellOperators":
        return build_cell_operators(self)

    @cached_property
    def node_ops(self) -> "NodeOperators":
        return build_node_operators(self)


@dataclass
class CellOperators:
    avg: sp.csr_matrix
    diff: list
    weight: np.ndarray
    center: np.ndarray  # (n_cells, dim) cell-center coordinates


def _cell_corners(grid: GridSpec):
    shape = grid.node_shape
    cell_idx = np.stack(np.meshgrid(*[np.arange(c) for c in grid.cells], indexing="ij"), -1).reshape(-1, grid.dim)
    offsets = np.array(list(np.ndindex(*(2,) * grid.dim)))
    corners = cell_idx[:, None, :] + offsets[None, :, :]
    for k in range(grid.dim):
        corners[..., k] %= shape[k]
    flat = np.ravel_multi_index(tuple(corners[..., k] for k in range(grid.dim)), shape)
    return cell_idx, offsets, flat


def edge_key(grid: GridSpec, node_a: int, axis: int) -> tuple:
    """Canonical identifier ``(axis, lower-node multi-index)`` of the edge leaving ``node_a``."""
    return (axis, tuple(int(i) for i in np.unravel_index(node_a, grid.node_shape)))


def build_cell_operators(grid: GridSpec, cuts: Optional[set] = None) -> CellOperators:
    """Corner-average and per-axis difference operators (cells x nodes).

    ``cuts`` holds edges ``(axis, lower-node index)`` that stencils must not
    difference across.  A cut edge contributes zero to its cell's gradient,
    so the operators see only the absolutely continuous part of the
    derivative and a cut with equal traces changes nothing.
    """
    cell_idx, offsets, flat = _cell_corners(grid)
    nc, ncorner = flat.shape
    rows = np.repeat(np.arange(nc), ncorner)
    avg = sp.csr_matrix((np.full(nc * ncorner, 1.0 / ncorner), (rows, flat.ravel())),
                        shape=(nc, grid.n_nodes))
    widths = [grid.axis_widths(k) for k in range(grid.dim)]
    diffs = []
    for k in range(grid.dim):
        lo = np.where(offsets[:, k] == 0)[0]
        hi = np.array([np.where((offsets == offsets[j] + np.eye(grid.dim, dtype=int)[k]).all(1))[0][0] for j in lo])
        h = widths[k][cell_idx[:, k]]
        a_nodes, b_nodes = flat[:, lo], flat[:, hi]
        live = np.ones(a_nodes.shape, dtype=bool)
        if cuts:
            for c in range(nc):
                for e in range(len(lo)):
                    if edge_key(grid, a_nodes[c, e], k) in cuts:
                        live[c, e] = False
        vals = live * (1.0 / (len(lo) * h))[:, None]
        r = np.repeat(np.arange(nc), len(lo))
        m = sp.csr_matrix((vals.ravel(), (r, b_nodes.ravel())), shape=(nc, grid.n_nodes))
        m = m - sp.csr_matrix((vals.ravel(), (r, a_nodes.ravel())), shape=(nc, grid.n_nodes))
        diffs.append(m.tocsr())
    centers = np.stack([grid.axis_coords(k)[cell_idx[:, k]] + 0.5 * widths[k][cell_idx[:, k]]
                        if grid.bc[k] == "dirichlet" else
                        grid.origin[k] + (cell_idx[:, k] + 0.5) * widths[k][cell_idx[:, k]]
                        for k in range(grid.dim)], axis=-1)
    weight = np.prod([widths[k][cell_idx[:, k]] for k in range(grid.dim)], axis=0)
    if grid.geometry == "cylindrical":
        weight = weight * 2 * math.pi * centers[:, 0]
    elif grid.geometry == "spherical":
        weight = weight * 4 * math.pi * centers[:, 0] ** 2
    return CellOperators(avg, diffs, weight, centers)


@dataclass
class NodeOperators:
    grad: list      # first-derivative operators, one per grid axis
    second: list    # pure second-derivative operators
    weight: np.ndarray


def _first_1d(n, h, periodic):
    if periodic:
        m = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n)).tolil()
        m[0, n - 1], m[n - 1, 0] = -1, 1
        return (m / (2 * h)).tocsr()
    m = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n)).tolil()
    m[0, :3] = [-3, 4, -1]
    m[n - 1, n - 3:] = [1, -4, 3]
    return (m / (2 * h)).tocsr()


def _second_1d(n, h, periodic):
    m = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], shape=(n, n)).tolil()
    if periodic:
        m[0, n - 1] = m[n - 1, 0] = 1
    else:
        m[0, :] = 0
        m[n - 1, :] = 0
        m[0, :4] = [2, -5, 4, -1]
        m[n - 1, n - 4:] = [-1, 4, -5, 2]
    return (m / h ** 2).tocsr()


def build_node_operators(grid: GridSpec) -> NodeOperators:
    if grid.spacing != "uniform":
        raise InvalidInputError("node stencils need uniform spacing")
    shape = grid.node_shape
    grads, seconds, weights = [], [], []
    for k in range(grid.dim):
        n, h, per = shape[k], grid.lengths[k] / grid.cells[k], grid.bc[k] == "periodic"
        eye_before = sp.identity(int(np.prod(shape[:k])), format="csr")
        eye_after = sp.identity(int(np.prod(shape[k + 1:])), format="csr")
        grads.append(sp.kron(sp.kron(eye_before, _first_1d(n, h, per)), eye_after).tocsr())
        seconds.append(sp.kron(sp.kron(eye_before, _second_1d(n, h, per)), eye_after).tocsr())
        w = np.full(n, h)
        if not per:
            w[0] = w[-1] = h / 2
        weights.append(w)
    weight = weights[0]
    for w in weights[1:]:
        weight = np.multiply.outer(weight, w)
    return NodeOperators(grads, seconds, np.asarray(weight).ravel())


# ------------------------------------------------------------------ fields

@dataclass
class Field:
    grid: GridSpec
    kind: str
    values: np.ndarray
    fixed: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in COMPONENTS:
            raise InvalidInputError(f"unknown field kind {self.kind!r}")
        ncomp = COMPONENTS[self.kind]
        v = np.asarray(self.values, dtype=float)
        want = self.grid.node_shape + ((ncomp,) if self.kind != "scalar" else ())
        if v.shape != want:
            v = v.reshape(want)
        self.values = v
        if self.fixed is None:
            self.fixed = self.grid.boundary_mask()
        self.fixed = np.asarray(self.fixed, dtype=bool).reshape(self.grid.node_shape)

    @classmethod
    def from_function(cls, grid: GridSpec, kind: str, func, fixed=None) -> "Field":
        """Sample ``func`` at node coordinates (an ``(n_nodes, dim)`` array)."""
        vals = np.asarray(func(grid.node_coords()), dtype=float)
        return cls(grid, kind, vals, fixed)

    def copy(self) -> "Field":
        return Field(self.grid, self.kind, self.values.copy(), self.fixed.copy())

    def flat(self) -> np.ndarray:
        return self.values.reshape(self.grid.n_nodes, -1)

    def with_flat(self, u) -> "Field":
        return Field(self.grid, self.kind, np.asarray(u).reshape(self.values.shape), self.fixed.copy())

    def q_matrices(self) -> np.ndarray:
        if self.kind != "qtensor":
            raise InvalidInputError("field does not hold Q-tensors")
        return q_matrix(self.values)

    @property
    def constraint(self) -> Optional[str]:
        if self.kind == "director":
            return "circle" if self.grid.geometry == "spherical" else "sphere"
        return None


def shift_periodic(f: Field, axis: int, steps: int = 1) -> Field:
    if f.grid.bc[axis] != "periodic":
        raise InvalidInputError("can only shift along a periodic axis")
    return Field(f.grid, f.kind, np.roll(f.values, steps, axis=axis), np.roll(f.fixed, steps, axis=axis))


# ------------------------------------------------------------------ node derivatives

def node_gradient(f: Field) -> np.ndarray:
    """Nodal gradient ``(node_shape, comps..., 3)`` in physical coordinates.

    Second-order central differences inside, second-order one-sided
    differences at Dirichlet ends, wrap-around on periodic axes.
    """
    v = f.values if f.kind != "scalar" else f.values[..., None]
    out = np.zeros(v.shape + (3,))
    for k in range(f.grid.dim):
        if f.grid.bc[k] == "periodic":
            h = f.grid.lengths[k] / f.grid.cells[k]
            d = (np.roll(v, -1, axis=k) - np.roll(v, 1, axis=k)) / (2 * h)
        else:
            d = np.gradient(v, f.grid.axis_coords(k), axis=k, edge_order=2)
        out[..., f.grid.axes[k]] = d
    return out[..., 0, :] if f.kind == "scalar" else out


def gradient_at(f: Field, node) -> np.ndarray:
    return node_gradient(f)[tuple(node)]


def node_hessian(f: Field) -> np.ndarray:
    """Nodal Hessian ``(node_shape, 3, 3)`` of a scalar field."""
    if f.kind != "scalar":
        raise InvalidInputError("Hessians are defined for scalar fields")
    ops = f.grid.node_ops
    u = f.values.ravel()
    out = np.zeros((f.grid.n_nodes, 3, 3))
    for k in range(f.grid.dim):
        ak = f.grid.axes[k]
        out[:, ak, ak] = ops.second[k] @ u
        for l in range(k + 1, f.grid.dim):
            al = f.grid.axes[l]
            out[:, ak, al] = out[:, al, ak] = ops.grad[k] @ (ops.grad[l] @ u)
    return out.reshape(f.grid.node_shape + (3, 3))


def hessian_at(f: Field, node) -> np.ndarray:
    return node_hessian(f)[tuple(node)]


# ------------------------------------------------------------------ energies

@dataclass
class EnergyResult:
    total: float
    bulk: float
    elastic: float
    surface: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


_GL_CACHE = {}


def _sphere_rule(nq: int = 16):
    if nq not in _GL_CACHE:
        mu, w = np.polynomial.legendre.leggauss(nq)
        xhat = np.stack([np.sqrt(1 - mu ** 2), np.zeros_like(mu), mu], axis=-1)
        _GL_CACHE[nq] = (xhat, w / 2.0)
    return _GL_CACHE[nq]


_J0 = np.diag([1.0, 1.0, 0.0])
_J1 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_E33 = np.diag([0.0, 0.0, 1.0])


def _radial_density(model: EnergyModel, geometry: str, m, dm, r):
    """Bulk/elastic densities and (d/dm, d/dm') of a radially reduced director."""
    if geometry == "cylindrical":
        G = np.zeros(m.shape + (3,))
        G[:, :, 0] = dm
        G[:, 0, 1] = -m[:, 1] / r
        G[:, 1, 1] = m[:, 0] / r
        bulk, el, dn, dG = model.density_grad(m, G)
        dmv = dn.copy()
        dmv[:, 0] += dG[:, 1, 1] / r
        dmv[:, 1] -= dG[:, 0, 1] / r
        return bulk, el, dmv, dG[:, :, 0]
    xhat, wq = _sphere_rule()
    R = m[:, 0, None, None] * _J0 + m[:, 1, None, None] * _J1 + _E33
    dR = dm[:, 0, None, None] * _J0 + dm[:, 1, None, None] * _J1
    proj = np.eye(3) - xhat[:, :, None] * xhat[:, None, :]
    n = np.einsum("cij,qj->cqi", R, xhat)
    G = (np.einsum("cij,qjk->cqik", R, proj) / r[:, None, None, None]
         + np.einsum("cij,qj,qk->cqik", dR, xhat, xhat))
    bulk, el, dn, dG = model.density_grad(n, G)
    bulk, el = bulk @ wq, el @ wq
    dmv = np.zeros_like(m)
    ddm = np.zeros_like(m)
    for a, J in enumerate((_J0, _J1)):
        Jx = xhat @ J.T
        dmv[:, a] = (np.einsum("cqi,qi->cq", dn, Jx)
                     + np.einsum("cqik,qik->cq", dG, np.einsum("ij,qjk->qik", J, proj)) / r[:, None]) @ wq
        ddm[:, a] = np.einsum("cqik,qi,qk->cq", dG, Jx, xhat) @ wq
    return bulk, el, dmv, ddm


def _lift_nodes(u, s):
    """Node directors -> (five Q components, Jacobian d q_a / d n_i)."""
    n0, n1, n2 = u[:, 0], u[:, 1], u[:, 2]
    q = s * np.stack([n0 * n0 - 1 / 3, n1 * n1 - 1 / 3, n0 * n1, n0 * n2, n1 * n2], axis=-1)
    z = np.zeros_like(n0)
    jac = s * np.stack([
        np.stack([2 * n0, z, z], -1),
        np.stack([z, 2 * n1, z], -1),
        np.stack([n1, n0, z], -1),
        np.stack([n2, z, n0], -1),
        np.stack([z, n2, n1], -1),
    ], axis=1)
    return q, jac


def energy_and_gradient(grid: GridSpec, kind: str, model: EnergyModel, u: np.ndarray,
                        ops: Optional[CellOperators] = None, with_grad: bool = True):
    """Discrete energy of flat node values ``u`` (n_nodes, comps) and its gradient."""
    u = np.asarray(u, float).reshape(grid.n_nodes, -1)
    if isinstance(model, UniaxialLift):
        check_compatible(model, kind)
        if model.interpolation == "geodesic":
            return _geodesic_energy(grid, model, u, with_grad)
        q, jac = _lift_nodes(u, model.s)
        res, gq = energy_and_gradient(grid, "qtensor", model.inner, q, ops, with_grad)
        return res, (np.einsum("na,nai->ni", gq, jac) if with_grad else None)
    check_compatible(model, kind)
    if model.needs_hessian:
        return _node_energy(grid, model, u, with_grad)
    ops = ops or grid.cell_ops
    val = ops.avg @ u
    dif = np.stack([d @ u for d in ops.diff], axis=-1)  # (cells, comps, dim)

    if grid.geometry != "cartesian":
        if kind != "director":
            raise InvalidInputError("radial reductions are implemented for director fields")
        r = ops.center[:, 0]
        bulk, el, dv, dd = _radial_density(model, grid.geometry, val, dif[:, :, 0], r)
        dgrid = dd[:, :, None]
    else:
        g = np.zeros(val.shape + (3,))
        g[:, :, list(grid.axes)] = dif
        if kind == "qtensor":
            Q = q_matrix(val)
            H = np.einsum("caj,aik->cikj", g, BASIS)
            bulk, el, dQ, dH = model.density_grad(Q, H)
            dv = q_vector_grad(dQ)
            dg = np.einsum("cikj,aik->caj", dH, BASIS)
        elif kind == "scalar":
            bulk, el, dv, dg = model.density_grad(val[:, 0], g[:, 0, :])
            dv, dg = dv[:, None], dg[:, None, :]
        else:
            bulk, el, dv, dg = model.density_grad(val, g)
        dgrid = dg[:, :, list(grid.axes)]

    w = ops.weight
    res = EnergyResult(float(w @ (bulk + el)), float(w @ bulk), float(w @ el))
    if not with_grad:
        return res, None
    grad = ops.avg.T @ (w[:, None] * dv)
    for k, d in enumerate(ops.diff):
        grad = grad + d.T @ (w[:, None] * dgrid[:, :, k])
    return res, grad


def _geodesic_energy(grid: GridSpec, model: UniaxialLift, u, with_grad):
    """Lifted one-constant energy of a director rotating uniformly inside each cell.

    Per cell of width ``h`` the elastic term is ``L3 * 2 s^2 phi^2 / h`` with
    ``phi`` the angle between the end directors taken up to sign.
    """
    if grid.dim != 1 or grid.geometry != "cartesian" or grid.bc[0] != "dirichlet":
        raise InvalidInputError("geodesic interpolation is implemented for 1D Dirichlet cartesian grids")
    h = grid.axis_widths(0)
    a, b = u[:-1], u[1:]
    v = np.cross(a, b)
    y = np.linalg.norm(v, axis=1)
    dot = np.einsum("ci,ci->c", a, b)
    sig = np.where(dot < 0, -1.0, 1.0)
    x = np.abs(dot)
    phi = np.arctan2(y, x)
    K = model.inner.L.L3 * 2.0 * model.s ** 2 / h
    el = float(np.sum(K * phi ** 2))
    bulk = 0.0
    inner = model.inner
    if inner.bulk is not None and inner.bulk_scale:
        Q = model.s * (np.diag([1.0, 0.0, 0.0]) - np.eye(3) / 3)
        bulk = inner.bulk_scale * float(en.ldg_bulk(Q, inner.bulk)) * float(h.sum())
    res = EnergyResult(bulk + el, bulk, el)
    if not with_grad:
        return res, None
    r2 = x ** 2 + y ** 2
    # phi / |v|, finite as v -> 0
    ratio = np.where(y > 1e-300, phi / np.maximum(y, 1e-300), 1.0 / np.maximum(x, 1e-300))
    c = (2 * K / r2)[:, None]
    da = c * ((ratio * x)[:, None] * np.cross(b, v) - (phi * y * sig)[:, None] * b)
    db = c * ((ratio * x)[:, None] * np.cross(v, a) - (phi * y * sig)[:, None] * a)
    grad = np.zeros_like(u)
    grad[:-1] += da
    grad[1:] += db
    return res, grad


def _node_energy(grid: GridSpec, model: EnergyModel, u, with_grad):
    ops = grid.node_ops
    rho = u[:, 0]
    hess = np.zeros((grid.n_nodes, 3, 3))
    firsts = [g @ rho for g in ops.grad]
    for k in range(grid.dim):
        ak = grid.axes[k]
        hess[:, ak, ak] = ops.second[k] @ rho
        for l in range(k + 1, grid.dim):
            al = grid.axes[l]
            hess[:, ak, al] = hess[:, al, ak] = ops.grad[k] @ firsts[l]
    bulk, el, drho, dhess = model.density_grad(rho, hess)
    w = ops.weight
    res = EnergyResult(float(w @ (bulk + el)), float(w @ bulk), float(w @ el))
    if not with_grad:
        return res, None
    wd = w[:, None, None] * dhess
    grad = w * drho
    for k in range(grid.dim):
        ak = grid.axes[k]
        grad = grad + ops.second[k].T @ wd[:, ak, ak]
        for l in range(k + 1, grid.dim):
            al = grid.axes[l]
            grad = grad + ops.grad[l].T @ (ops.grad[k].T @ (wd[:, ak, al] + wd[:, al, ak]))
    return res, grad[:, None]


def total_energy(f: Field, model: EnergyModel) -> EnergyResult:
    """Quadrature of the model density over the grid, split into bulk and elastic parts."""
    return energy_and_gradient(f.grid, f.kind, model, f.flat(), with_grad=False)[0]


# ------------------------------------------------------------------ serialization

def write_field(f: Field, stem, model: Optional[EnergyModel] = None, extra: Optional[dict] = None):
    """Write ``<stem>.csv`` (node coordinates + components) and ``<stem>.json`` (header)."""
    stem = Path(stem)
    coords = f.grid.node_coords()
    names = [f"x{k}" for k in range(f.grid.dim)] + ["fixed"] + COMPONENT_NAMES[f.kind]
    vals = f.flat()
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(f.grid.n_nodes):
            w.writerow([repr(float(c)) for c in coords[i]] + [int(f.fixed.ravel()[i])]
                       + [repr(float(v)) for v in vals[i]])
    header = {"grid": f.grid.to_dict(), "kind": f.kind, "columns": names}
    if model is not None:
        header["model"] = model.describe()
    if extra:
        header.update(extra)
    stem.with_suffix(".json").write_text(json.dumps(header, sort_keys=True, indent=2))


def read_field(stem) -> Field:
    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    grid = GridSpec.from_dict(header["grid"])
    kind = header["kind"]
    with open(stem.with_suffix(".csv")) as fh:
        rows = list(csv.reader(fh))[1:]
    data = np.array([[float(x) for x in r] for r in rows])
    fixed = data[:, grid.dim].astype(bool)
    return Field(grid, kind, data[:, grid.dim + 1:], fixed)
