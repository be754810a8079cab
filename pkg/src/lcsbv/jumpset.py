"""Discrete free-discontinuity fields: cut faces, one-sided traces, surface energy.

Two representations are provided.

* :class:`SbvField` -- a node field on any Cartesian grid plus a set of cut
  grid edges.  Each cut edge is crossed by one dual face with an
  axis-aligned normal; the traces are the node values at the two ends.
* :class:`SbvProfile` -- a 1D profile split into segments at continuous jump
  positions.  Each segment carries its own node array, so the energy is a
  continuous function of the jump coordinates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import energy as en
from .errors import InvalidInputError
from .grid import (EnergyResult, Field, GridSpec, build_cell_operators, energy_and_gradient,
                   total_energy)
from .models import EnergyModel, UniaxialLift
from .qtensor import IDENTITY, q_matrix, uniaxial_matrix

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class JumpSet:
    """Jump positions along a 1D profile, or cut faces ``(axis, lower-node index)``."""
    positions: tuple = ()
    faces: frozenset = frozenset()

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        if any(b < a for a, b in zip(pos, pos[1:])):
            raise InvalidInputError("jump positions must be sorted")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "faces", frozenset((int(a), tuple(int(i) for i in idx))
                                                    for a, idx in self.faces))

    def validate(self, length: float):
        for p in self.positions:
            if not 0.0 <= p <= length:
                raise InvalidInputError(f"jump position {p} outside [0, {length}]")
        if len(set(self.positions)) != len(self.positions):
            raise InvalidInputError("duplicate jump positions")

    def at_boundary(self, length: float, tol: float = 1e-12) -> bool:
        return any(p <= tol * length or p >= length * (1 - tol) for p in self.positions)

    def to_json(self) -> str:
        if self.faces:
            faces = [{"axis": a, "index": list(i), "normal": 1} for a, i in sorted(self.faces)]
            return json.dumps({"faces": faces}, sort_keys=True)
        return json.dumps({"positions": list(self.positions)}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "JumpSet":
        d = json.loads(text)
        if "faces" in d:
            return cls(faces=frozenset((f["axis"], tuple(f["index"])) for f in d["faces"]))
        return cls(positions=tuple(d.get("positions", ())))


def lift_order(model: EnergyModel, default: float = 1.0) -> float:
    return model.s if isinstance(model, UniaxialLift) else default


def values_to_q(kind: str, values, s: float = 1.0) -> np.ndarray:
    """Q matrices of node values of any non-scalar field kind."""
    v = np.asarray(values, float)
    if kind == "qtensor":
        return q_matrix(v)
    if kind == "director":
        return uniaxial_matrix(np.full(v.shape[:-1], s), v)
    if kind == "ericksen":
        return uniaxial_matrix(v[..., 0], v[..., 1:])
    raise InvalidInputError("jump energies need a director, Q-tensor or Ericksen field")


# ------------------------------------------------------------------ grid-based SBV fields

@dataclass
class SbvField:
    field: Field
    jumps: JumpSet = field(default_factory=JumpSet)

    def __post_init__(self):
        shape = self.field.grid.node_shape
        for axis, idx in self.jumps.faces:
            if not 0 <= axis < len(shape) or len(idx) != len(shape):
                raise InvalidInputError(f"face {(axis, idx)} does not fit the grid")
            if any(not 0 <= i < n for i, n in zip(idx, shape)):
                raise InvalidInputError(f"face {(axis, idx)} outside the grid")
            if self.field.grid.bc[axis] == "dirichlet" and idx[axis] >= shape[axis] - 1:
                raise InvalidInputError(f"face {(axis, idx)} has no node above it")

    def traces(self):
        """``(face, value below, value above)`` for every cut face."""
        vals = self.field.values
        shape = self.field.grid.node_shape
        out = []
        for axis, idx in sorted(self.jumps.faces):
            hi = list(idx)
            hi[axis] = (hi[axis] + 1) % shape[axis]
            out.append(((axis, idx), vals[tuple(idx)], vals[tuple(hi)]))
        return out


def dual_widths(grid: GridSpec, k: int) -> np.ndarray:
    w = grid.axis_widths(k)
    if grid.bc[k] == "periodic":
        return 0.5 * (w + np.roll(w, 1))
    out = np.zeros(len(w) + 1)
    out[:-1] += w / 2
    out[1:] += w / 2
    return out


def face_area(grid: GridSpec, axis: int, idx) -> float:
    area = 1.0
    for j in range(grid.dim):
        if j != axis:
            area *= dual_widths(grid, j)[idx[j]]
    return float(area)


def surface_energy(f: SbvField, J: en.JumpEnergyParams, s: float = 1.0) -> float:
    grid = f.field.grid
    total = 0.0
    for (axis, idx), lo, hi in f.traces():
        nu = np.zeros(3)
        nu[grid.axes[axis]] = 1.0
        Qm, Qp = values_to_q(f.field.kind, np.stack([lo, hi]), s)
        total += float(en.jump_energy(Qp, Qm, nu, J)) * face_area(grid, axis, idx)
    return total


def sbv_total_energy(f, model: EnergyModel, J: en.JumpEnergyParams) -> EnergyResult:
    """Bulk quadrature that never differences across cuts, plus the jump energy."""
    if isinstance(f, SbvProfile):
        return f.energy(model, J)
    grid = f.field.grid
    if grid.geometry != "cartesian":
        raise InvalidInputError("cut faces are supported on Cartesian grids")
    ops = build_cell_operators(grid, set(f.jumps.faces)) if f.jumps.faces else None
    res, _ = energy_and_gradient(grid, f.field.kind, model, f.field.flat(), ops=ops, with_grad=False)
    surf = surface_energy(f, J, lift_order(model)) if f.jumps.faces else 0.0
    return EnergyResult(res.total + surf, res.bulk, res.elastic, surf)


# ------------------------------------------------------------------ 1D profiles

@dataclass
class SbvProfile:
    """A 1D profile on ``[0, length]`` (embedded along ``x3``) with jumps.

    ``segments[i]`` holds the node values on ``[x_i, x_{i+1}]`` where the
    breakpoints are ``0, *jumps.positions, length``.  ``left`` and ``right``
    are the Dirichlet values; the profile may jump onto them at the plates.
    """
    length: float
    kind: str
    segments: list
    jumps: JumpSet
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidInputError("profile length must be positive")
        self.jumps.validate(self.length)
        if len(self.segments) != len(self.jumps.positions) + 1:
            raise InvalidInputError("need exactly one more segment than jumps")
        self.segments = [np.array(s, float) for s in self.segments]
        if any(len(s) < 3 for s in self.segments):
            raise InvalidInputError("every segment needs at least 3 nodes")
        self.left, self.right = np.asarray(self.left, float), np.asarray(self.right, float)

    @classmethod
    def from_function(cls, length, kind, func, jumps=(), nodes: int = 201,
                      left=None, right=None) -> "SbvProfile":
        """Sample ``func(x)`` on segments sharing ``nodes`` in proportion to length (min 3 each)."""
        bps = (0.0, *jumps, length)
        segs = []
        nseg = len(bps) - 1
        for a, b in zip(bps, bps[1:]):
            n = max(3, int(round((nodes - 1) * (b - a) / length)) + 1) if nseg > 1 else nodes
            x = np.linspace(a, b, n)
            v = np.asarray(func(x), float)
            segs.append(v)
        left = func(np.array([0.0]))[0] if left is None else left
        right = func(np.array([float(length)]))[-1] if right is None else right
        return cls(length, kind, segs, JumpSet(positions=tuple(jumps)), left, right)

    @classmethod
    def piecewise_constant(cls, length, kind, values, jumps, nodes: int = 201,
                           left=None, right=None) -> "SbvProfile":
        """One constant value per segment; plate values default to the end segments."""
        values = [np.asarray(v, float) for v in values]
        prof = cls.from_function(length, kind, lambda x: np.zeros((len(x), values[0].size)),
                                 jumps, nodes, values[0] if left is None else left,
                                 values[-1] if right is None else right)
        prof.segments = [np.tile(v, (len(seg), 1)) for v, seg in zip(values, prof.segments)]
        return prof

    @property
    def breakpoints(self):
        return (0.0, *self.jumps.positions, self.length)

    def segment_grid(self, i: int) -> Optional[GridSpec]:
        a, b = self.breakpoints[i], self.breakpoints[i + 1]
        if b - a <= 1e-14 * self.length:
            return None
        return GridSpec((len(self.segments[i]) - 1,), (b - a,))

    def with_jumps(self, positions) -> "SbvProfile":
        return SbvProfile(self.length, self.kind, [s.copy() for s in self.segments],
                          JumpSet(positions=tuple(positions)), self.left, self.right)

    def copy(self) -> "SbvProfile":
        return self.with_jumps(self.jumps.positions)

    def trace_pairs(self):
        """``(position, value below, value above)`` for every potential jump, plates included."""
        live = [i for i in range(len(self.segments)) if self.segment_grid(i) is not None]
        pairs = []
        prev_v = self.left
        for i in live:
            pairs.append((self.breakpoints[i], prev_v, self.segments[i][0]))
            prev_v = self.segments[i][-1]
        pairs.append((self.length, prev_v, self.right))
        return pairs

    def sample(self, x) -> np.ndarray:
        """Piecewise-linear values at ``x``; at a jump the upper segment wins."""
        x = np.atleast_1d(np.asarray(x, float))
        out = np.zeros((len(x),) + self.segments[0].shape[1:])
        bps = self.breakpoints
        for i, seg in enumerate(self.segments):
            a, b = bps[i], bps[i + 1]
            if b <= a:
                continue
            sel = (x >= a) & (x <= b)
            xs = np.linspace(a, b, len(seg))
            for c in range(seg.shape[1]):
                out[sel, c] = np.interp(x[sel], xs, seg[:, c])
        return out

    def energy(self, model: EnergyModel, J: en.JumpEnergyParams) -> EnergyResult:
        bulk = elastic = 0.0
        for i, seg in enumerate(self.segments):
            g = self.segment_grid(i)
            if g is not None:
                r, _ = energy_and_gradient(g, self.kind, model, seg, with_grad=False)
                bulk += r.bulk
                elastic += r.elastic
        s = lift_order(model)
        surf = 0.0
        for _, lo, hi in self.trace_pairs():
            Qm, Qp = values_to_q(self.kind, np.stack([lo, hi]), s)
            surf += float(en.jump_energy(Qp, Qm, E3, J))
        return EnergyResult(bulk + elastic + surf, bulk, elastic, surf)


def slab_boundary_q(s1: float, s2: float) -> tuple:
    """Planar (``e1``) and homeotropic (``e3``) plate tensors."""
    e1, e3 = np.eye(3)[0], np.eye(3)[2]
    return s1 * (np.outer(e1, e1) - IDENTITY / 3), s2 * (np.outer(e3, e3) - IDENTITY / 3)


def q_hat_energy(s: float, J: en.JumpEnergyParams) -> float:
    """Energy of the piecewise-constant profile jumping once between the plate tensors."""
    Q0, Q1 = slab_boundary_q(s, s)
    return float(en.jump_energy(Q1, Q0, E3, J))


# ------------------------------------------------------------------ line-defect cores

def core_excision_energy(line_defect_field: Field, core_radius: float, model: EnergyModel,
                         J: en.JumpEnergyParams, core_q=None, s: Optional[float] = None) -> EnergyResult:
    """Energy of a line defect whose core ``r < core_radius`` is replaced by a constant.

    ``line_defect_field`` is a director field on a cylindrical radial grid
    covering ``core_radius``.  Outside the core the field is resampled onto
    a grid starting at ``core_radius``; inside, ``Q = core_q`` (default
    ``s (e_z e_z - I/3)``) contributes only bulk energy; the wall at
    ``r = core_radius`` carries the jump energy.  Energies are per unit height.
    """
    grid = line_defect_field.grid
    if grid.geometry != "cylindrical" or line_defect_field.kind != "director":
        raise InvalidInputError("core excision needs a director field on a cylindrical grid")
    r_nodes = grid.axis_coords(0)
    r_in, r_out = r_nodes[0], r_nodes[-1]
    if not r_in <= core_radius < r_out:
        raise InvalidInputError("core radius must lie inside the grid's radial range")
    cell = min(np.searchsorted(r_nodes, core_radius, side="right") - 1, grid.cells[0] - 1)
    if not core_radius > grid.axis_widths(0)[cell]:
        raise InvalidInputError("core radius must exceed the local grid spacing")
    s = lift_order(model) if s is None else s
    if core_q is None:
        core_q = s * (np.outer(E3, E3) - IDENTITY / 3)

    sub = GridSpec(grid.cells, (r_out - core_radius,), geometry="cylindrical",
                   origin=(core_radius,), spacing=grid.spacing)
    vals = line_defect_field.flat()
    r_new = sub.axis_coords(0)
    resampled = np.stack([np.interp(r_new, r_nodes, vals[:, c]) for c in range(3)], axis=-1)
    resampled /= np.linalg.norm(resampled, axis=-1, keepdims=True)
    outer = total_energy(Field(sub, "director", resampled), model)

    core_bulk = 0.0
    inner = model.inner if isinstance(model, UniaxialLift) else model
    bulk_params = getattr(inner, "bulk", None)
    if bulk_params is not None:
        core_bulk = float(en.ldg_bulk(core_q, bulk_params)) * getattr(inner, "bulk_scale", 1.0) \
            * math.pi * core_radius ** 2

    wall_q = uniaxial_matrix(s, resampled[0])  # local frame; all jump invariants are frame-free
    nu = np.array([1.0, 0.0, 0.0])
    wall = float(en.jump_energy(wall_q, core_q, nu, J)) * 2 * math.pi * core_radius
    return EnergyResult(outer.total + core_bulk + wall, outer.bulk + core_bulk, outer.elastic, wall)
