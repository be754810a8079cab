"""Orientability of sampled line fields and construction of signed lifts.

A line field gives a direction up to sign at each node.  Adjacent unmasked
nodes form a graph whose edges carry the bit ``[n_i . n_j < 0]``; a sign
assignment ``kappa`` is a lift if every edge satisfies
``kappa_i kappa_j n_i . n_j > 0``.  On 2D grids an obstruction lives on the
faces of the planar graph (plaquettes, masked holes, the exterior) whose
bits sum to an odd number, and a cheapest set of cut faces is a minimum
T-join of the odd faces in the dual graph.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidInputError, UnderResolvedError
from .grid import Field, GridSpec
from .jumpset import JumpSet, face_area
from .qtensor import normalize, spectral

ANGLE_TOL = 0.1
S_TOL = 1e-3
EXACT_MATCHING_MAX = 12


@dataclass
class LineField:
    grid: GridSpec
    directions: np.ndarray          # (n_nodes, 3), sign irrelevant
    order: Optional[np.ndarray] = None
    s_tol: float = S_TOL
    angle_tol: float = ANGLE_TOL

    def __post_init__(self):
        d = np.asarray(self.directions, float).reshape(self.grid.n_nodes, 3)
        nrm = np.linalg.norm(d, axis=1)
        if np.any(np.abs(nrm - 1) > 1e-8):
            raise InvalidInputError("line-field directions must be unit vectors")
        self.directions = d
        if self.order is not None:
            self.order = np.asarray(self.order, float).reshape(self.grid.n_nodes)

    @classmethod
    def from_angle(cls, grid: GridSpec, phi, mask=None, **kw) -> "LineField":
        """In-plane field ``(cos phi, sin phi, 0)``; ``mask`` marks melted nodes."""
        phi = np.asarray(phi, float).ravel()
        d = np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)
        order = None if mask is None else np.where(np.asarray(mask).ravel(), 0.0, 1.0)
        return cls(grid, d, order, **kw)

    @classmethod
    def from_field(cls, f: Field, **kw) -> "LineField":
        """Directors as they are, or the leading eigenvector and ``s = 3 lambda_max / 2`` of Q."""
        if f.kind == "director":
            return cls(f.grid, normalize(f.flat()), None, **kw)
        if f.kind == "ericksen":
            v = f.flat()
            return cls(f.grid, normalize(v[:, 1:]), v[:, 0], **kw)
        if f.kind == "qtensor":
            mats = f.q_matrices().reshape(-1, 3, 3)
            dirs, order = [], []
            for m in mats:
                lam, vec = spectral(m)
                dirs.append(vec[:, 0])
                order.append(1.5 * lam[0])
            return cls(f.grid, np.array(dirs), np.array(order), **kw)
        raise InvalidInputError("scalar fields carry no line field")

    @property
    def active(self) -> np.ndarray:
        if self.order is None:
            return np.ones(self.grid.n_nodes, dtype=bool)
        return np.abs(self.order) >= self.s_tol

    def with_s_tol(self, s_tol: float) -> "LineField":
        return LineField(self.grid, self.directions, self.order, s_tol, self.angle_tol)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "directions": self.directions.tolist(),
                "order": None if self.order is None else self.order.tolist(),
                "s_tol": self.s_tol, "angle_tol": self.angle_tol}

    @classmethod
    def from_dict(cls, d: dict) -> "LineField":
        return cls(GridSpec.from_dict(d["grid"]), np.asarray(d["directions"], float),
                   None if d.get("order") is None else np.asarray(d["order"], float),
                   d.get("s_tol", S_TOL), d.get("angle_tol", ANGLE_TOL))


def annulus_line_field(nodes: int = 40, winding: float = 0.5, r_in: float = 0.25,
                       r_out: float = 1.0) -> LineField:
    """``phi = winding * theta`` on a square grid, melted outside ``r_in <= r <= r_out``."""
    grid = GridSpec((nodes - 1, nodes - 1), (2.0, 2.0), origin=(-1.0, -1.0))
    xy = grid.node_coords()
    r = np.hypot(xy[:, 0], xy[:, 1])
    theta = np.arctan2(xy[:, 1], xy[:, 0])
    return LineField.from_angle(grid, winding * theta, (r < r_in) | (r > r_out))


@dataclass
class OrientReport:
    orientable: bool
    signs: np.ndarray                      # +1/-1 per node, 0 on masked nodes
    frustrated: list = field(default_factory=list)
    odd_plaquettes: list = field(default_factory=list)
    odd_regions: int = 0
    cut_faces: list = field(default_factory=list)
    cut_area: float = 0.0

    def jumpset(self) -> JumpSet:
        return JumpSet(faces=frozenset(self.cut_faces))

    def oriented(self, f: LineField) -> Field:
        return Field(f.grid, "director", f.directions * np.where(self.signs == 0, 1, self.signs)[:, None])

    def to_dict(self) -> dict:
        return {
            "orientable": bool(self.orientable),
            "signs": [int(v) for v in self.signs],
            "frustrated_edges": [_edge_json(e) for e in self.frustrated],
            "odd_plaquettes": [list(p) for p in self.odd_plaquettes],
            "odd_regions": int(self.odd_regions),
            "cut_faces": [_edge_json(e) for e in self.cut_faces],
            "cut_area": float(self.cut_area),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _edge_json(e):
    return {"axis": int(e[0]), "index": [int(i) for i in e[1]]}


# ------------------------------------------------------------------ graph

def grid_edges(grid: GridSpec):
    """Every nearest-neighbour edge as ``((axis, lower index), flat a, flat b)``."""
    shape = grid.node_shape
    out = []
    for k in range(grid.dim):
        for idx in np.ndindex(*shape):
            if grid.bc[k] == "dirichlet" and idx[k] == shape[k] - 1:
                continue
            hi = list(idx)
            hi[k] = (hi[k] + 1) % shape[k]
            a = int(np.ravel_multi_index(idx, shape))
            b = int(np.ravel_multi_index(tuple(hi), shape))
            if a != b:
                out.append(((k, idx), a, b))
    return out


def _edge_bits(f: LineField):
    active = f.active
    edges, bits = [], []
    for key, a, b in grid_edges(f.grid):
        if not (active[a] and active[b]):
            continue
        dot = float(f.directions[a] @ f.directions[b])
        if abs(dot) <= f.angle_tol:
            raise UnderResolvedError(key, dot)
        edges.append((key, a, b))
        bits.append(dot < 0)
    return edges, np.array(bits, dtype=bool)


def _propagate(n_nodes, active, edges, bits, removed=frozenset()):
    """BFS signs; returns (signs, frustrated edge keys)."""
    adj = [[] for _ in range(n_nodes)]
    for (key, a, b), bit in zip(edges, bits):
        if key in removed:
            continue
        adj[a].append((b, bit))
        adj[b].append((a, bit))
    signs = np.zeros(n_nodes, dtype=int)
    for root in range(n_nodes):
        if not active[root] or signs[root]:
            continue
        signs[root] = 1
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j, bit in adj[i]:
                if not signs[j]:
                    signs[j] = -signs[i] if bit else signs[i]
                    queue.append(j)
    frustrated = [key for (key, a, b), bit in zip(edges, bits)
                  if key not in removed and (signs[a] * signs[b] * (-1 if bit else 1)) < 0]
    return signs, frustrated


def winding_parity(f: LineField, plaquette) -> str:
    """``'odd'`` if the sign product around the cell at ``plaquette`` is negative."""
    grid = f.grid
    if grid.dim != 2:
        raise InvalidInputError("plaquettes are defined on 2D grids")
    shape = grid.node_shape
    i, j = (int(v) for v in plaquette)
    corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
    corners = [(a % shape[0], b % shape[1]) for a, b in corners]
    if not (0 <= i < grid.cells[0] and 0 <= j < grid.cells[1]):
        raise InvalidInputError(f"plaquette {plaquette} outside the grid")
    flat = [int(np.ravel_multi_index(c, shape)) for c in corners]
    if not all(f.active[c] for c in flat):
        raise InvalidInputError(f"plaquette {plaquette} touches a masked node")
    odd = False
    for a, b, key in zip(flat, flat[1:] + flat[:1], [(0, (i, j)), (1, (i + 1, j)), (0, (i, j + 1)), (1, (i, j))]):
        dot = float(f.directions[a] @ f.directions[b])
        if abs(dot) <= f.angle_tol:
            raise UnderResolvedError(key, dot)
        odd ^= dot < 0
    return "odd" if odd else "even"


# ------------------------------------------------------------------ faces of the planar graph

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _side_cells(grid: GridSpec, key):
    """Flat ids of the two faces beside edge ``key``; ``n_cells`` is the exterior."""
    k, idx = key
    m = 1 - k
    out = []
    for shift in (0, -1):
        c = list(idx)
        c[m] += shift
        if grid.bc[m] == "periodic":
            c[m] %= grid.cells[m]
        if grid.bc[k] == "periodic":
            c[k] %= grid.cells[k]
        if all(0 <= c[t] < grid.cells[t] for t in range(2)):
            out.append(int(np.ravel_multi_index(tuple(c), grid.cells)))
        else:
            out.append(grid.n_cells)
    return out


def _min_perfect_matching(dist, nodes):
    """Exact bitmask DP matching on ``nodes`` (even count) under ``dist``."""
    n = len(nodes)
    full = (1 << n) - 1
    best = {0: (0.0, ())}
    for mask in range(1 << n):
        if mask not in best or mask == full:
            continue
        cost, pairs = best[mask]
        i = next(t for t in range(n) if not mask >> t & 1)
        for j in range(i + 1, n):
            if mask >> j & 1:
                continue
            nm = mask | (1 << i) | (1 << j)
            c = cost + dist[nodes[i], nodes[j]]
            if nm not in best or c < best[nm][0]:
                best[nm] = (c, pairs + ((nodes[i], nodes[j]),))
    return list(best[full][1])


def _greedy_matching(dist, nodes):
    left = list(nodes)
    pairs = []
    while left:
        i, j = min(itertools.combinations(left, 2), key=lambda p: dist[p[0], p[1]])
        pairs.append((i, j))
        left.remove(i)
        left.remove(j)
    return pairs


def _select_cuts(f: LineField, edges, bits):
    grid = f.grid
    nf = grid.n_cells + 1
    uf = _UnionFind(nf)
    present = {key for key, _, _ in edges}
    for key, _, _ in grid_edges(grid):
        if key not in present:
            a, b = _side_cells(grid, key)
            uf.union(a, b)
    parity = np.zeros(nf, dtype=bool)
    best = {}
    for (key, a, b), bit in zip(edges, bits):
        u, v = (uf.find(c) for c in _side_cells(grid, key))
        if u == v:
            continue
        parity[u] ^= bit
        parity[v] ^= bit
        w = face_area(grid, key[0], key[1])
        pair = (min(u, v), max(u, v))
        if pair not in best or w < best[pair][0]:
            best[pair] = (w, key)
    odd_faces = [int(v) for v in np.flatnonzero(parity)]
    sizes = np.bincount([uf.find(x) for x in range(nf)], minlength=nf)
    odd_cells = [tuple(int(i) for i in np.unravel_index(c, grid.cells))
                 for c in odd_faces if c < grid.n_cells and sizes[c] == 1]
    if not odd_faces:
        return [], odd_cells, 0
    rows = [p[0] for p in best] + [p[1] for p in best]
    cols = [p[1] for p in best] + [p[0] for p in best]
    wts = [best[p][0] for p in best] * 2
    graph = csr_matrix((wts, (rows, cols)), shape=(nf, nf))
    dist, pred = dijkstra(graph, directed=False, indices=odd_faces, return_predecessors=True)
    dmat = dist[:, odd_faces]
    if not np.all(np.isfinite(dmat)):
        raise AssertionError("odd faces in disconnected dual components")
    order = list(range(len(odd_faces)))
    if len(order) <= EXACT_MATCHING_MAX:
        pairs = _min_perfect_matching(dmat, order)
    else:
        pairs = _greedy_matching(dmat, order)
    join = set()
    for i, j in pairs:
        join ^= set(_path_edges(pred[i], odd_faces[i], odd_faces[j]))
    return [best[e][1] for e in sorted(join)], odd_cells, len(odd_faces)


def _path_edges(pred_row, src, dst):
    path = []
    v = dst
    while v != src:
        u = int(pred_row[v])
        path.append((min(u, v), max(u, v)))
        v = u
    return path


def try_orient(f: LineField) -> OrientReport:
    """Sign propagation, frustration, odd faces and (in 2D) a minimal cut set."""
    edges, bits = _edge_bits(f)
    active = f.active
    signs, frustrated = _propagate(f.grid.n_nodes, active, edges, bits)
    if not frustrated:
        return OrientReport(True, signs, [], [], 0, [], 0.0)
    if f.grid.dim != 2:
        return OrientReport(False, signs, frustrated)
    cuts, odd_cells, n_odd = _select_cuts(f, edges, bits)
    removed = set(cuts)
    signs, left = _propagate(f.grid.n_nodes, active, edges, bits, frozenset(removed))
    while left:
        # Non-contractible loops on periodic grids: cut remaining frustrated edges.
        removed.add(left[0])
        signs, left = _propagate(f.grid.n_nodes, active, edges, bits, frozenset(removed))
    cuts = sorted(removed)
    area = sum(face_area(f.grid, k, idx) for k, idx in cuts)
    return OrientReport(False, signs, frustrated, odd_cells, n_odd, cuts, float(area))


def lift_is_valid(f: LineField, report: OrientReport) -> bool:
    """Every uncut edge agrees in sign and every cut edge flips."""
    edges, _ = _edge_bits(f)
    cut = set(report.cut_faces)
    m = f.directions * report.signs[:, None]
    for key, a, b in edges:
        dot = m[a] @ m[b]
        if (key in cut) != (dot < 0):
            return False
    return True
