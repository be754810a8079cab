"""Constrained first-order minimization of discrete energies.

The workhorse is a preconditioned Polak-Ribiere+ conjugate-gradient loop
with a monotone backtracking line search.  Director components are
renormalized after every step and gradients are projected onto the tangent
space of the unit sphere; Dirichlet nodes never move.  The preconditioner
is the sparse stiffness matrix of the grid (plus a small mass shift),
factorized once per solve.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order
from scipy.sparse.linalg import splu

from . import energy as en
from .errors import InvalidInputError
from .grid import EnergyResult, Field, GridSpec, energy_and_gradient
from .jumpset import E3, JumpSet, SbvProfile, lift_order, q_hat_energy, values_to_q
from .models import EnergyModel, LdGModel, UniaxialLift, check_compatible
from .qtensor import check_director, q_vector, q_vector_grad, spectral, uniaxial_matrix

CONVERGED = "converged"
MAX_ITERS = "max-iters"
LINE_SEARCH_FAILURE = "line-search-failure"
STOPPED = "stopped"
# Trace mismatch (relative to the order parameter) below which a jump counts as closed.
CLOSE_GAP = 1e-4


@dataclass(frozen=True)
class MinimizeOptions:
    max_iter: int = 5000
    tol: float = 1e-8              # on the projected gradient, relative to its initial norm
    atol: float = 1e-12            # absolute floor, in units of max(1, |energy|)
    armijo: float = 1e-4
    contraction: float = 0.5
    restart: int = 50
    max_backtracks: int = 60
    max_node_step: float = 0.5     # largest director displacement per step
    precondition: bool = True
    jump_step: float = 0.125       # coarse jump-position scan spacing, as a fraction of the length
    jump_tol: float = 1e-3         # golden-section stopping width, as a fraction of the length
    seed: int = 0

    def __post_init__(self):
        for name in ("tol", "armijo", "jump_step", "jump_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if not 0 < self.contraction < 1:
            raise InvalidInputError("contraction must lie in (0, 1)")
        if self.max_iter < 1 or self.restart < 1:
            raise InvalidInputError("max_iter and restart must be positive")


@dataclass
class MinimizeReport:
    field: object
    energy: EnergyResult
    iterations: int
    grad_trace: list
    energy_trace: list
    reason: str
    jumps: Optional[JumpSet] = None
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.reason == CONVERGED

    def to_dict(self) -> dict:
        out = {
            "energy": self.energy.as_dict(),
            "iterations": self.iterations,
            "reason": self.reason,
            "final_grad_norm": self.grad_trace[-1] if self.grad_trace else None,
        }
        if self.jumps is not None:
            out["jumps"] = json.loads(self.jumps.to_json())
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "energy", "projected_grad_norm"])
            for i, (e, g) in enumerate(zip(self.energy_trace, self.grad_trace)):
                w.writerow([i, repr(e), repr(g)])


# ------------------------------------------------------------------ constraints

@dataclass
class Constraint:
    """Which components live on a unit sphere and which are pinned to zero."""
    sphere: Optional[slice] = None
    zero: tuple = ()

    def retract(self, x):
        x = x.copy()
        for c in self.zero:
            x[:, c] = 0.0
        if self.sphere is not None:
            v = x[:, self.sphere]
            x[:, self.sphere] = v / np.linalg.norm(v, axis=1, keepdims=True)
        return x

    def project(self, x, g):
        g = g.copy()
        for c in self.zero:
            g[:, c] = 0.0
        if self.sphere is not None:
            n = x[:, self.sphere]
            v = g[:, self.sphere]
            g[:, self.sphere] = v - np.sum(v * n, axis=1, keepdims=True) * n
        return g


def constraint_for(kind: str, grid: Optional[GridSpec] = None) -> Constraint:
    if kind == "director":
        if grid is not None and grid.geometry == "spherical":
            return Constraint(slice(0, 3), (2,))
        return Constraint(slice(0, 3))
    if kind == "ericksen":
        return Constraint(slice(1, 4))
    return Constraint()


# ------------------------------------------------------------------ preconditioning

def stiffness_matrix(grid: GridSpec, model: Optional[EnergyModel] = None) -> sp.csr_matrix:
    """SPD node matrix approximating the energy Hessian of one component."""
    if model is not None and model.needs_hessian:
        ops = grid.node_ops
        W = sp.diags(ops.weight)
        S = model.S
        n0 = np.asarray(model.n0, float)
        lq = sp.csr_matrix((grid.n_nodes, grid.n_nodes))
        for k in range(grid.dim):
            lq = lq + n0[grid.axes[k]] ** 2 * ops.second[k]
        lq = lq + S.q ** 2 * sp.identity(grid.n_nodes)
        return (2 * S.B * lq.T @ W @ lq + (abs(S.a) + S.c) * W).tocsr()
    ops = grid.cell_ops
    W = sp.diags(ops.weight)
    K = sum(d.T @ W @ d for d in ops.diff)
    M = ops.avg.T @ W @ ops.avg
    if grid.geometry != "cartesian":
        r = ops.center[:, 0]
        K = K + ops.avg.T @ sp.diags(ops.weight / r ** 2) @ ops.avg
    sigma = 1e-3 * K.diagonal().sum() / max(M.diagonal().sum(), 1e-300)
    return (K + sigma * M).tocsr()


class Preconditioner:
    """Sparse LU of the stiffness matrix restricted to the free nodes.

    With ``gauged`` set, node values are first multiplied by signs that make
    neighbouring directors agree along a spanning tree of the matrix graph.
    Energies of lifted directors do not see those signs, so the stiffness
    is applied to the consistently oriented field.
    """

    def __init__(self, matrix: sp.csr_matrix, free: np.ndarray, gauged: bool = False):
        self.free = free
        sub = matrix[free][:, free].tocsc()
        self.lu = splu(sub) if sub.shape[0] else None
        self.tree = None
        if gauged:
            adj = (abs(matrix) > 0).astype(float).tocsr()
            self.tree = _spanning_tree(adj)

    def signs(self, x) -> np.ndarray:
        sigma = np.ones(len(x))
        for node, parent in self.tree:
            sigma[node] = sigma[parent] * (1.0 if x[node] @ x[parent] >= 0 else -1.0)
        return sigma

    def __call__(self, g, x=None):
        out = np.zeros_like(g)
        if self.lu is None:
            return out
        if self.tree is not None and x is not None:
            sigma = self.signs(x)[:, None]
            out[self.free] = self.lu.solve(np.ascontiguousarray((sigma * g)[self.free]))
            return sigma * out
        out[self.free] = self.lu.solve(np.ascontiguousarray(g[self.free]))
        return out


def _spanning_tree(adj: sp.csr_matrix):
    """(node, parent) pairs in breadth-first order over every component."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    pairs = []
    for root in range(n):
        if seen[root]:
            continue
        order, pred = breadth_first_order(adj, root, directed=False, return_predecessors=True)
        seen[order] = True
        pairs.extend((int(v), int(pred[v])) for v in order[1:])
    return pairs


# ------------------------------------------------------------------ core loop

def ncg(fun: Callable, x0: np.ndarray, free: np.ndarray, constraint: Constraint,
        precond: Optional[Callable], opts: MinimizeOptions, stop: Optional[Callable] = None):
    """Minimize ``fun(x) -> (energy, gradient)`` over rows ``free`` of ``x``.

    ``stop(x)`` is checked after every accepted step; when it returns true the
    iteration ends with reason ``STOPPED``.
    Returns ``(x, energy, grad_trace, energy_trace, reason, iterations)``.
    """
    x = constraint.retract(np.array(x0, float))
    fixed = ~free

    def pgrad(x, g):
        g = constraint.project(x, g)
        g[fixed] = 0.0
        return g

    def pre(x, g):
        z = precond(g, x) if precond is not None else g
        return pgrad(x, z)

    E, g = fun(x)
    pg = pgrad(x, g)
    z = pre(x, pg)
    d = -z
    norm0 = float(np.linalg.norm(pg))
    gtrace, etrace = [norm0], [E]
    scale = max(abs(E), 1e-300)
    t_prev = 1.0
    since_restart = 0
    reason = MAX_ITERS
    it = 0
    if norm0 <= opts.atol * max(1.0, abs(E)):
        return x, E, gtrace, etrace, CONVERGED, 0
    for it in range(1, opts.max_iter + 1):
        slope = float(np.sum(pg * d))
        if slope >= 0:
            d = -z
            slope = float(np.sum(pg * d))
            since_restart = 0
        accepted = False
        for attempt in range(2):
            t = min(2.0 * t_prev, 1e6)
            if constraint.sphere is not None:
                dmax = float(np.abs(d[:, constraint.sphere]).max())
                if dmax > 0:
                    t = min(t, opts.max_node_step / dmax)
            for _ in range(opts.max_backtracks):
                xn = constraint.retract(x + t * d)
                xn[fixed] = x[fixed]
                En, gn = fun(xn)
                if np.isfinite(En):
                    if En <= E + opts.armijo * t * slope and En <= E:
                        accepted = True
                    elif abs(En - E) <= 1e3 * np.finfo(float).eps * scale:
                        # Energy differences are at roundoff level: use the
                        # trapezoidal estimate from directional derivatives.
                        slope_n = float(np.sum(pgrad(xn, gn) * d))
                        if slope_n > slope:
                            # secant step to the zero of the directional derivative
                            ts = t * slope / (slope - slope_n)
                            xs = constraint.retract(x + ts * d)
                            xs[fixed] = x[fixed]
                            Es, gs = fun(xs)
                            slope_s = float(np.sum(pgrad(xs, gs) * d))
                            if abs(Es - E) <= 1e3 * np.finfo(float).eps * scale and abs(slope_s) < abs(slope_n):
                                xn, En, gn, t, slope_n = xs, Es, gs, ts, slope_s
                        accepted = 0.5 * t * (slope + slope_n) <= opts.armijo * t * slope
                    if accepted:
                        break
                t *= opts.contraction
            if accepted or since_restart == 0:
                break
            d = -z
            slope = float(np.sum(pg * d))
            since_restart = 0
        if not accepted:
            reason = LINE_SEARCH_FAILURE
            it -= 1
            break
        t_prev = t
        x, E = xn, En
        pg_new = pgrad(x, gn)
        z_new = pre(x, pg_new)
        gnorm = float(np.linalg.norm(pg_new))
        gtrace.append(gnorm)
        etrace.append(E)
        if stop is not None and stop(x):
            reason = STOPPED
            break
        if gnorm <= max(opts.tol * norm0, opts.atol * max(1.0, abs(E))):
            reason = CONVERGED
            break
        since_restart += 1
        denom = float(np.sum(pg * z))
        beta = max(0.0, float(np.sum(pg_new * (z_new - z))) / denom) if denom > 0 else 0.0
        if since_restart >= opts.restart:
            beta, since_restart = 0.0, 0
        d = -z_new + beta * pgrad(x, d)
        pg, z = pg_new, z_new
    return x, E, gtrace, etrace, reason, it


# ------------------------------------------------------------------ field minimization

def minimize_field(f: Field, model: EnergyModel, opts: MinimizeOptions = MinimizeOptions()) -> MinimizeReport:
    """Minimize ``total_energy(f, model)`` with the constraint implied by the field kind."""
    check_compatible(model, f.kind)
    if isinstance(model, LdGModel):
        model.check_minimizable()
    if isinstance(model, UniaxialLift):
        model.inner.check_minimizable()
    grid = f.grid
    cons = constraint_for(f.kind, grid)
    u0 = f.flat().copy()
    free = ~f.fixed.ravel()
    if f.kind == "director":
        check_director(u0[~free])

    def fun(u):
        res, g = energy_and_gradient(grid, f.kind, model, u)
        return res.total, g

    gauged = isinstance(model, UniaxialLift)
    pc = Preconditioner(stiffness_matrix(grid, model), free, gauged) if opts.precondition else None
    x, E, gtr, etr, reason, its = ncg(fun, u0, free, cons, pc, opts)
    out = f.with_flat(x)
    res, _ = energy_and_gradient(grid, f.kind, model, x, with_grad=False)
    return MinimizeReport(out, res, its, gtr, etr, reason)


def minimize_director(f: Field, model: EnergyModel, opts: MinimizeOptions = MinimizeOptions()) -> MinimizeReport:
    if f.kind != "director":
        raise InvalidInputError("minimize_director needs a director field")
    return minimize_field(f, model, opts)


def minimize_q(f: Field, model: LdGModel, opts: MinimizeOptions = MinimizeOptions(),
               uniaxial_lock: bool = False, s: Optional[float] = None) -> MinimizeReport:
    """Minimize over Q-tensor fields, or over ``Q = s (n n - I/3)`` when locked.

    A locked solve starts from the leading eigenvectors of ``f`` and takes
    ``s`` from the argument or from the first node.
    """
    if f.kind != "qtensor":
        raise InvalidInputError("minimize_q needs a Q-tensor field")
    if not uniaxial_lock:
        return minimize_field(f, model, opts)
    mats = f.q_matrices().reshape(-1, 3, 3)
    dirs = np.array([spectral(m)[1][:, 0] for m in mats])
    if s is None:
        s = 1.5 * spectral(mats[0])[0][0]
    lifted = UniaxialLift(model, float(s))
    rep = minimize_field(Field(f.grid, "director", dirs, f.fixed), lifted, opts)
    rep.extra["director"] = rep.field
    rep.field = Field(f.grid, "qtensor", q_vector(uniaxial_matrix(np.full(f.grid.n_nodes, s), rep.field.flat())),
                      f.fixed)
    return rep


def rotate_field(f: Field, R) -> Field:
    """Apply a rigid rotation to the values of a director or Q-tensor field."""
    R = np.asarray(R, float)
    v = f.flat()
    if f.kind == "director":
        return f.with_flat(v @ R.T)
    if f.kind == "qtensor":
        Q = f.q_matrices().reshape(-1, 3, 3)
        return f.with_flat(q_vector(R @ Q @ R.T))
    raise InvalidInputError("only director and Q-tensor fields rotate")


# ------------------------------------------------------------------ 1D free-discontinuity problems

def _pullback(kind: str, v, s: float):
    """Q of node values ``v`` and a map sending dE/dQ back to dE/dv."""
    if kind == "qtensor":
        return values_to_q(kind, v), q_vector_grad
    if kind == "director":
        v = np.asarray(v, float)
        return values_to_q(kind, v, s), lambda dQ: 2 * s * np.einsum("...ij,...j->...i", dQ, v)
    raise InvalidInputError("1D jump problems need director or Q-tensor profiles")


class _ProfileProblem:
    """Energy of a profile with fixed jump positions as a function of stacked node values."""

    def __init__(self, prof: SbvProfile, model: EnergyModel, J: en.JumpEnergyParams,
                 free_left: bool = False, free_right: bool = False):
        self.prof, self.model, self.J = prof, model, J
        self.s = lift_order(model)
        self.live = [i for i in range(len(prof.segments)) if prof.segment_grid(i) is not None]
        self.grids = [prof.segment_grid(i) for i in self.live]
        sizes = [len(prof.segments[i]) for i in self.live]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        n = int(self.offsets[-1])
        self.free = np.ones(n, dtype=bool)
        if not free_left:
            self.free[0] = False
        if not free_right:
            self.free[-1] = False

    def stack(self):
        x = np.concatenate([self.prof.segments[i] for i in self.live])
        if not self.free[0]:
            x[0] = self.prof.left
        if not self.free[-1]:
            x[-1] = self.prof.right
        return x

    def unstack(self, x):
        segs = [s.copy() for s in self.prof.segments]
        for j, i in enumerate(self.live):
            segs[i] = x[self.offsets[j]:self.offsets[j + 1]].copy()
        return segs

    def _pairs(self):
        """(index below or None, index above or None) of every trace pair, plates included."""
        ends = [(int(self.offsets[j]), int(self.offsets[j + 1]) - 1) for j in range(len(self.live))]
        pairs = [(None, ends[0][0])]
        pairs += [(ends[j][1], ends[j + 1][0]) for j in range(len(ends) - 1)]
        pairs.append((ends[-1][1], None))
        return pairs

    def __call__(self, x, parts: bool = False):
        kind = self.prof.kind
        grad = np.zeros_like(x)
        bulk = elastic = 0.0
        for j, g in enumerate(self.grids):
            a, b = self.offsets[j], self.offsets[j + 1]
            res, gg = energy_and_gradient(g, kind, self.model, x[a:b])
            bulk += res.bulk
            elastic += res.elastic
            grad[a:b] += gg
        surf = 0.0
        for lo, hi in (self._pairs() if self.J is not None else ()):
            vlo = self.prof.left if lo is None else x[lo]
            vhi = self.prof.right if hi is None else x[hi]
            (Qm, Qp), back = _pullback(kind, np.stack([vlo, vhi]), self.s)
            val, dQp, dQm = en.jump_energy_grad(Qp, Qm, E3, self.J)
            surf += float(val)
            dv = back(np.stack([dQm, dQp]))
            if lo is not None:
                grad[lo] += dv[0]
            if hi is not None:
                grad[hi] += dv[1]
        if parts:
            return EnergyResult(bulk + elastic + surf, bulk, elastic, surf)
        return bulk + elastic + surf, grad

    def min_gap(self, x):
        """Smallest trace mismatch ``|Q+ - Q-|`` over the jumps that can move."""
        gap = np.inf
        for lo, hi in (self._pairs() if self.J is not None else ()):
            if not ((lo is not None and self.free[lo]) or (hi is not None and self.free[hi])):
                continue
            vlo = self.prof.left if lo is None else x[lo]
            vhi = self.prof.right if hi is None else x[hi]
            (Qm, Qp), _ = _pullback(self.prof.kind, np.stack([vlo, vhi]), self.s)
            gap = min(gap, float(np.linalg.norm(Qp - Qm)))
        return gap

    def preconditioner(self):
        blocks = []
        for g in self.grids:
            blocks.append(stiffness_matrix(g))
        gauged = isinstance(self.model, UniaxialLift)
        return Preconditioner(sp.block_diag(blocks).tocsr(), self.free, gauged)


def _solve_profile(prof: SbvProfile, model, J, opts, free_left=False, free_right=False):
    prob = _ProfileProblem(prof, model, J, free_left, free_right)
    cons = constraint_for(prof.kind)
    pc = prob.preconditioner() if opts.precondition else None
    # A jump whose traces merge sits on the cusp of the surface term, where the
    # gradient is discontinuous; such a state belongs to the smooth branch.
    gap_tol = CLOSE_GAP * max(abs(prob.s), 1.0)
    x, E, gtr, etr, reason, its = ncg(prob, prob.stack(), prob.free, cons, pc, opts,
                                      stop=lambda x: prob.min_gap(x) < gap_tol)
    out = SbvProfile(prof.length, prof.kind, prob.unstack(x), prof.jumps, prof.left, prof.right)
    return out, prob(x, parts=True), gtr, etr, reason, its


def _profile_at(template: SbvProfile, gamma: float, init: str, nodes: int, rng) -> SbvProfile:
    """Two-segment profile with the jump at ``gamma`` (segments of ``nodes`` each)."""
    L = template.length
    kind = template.kind
    left, right = template.left, template.right
    segs = []
    for a, b, side in ((0.0, gamma, 0), (gamma, L, 1)):
        x = np.linspace(a, b, nodes)
        if init == "constant":
            v = np.tile(left if side == 0 else right, (nodes, 1))
        elif init in ("plus", "minus"):
            # Each segment bends half as fast as the smooth profile, leaving an open jump.
            xi = 0.5 * x / L + 0.5 * side
            v = _bend_profile(kind, xi, left, right, 1 if init == "plus" else -1)
        else:
            v = _random_profile(kind, nodes, left if side == 0 else right, rng)
        segs.append(v)
    return SbvProfile(L, kind, segs, JumpSet(positions=(gamma,)), left, right)


def _bend_profile(kind, xi, left, right, sign):
    """Director rotating from ``left`` to ``right`` in their common plane (sign picks the sense)."""
    nl, nr, s_l, s_r = _plate_directors(kind, left, right)
    th = 0.5 * math.pi * xi
    perp = nr - (nr @ nl) * nl
    perp = perp / np.linalg.norm(perp) if np.linalg.norm(perp) > 1e-12 else np.cross(nl, [0, 1.0, 0])
    n = np.cos(th)[:, None] * nl + sign * np.sin(th)[:, None] * perp
    if kind == "director":
        return n
    s = s_l + (s_r - s_l) * xi
    return q_vector(uniaxial_matrix(s, n))


def _plate_directors(kind, left, right):
    if kind == "director":
        return np.asarray(left, float), np.asarray(right, float), 1.0, 1.0
    lam_l, v_l = spectral(values_to_q("qtensor", left))
    lam_r, v_r = spectral(values_to_q("qtensor", right))
    return v_l[:, 0], v_r[:, 0], 1.5 * lam_l[0], 1.5 * lam_r[0]


def _random_profile(kind, nodes, anchor, rng):
    if kind == "director":
        v = rng.normal(size=(nodes, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    return np.asarray(anchor, float) + 0.1 * rng.normal(size=(nodes, 5))


def _eval_gamma(template, gamma, model, J, opts, nodes, rng, warm=None):
    """Best profile with one jump at ``gamma`` (plate positions mean a boundary jump)."""
    L = template.length
    eps = 1e-9 * L
    if gamma <= eps or gamma >= L - eps:
        at_left = gamma <= eps
        best = None
        for init in ("constant", "random"):
            x = np.linspace(0, L, 2 * nodes - 1)
            anchor = template.right if at_left else template.left
            if init == "constant":
                v = np.tile(anchor, (len(x), 1))
            else:
                v = _random_profile(template.kind, len(x), anchor, rng)
            prof = SbvProfile(L, template.kind, [v], JumpSet(), template.left, template.right)
            out = _solve_profile(prof, model, J, opts, free_left=at_left, free_right=not at_left)
            if out[4] == STOPPED:
                continue
            if best is None or out[1].total < best[1].total:
                best = out
        if best is None:
            return None
        prof = best[0]
        prof = SbvProfile(L, prof.kind, [prof.segments[0]], JumpSet(), prof.left, prof.right)
        return (prof,) + best[1:] + (0.0 if at_left else L,)
    starts = [warm] if warm is not None else []
    # Bend-type starts are left out: with a concave surface term they crawl
    # along a shallow valley, and their closed-jump limit is the smooth branch.
    starts += [_profile_at(template, gamma, init, nodes, rng) for init in ("constant", "random")]
    best = None
    for prof in starts:
        prof = prof.with_jumps((gamma,))
        out = _solve_profile(prof, model, J, opts)
        if out[4] == STOPPED:
            continue
        if best is None or out[1].total < best[1].total - 1e-14:
            best = out
    return None if best is None else best + (gamma,)


def _symmetric_choice(gs, es, rel=1e-9):
    """Middle of the set of positions tied (to ``rel``) for the lowest energy."""
    es = np.asarray(es)
    emin = es.min()
    tied = [g for g, e in zip(gs, es) if e <= emin + rel * max(1.0, abs(emin))]
    mid = 0.5 * (min(tied) + max(tied))
    return min(tied, key=lambda g: abs(g - mid))


def minimize_sbv_1d(profile: SbvProfile, model: EnergyModel, J: en.JumpEnergyParams,
                    opts: MinimizeOptions = MinimizeOptions(), jump_count: int = 1,
                    nodes: int = 201) -> MinimizeReport:
    """Joint minimization over a 1D profile and (optionally) one jump position.

    The jump position is located by a coarse scan (spacing ``jump_step``)
    followed by golden-section refinement inside the best bracket; positions
    whose energies tie are resolved toward the middle of the tied range.  The
    result is compared with the smooth solve and with the piecewise-constant
    profile jumping at the midpoint, and the lowest of the three is returned.
    """
    if jump_count not in (0, 1):
        raise InvalidInputError("jump_count must be 0 or 1")
    if profile.kind not in ("director", "qtensor"):
        raise InvalidInputError("1D jump problems need director or Q-tensor profiles")
    rng = np.random.default_rng(opts.seed)
    L = profile.length
    smooth = smooth_branch(profile, model, opts, nodes=nodes, rng=rng)
    candidates = [("smooth", smooth["best"])]

    qhat = SbvProfile.piecewise_constant(L, profile.kind, [profile.left, profile.right], (0.5 * L,),
                                         nodes=nodes, left=profile.left, right=profile.right)
    qhat_res = qhat.energy(model, J)
    candidates.append(("piecewise-constant", (qhat, qhat_res, [0.0], [qhat_res.total], CONVERGED, 0, 0.5 * L)))

    scan = []
    if jump_count == 1:
        half = (nodes + 1) // 2
        n_coarse = max(2, int(round(1.0 / opts.jump_step)))
        gs = list(np.linspace(0.0, L, n_coarse + 1))
        results = {}
        for g in gs:
            results[g] = _eval_gamma(profile, g, model, J, opts, half, rng)
        # Positions where every start closed its jump have no open-jump state.
        es = [np.inf if results[g] is None else results[g][1].total for g in gs]
        scan = [(float(g), float(e)) for g, e in zip(gs, es)]
        if np.isfinite(es).any():
            g0 = _symmetric_choice(gs, es)
            flat = max(es) - min(es) <= 1e-9 * max(1.0, abs(min(es)))
            best = results[g0]
            if not flat:
                i = gs.index(g0)
                a, b = gs[max(i - 1, 0)], gs[min(i + 1, len(gs) - 1)]
                best = _golden(profile, model, J, opts, half, rng, a, b, results[g0], results)
            candidates.append(("jump", best))

    name, best = min(candidates, key=lambda c: c[1][1].total)
    jump_energy = min(c[1][1].total for c in candidates if c[0] != "smooth")
    prof, res, gtr, etr, reason, its = best[:6]
    gamma = best[6] if len(best) > 6 else None
    extra = {
        "branch": name,
        "smooth_energy": smooth["best"][1].total,
        "smooth_basins": smooth["basins"],
        "piecewise_constant_energy": qhat_res.total,
        "jump_energy": jump_energy,
        "jump_scan": scan,
    }
    jumps = None
    if name != "smooth" and gamma is not None:
        jumps = JumpSet(positions=(gamma,))
        extra["jump_position"] = gamma
        extra["boundary_jump"] = bool(gamma <= 1e-9 * L or gamma >= L * (1 - 1e-9))
    return MinimizeReport(prof, res, its, gtr, etr, reason, jumps, extra)


def _golden(template, model, J, opts, nodes, rng, a, b, start, cache):
    phi = (math.sqrt(5) - 1) / 2
    best = start
    memo = dict(cache)

    def ev(g):
        nonlocal best
        if g not in memo:
            warm = best[0] if len(best[0].segments) == 2 else None
            memo[g] = _eval_gamma(template, g, model, J, opts, nodes, rng, warm=warm)
        if memo[g] is None:
            return np.inf
        if memo[g][1].total < best[1].total:
            best = memo[g]
        return memo[g][1].total

    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = ev(c), ev(d)
    while b - a > opts.jump_tol * template.length:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = ev(d)
    return best


def basin_label(prof_or_field, kind: str, s: float = 1.0) -> str:
    """``'Q+'``/``'Q-'`` by the sign of the mean ``Q_xz``, else ``'other'``."""
    if isinstance(prof_or_field, SbvProfile):
        v = np.concatenate(prof_or_field.segments)
    else:
        v = prof_or_field.flat()
    Q = values_to_q(kind, v, s)
    m = float(np.mean(Q[:, 0, 2]))
    if m > 1e-3:
        return "Q+"
    if m < -1e-3:
        return "Q-"
    return "other"


def smooth_branch(profile: SbvProfile, model: EnergyModel, opts: MinimizeOptions = MinimizeOptions(),
                  nodes: int = 201, rng=None, extra_starts=()) -> dict:
    """Multi-start smooth solves (``plus``, ``minus``, one random start, plus any extras)."""
    rng = np.random.default_rng(opts.seed) if rng is None else rng
    L = profile.length
    x = np.linspace(0, L, nodes)
    starts = [("plus", _bend_profile(profile.kind, x / L, profile.left, profile.right, 1)),
              ("minus", _bend_profile(profile.kind, x / L, profile.left, profile.right, -1)),
              ("random", _random_profile(profile.kind, nodes, profile.left, rng))]
    starts += list(extra_starts)
    basins = []
    best = None
    for name, v in starts:
        prof = SbvProfile(L, profile.kind, [v], JumpSet(), profile.left, profile.right)
        out = _solve_profile(prof, model, None, opts)
        label = basin_label(out[0], profile.kind, lift_order(model))
        basins.append({"start": name, "energy": out[1].total, "basin": label, "reason": out[4]})
        if best is None or out[1].total < best[1].total:
            best = out
    return {"best": best + (None,), "basins": basins}
