"""Slow, independent reference computations for the test suite.

Nothing here imports the rest of the package: each oracle works from plain
arrays and re-derives what it needs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OracleResult:
    value: object
    method: str
    resolution: object = None
    extra: dict = field(default_factory=dict)


# ------------------------------------------------------------------ eigenvalues

def jacobi_eigen(m, sweeps: int = 50, tol: float = 1e-15) -> OracleResult:
    """Cyclic Jacobi rotations; eigenvalues descending with eigenvector columns."""
    a = np.array(m, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol * (1 + np.abs(a).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
                v = v @ rot
    lam = np.diag(a)
    order = np.argsort(lam)[::-1]
    return OracleResult(lam[order], "cyclic-jacobi", sweep + 1, {"vectors": v[:, order]})


# ------------------------------------------------------------------ scans and quadrature

def scan_1d(fn, lo: float, hi: float, samples: int = 10_001) -> OracleResult:
    """Dense evaluation on a uniform grid; returns the argmin and the cell width."""
    if samples < 1000:
        raise ValueError("scan_1d needs at least 10^3 samples")
    xs = np.linspace(lo, hi, samples)
    vals = np.array([fn(x) for x in xs])
    i = int(np.argmin(vals))
    return OracleResult(float(xs[i]), "dense-scan", (hi - lo) / (samples - 1), {"min": float(vals[i])})


def riemann_1d(fn, lo: float, hi: float, samples: int = 200_000) -> OracleResult:
    """Midpoint Riemann sum of a scalar integrand."""
    h = (hi - lo) / samples
    x = lo + h * (np.arange(samples) + 0.5)
    return OracleResult(float(np.sum(fn(x)) * h), "midpoint-riemann", samples)


def riemann_log_1d(fn, lo: float, hi: float, samples: int = 200_000) -> OracleResult:
    """Midpoint rule in ``t = ln x`` for integrands concentrated near ``lo > 0``."""
    t0, t1 = math.log(lo), math.log(hi)
    h = (t1 - t0) / samples
    t = t0 + h * (np.arange(samples) + 0.5)
    x = np.exp(t)
    return OracleResult(float(np.sum(fn(x) * x) * h), "log-midpoint-riemann", samples)


# ------------------------------------------------------------------ transcribed formulas

def frank_constants_reference(L1, L2, L3, L4, L5, s):
    """Elastic constants of a uniaxial state, written out term by term."""
    s2, s3 = s * s, s * s * s
    K1 = L1 * s2 + L2 * s2 + 2.0 * L3 * s2 - (2.0 / 3.0) * L4 * s3
    K2 = 2.0 * L3 * s2 - (2.0 / 3.0) * L4 * s3
    K3 = L1 * s2 + L2 * s2 + 2.0 * L3 * s2 + (4.0 / 3.0) * L4 * s3
    K4 = L2 * s2
    q0 = L5 / (4.0 * (L3 + (2.0 / 3.0) * L4))
    return K1, K2, K3, K4, q0


def bulk_uniaxial_reference(s, a, b, c):
    """Quartic bulk on ``diag(2s/3, -s/3, -s/3)`` via explicit matrix powers."""
    q = np.diag([2 * s / 3, -s / 3, -s / 3])
    q2 = q @ q
    return a * np.trace(q2) - (2 * b / 3) * np.trace(q2 @ q) + c * np.trace(q2 @ q2)


# ------------------------------------------------------------------ orientability

def brute_orientability(directions, shape, active=None, periodic=(False, False)) -> OracleResult:
    """Exhaustive search over node signs on a 2D grid of at most 16 nodes.

    The value is the minimum number of edges with ``kappa_i kappa_j n_i . n_j < 0``;
    zero means orientable.
    """
    ni, nj = shape
    n = ni * nj
    if n > 16:
        raise ValueError("brute force is limited to 16 nodes")
    d = np.asarray(directions, float).reshape(n, 3)
    act = np.ones(n, bool) if active is None else np.asarray(active, bool).reshape(n)
    edges = []
    for i in range(ni):
        for j in range(nj):
            for di, dj, per, size in ((1, 0, periodic[0], ni), (0, 1, periodic[1], nj)):
                a, b = i + di, j + dj
                if (di and a >= ni) or (dj and b >= nj):
                    if not per:
                        continue
                    a, b = a % ni, b % nj
                u, w = i * nj + j, a * nj + b
                if u != w and act[u] and act[w]:
                    edges.append((u, w, float(d[u] @ d[w])))
    free = [k for k in range(n) if act[k]]
    if len(free) < 2 or not edges:
        return OracleResult(True, "exhaustive-signs", 1, {"min_cut": 0})
    # every sign assignment with the first free node fixed to +1, one row each
    rows = np.array(list(itertools.product((1.0, -1.0), repeat=len(free) - 1)))
    sign = np.zeros((len(rows), n))
    sign[:, free[0]] = 1.0
    sign[:, free[1:]] = rows
    u, w, dot = (np.array(c) for c in zip(*edges))
    bad = np.sum(sign[:, u] * sign[:, w] * dot < 0, axis=1)
    best = int(bad.min())
    return OracleResult(best == 0, "exhaustive-signs", len(rows), {"min_cut": best})
