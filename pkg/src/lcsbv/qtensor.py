"""Q-tensor algebra: storage, uniaxial states and the symmetric 3x3 spectrum.

A Q-tensor is stored through its five independent components
``(xx, yy, xy, xz, yz)``; the ``zz`` entry is always ``-xx - yy`` so the
trace vanishes by construction.  Array helpers at the bottom of the module
work on stacks of tensors with shape ``(..., 5)`` or ``(..., 3, 3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

IDENTITY = np.eye(3)
UNIT_TOL = 1e-8

# Q_ij = sum_a BASIS[a, i, j] q_a for q = (xx, yy, xy, xz, yz).
BASIS = np.zeros((5, 3, 3))
BASIS[0, 0, 0], BASIS[0, 2, 2] = 1.0, -1.0
BASIS[1, 1, 1], BASIS[1, 2, 2] = 1.0, -1.0
BASIS[2, 0, 1] = BASIS[2, 1, 0] = 1.0
BASIS[3, 0, 2] = BASIS[3, 2, 0] = 1.0
BASIS[4, 1, 2] = BASIS[4, 2, 1] = 1.0


@dataclass(frozen=True)
class QTensor:
    xx: float = 0.0
    yy: float = 0.0
    xy: float = 0.0
    xz: float = 0.0
    yz: float = 0.0

    @property
    def zz(self) -> float:
        return -self.xx - self.yy

    def components(self) -> np.ndarray:
        return np.array([self.xx, self.yy, self.xy, self.xz, self.yz])

    def matrix(self) -> np.ndarray:
        return q_matrix(self.components())

    @classmethod
    def from_matrix(cls, m, tol: float = 1e-10) -> "QTensor":
        m = np.asarray(m, dtype=float)
        scale = 1.0 + np.abs(m).max()
        if np.abs(m - m.T).max() > tol * scale or abs(np.trace(m)) > tol * scale:
            raise InvalidInputError("matrix is not symmetric traceless")
        return cls(*q_vector(0.5 * (m + m.T)))

    @classmethod
    def zero(cls) -> "QTensor":
        return cls()

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix()))

    def __add__(self, other: "QTensor") -> "QTensor":
        return QTensor(*(self.components() + other.components()))

    def __sub__(self, other: "QTensor") -> "QTensor":
        return QTensor(*(self.components() - other.components()))

    def __mul__(self, c: float) -> "QTensor":
        return QTensor(*(c * self.components()))

    __rmul__ = __mul__


@dataclass(frozen=True)
class UniaxialState:
    s: float
    n: tuple

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(float(v) for v in self.n))


class Biaxial:
    """Returned by :func:`uniaxial_of` when no eigenvalue pair coincides."""

    def __init__(self, eigenvalues):
        self.eigenvalues = tuple(float(v) for v in eigenvalues)

    def __repr__(self):
        return f"Biaxial(eigenvalues={self.eigenvalues})"

    def __bool__(self):
        return False


def normalize(n) -> np.ndarray:
    """Project a vector (or a stack of vectors) onto the unit sphere."""
    n = np.asarray(n, dtype=float)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def check_director(n, tol: float = UNIT_TOL) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape[-1] != 3:
        raise InvalidInputError(f"director must have 3 components, got shape {n.shape}")
    dev = np.abs(np.linalg.norm(n, axis=-1) - 1.0)
    if np.any(dev > tol):
        raise InvalidInputError(f"director not unit length (norm deviation {dev.max():.3g})")
    return n


def to_qtensor(u: UniaxialState) -> QTensor:
    """``s (n n^T - I/3)`` for a uniaxial state."""
    n = check_director(u.n)
    return QTensor(*q_vector(uniaxial_matrix(u.s, n)))


def _first_nonzero_positive(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    for c in v:
        if abs(c) > tol:
            return v if c > 0 else -v
    return v


def _lex_largest_in_plane(normal: np.ndarray) -> np.ndarray:
    # Unit vector orthogonal to `normal` maximizing (x, y, z) lexicographically.
    for e in IDENTITY:
        p = e - np.dot(e, normal) * normal
        nrm = np.linalg.norm(p)
        if nrm > 1e-8:
            return p / nrm
    raise AssertionError("unreachable: normal has unit length")


def _null_vector(a: np.ndarray) -> np.ndarray:
    # Kernel direction of a rank-2 symmetric 3x3 matrix from row cross products.
    crosses = (np.cross(a[0], a[1]), np.cross(a[0], a[2]), np.cross(a[1], a[2]))
    best = max(crosses, key=lambda c: float(np.dot(c, c)))
    return best / np.linalg.norm(best)


def _polish(m: np.ndarray, lam: float) -> float:
    # One Newton step on det(lam I - m) = lam^3 - c2 lam^2 + c1 lam - c0.
    c2 = np.trace(m)
    c1 = 0.5 * (c2 * c2 - np.trace(m @ m))
    c0 = np.linalg.det(m)
    f = ((lam - c2) * lam + c1) * lam - c0
    df = (3.0 * lam - 2.0 * c2) * lam + c1
    if df != 0.0:
        step = f / df
        if abs(step) < 1e-6 * (1.0 + abs(lam)):
            lam -= step
    return lam


def cardano_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a symmetric 3x3 matrix (trigonometric Cardano)."""
    q = np.trace(m) / 3.0
    b = m - q * IDENTITY
    p2 = np.sum(b * b) / 6.0
    if p2 <= 1e-300:
        return np.array([q, q, q])
    p = math.sqrt(p2)
    r = np.linalg.det(b / p) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    l1, l3 = _polish(m, l1), _polish(m, l3)
    l2 = 3.0 * q - l1 - l3
    return np.array([l1, l2, l3])


def spectral(q) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a Q-tensor.

    Accepts a :class:`QTensor` or any symmetric 3x3 array.  Each eigenvector
    has a positive first nonzero component; inside a degenerate eigenspace
    the lexicographically largest vector is chosen first.
    """
    m = q.matrix() if isinstance(q, QTensor) else np.asarray(q, dtype=float)
    m = 0.5 * (m + m.T)
    lam = cardano_eigenvalues(m)
    scale = max(1.0, float(np.abs(lam).max()))
    gap_tol = 1e-9 * scale
    g12, g23 = lam[0] - lam[1], lam[1] - lam[2]

    if g12 <= gap_tol and g23 <= gap_tol:
        vecs = IDENTITY.copy()
    elif g23 <= gap_tol:
        v1 = _null_vector(m - lam[0] * IDENTITY)
        v2 = _lex_largest_in_plane(v1)
        vecs = np.column_stack([v1, v2, np.cross(v1, v2)])
    elif g12 <= gap_tol:
        v3 = _null_vector(m - lam[2] * IDENTITY)
        v1 = _lex_largest_in_plane(v3)
        vecs = np.column_stack([v1, np.cross(v3, v1), v3])
    else:
        v1 = _null_vector(m - lam[0] * IDENTITY)
        v3 = _null_vector(m - lam[2] * IDENTITY)
        v3 = v3 - np.dot(v3, v1) * v1
        v3 /= np.linalg.norm(v3)
        vecs = np.column_stack([v1, np.cross(v3, v1), v3])
    vecs = np.column_stack([_first_nonzero_positive(vecs[:, k]) for k in range(3)])

    resid = np.abs(m @ vecs - vecs * lam).max()
    if resid > 1e-11 * max(1.0, np.linalg.norm(m)):
        # Nearly coincident eigenvalues degrade the cross products; fall back.
        w, v = np.linalg.eigh(m)
        lam, vecs = w[::-1], v[:, ::-1]
        vecs = np.column_stack([_first_nonzero_positive(vecs[:, k]) for k in range(3)])
    lam = lam - lam.sum() / 3.0 if abs(np.trace(m)) < 1e-12 * scale else lam
    return lam, vecs


def uniaxial_of(q, tol: float = 1e-8):
    """Recover ``(s, n)`` from a uniaxial tensor, or a :class:`Biaxial` marker."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    m = q.matrix() if isinstance(q, QTensor) else np.asarray(q, dtype=float)
    lam, vecs = spectral(m)
    thresh = tol * (1.0 + np.linalg.norm(m))
    if lam[1] - lam[2] <= thresh:
        return UniaxialState(1.5 * lam[0], vecs[:, 0])
    if lam[0] - lam[1] <= thresh:
        return UniaxialState(1.5 * lam[2], vecs[:, 2])
    return Biaxial(lam)


# ---------------------------------------------------------------- array helpers

def q_matrix(q5) -> np.ndarray:
    """(..., 5) components -> (..., 3, 3) matrices."""
    return np.einsum("...a,aij->...ij", np.asarray(q5, dtype=float), BASIS)


def q_vector(m) -> np.ndarray:
    """(..., 3, 3) symmetric traceless matrices -> (..., 5) components."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]], axis=-1)


def q_vector_grad(dm) -> np.ndarray:
    """Pull a gradient w.r.t. matrix entries back to the five stored components."""
    return np.einsum("...ij,aij->...a", np.asarray(dm, dtype=float), BASIS)


def uniaxial_matrix(s, n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    s = np.asarray(s, dtype=float)[..., None, None]
    return s * (n[..., :, None] * n[..., None, :] - IDENTITY / 3.0)


def invariants(m) -> tuple[np.ndarray, np.ndarray]:
    """(tr Q^2, det Q) for a stack of matrices."""
    m = np.asarray(m, dtype=float)
    return np.einsum("...ij,...ji->...", m, m), np.linalg.det(m)
