"""Pointwise free-energy densities and their analytic gradients.

Every density is vectorized over leading axes.  Conventions:

* director ``n`` has shape ``(..., 3)``;
* director gradient ``G`` has shape ``(..., 3, 3)`` with ``G[..., i, j] = dn_i/dx_j``;
* Q-tensors are full matrices ``(..., 3, 3)``;
* Q gradients ``H`` have shape ``(..., 3, 3, 3)`` with ``H[..., i, j, k] = dQ_ij/dx_k``.

Each ``*_grad`` companion returns the density together with its partial
derivatives with respect to every array argument, in argument order.  Matrix
gradients are taken entrywise (all nine entries treated as independent).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError, InvalidModelError
from .qtensor import IDENTITY, spectral

EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


# ------------------------------------------------------------------ parameters

@dataclass(frozen=True)
class FrankConstants:
    K1: float
    K2: float
    K3: float
    K4: float = 0.0
    q0: float = 0.0

    @classmethod
    def one_constant(cls, K: float = 1.0) -> "FrankConstants":
        return cls(K, K, K, 0.0, 0.0)

    @property
    def ericksen_ok(self) -> bool:
        return (2 * self.K1 > self.K2 + self.K4 and self.K2 > abs(self.K4)
                and self.K3 > 0)


@dataclass(frozen=True)
class LdGElasticConstants:
    L1: float = 0.0
    L2: float = 0.0
    L3: float = 1.0
    L4: float = 0.0
    L5: float = 0.0

    def as_tuple(self):
        return (self.L1, self.L2, self.L3, self.L4, self.L5)

    @property
    def quadratic(self) -> bool:
        return self.L4 == 0.0 and self.L5 == 0.0


@dataclass(frozen=True)
class BulkParams:
    a: float
    b: float
    c: float
    barrier: float = 0.0  # kappa of the optional -kappa * sum ln(lambda_i + 1/3) term

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInputError("bulk.c must be positive")
        if not self.b > 0:
            raise InvalidInputError("bulk.b must be positive")
        if self.barrier < 0:
            raise InvalidInputError("bulk.barrier must be non-negative")

    @property
    def nematic(self) -> bool:
        return self.a <= self.b ** 2 / (27 * self.c)


@dataclass(frozen=True)
class GrowthModParams:
    p: float = 1.5
    alpha: float = 0.1

    def __post_init__(self):
        if not 1 < self.p < 2:
            raise InvalidInputError("growth.p must lie in (1, 2)")
        if not self.alpha > 0:
            raise InvalidInputError("growth.alpha must be positive")


@dataclass(frozen=True)
class JumpEnergyParams:
    """Surface energy on a jump set.

    The default kernel is ``k |Q+ - Q-|^r``.  A general frame-indifferent
    kernel ``g(Q+:Q-, Q+nu.nu, Q-nu.nu, Q+nu.Q-nu)`` may be supplied instead,
    optionally with ``kernel_grad`` returning the four partial derivatives.
    """
    k: float = 1.0
    r: float = 0.5
    kernel: Optional[Callable] = field(default=None, compare=False)
    kernel_grad: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidInputError("jump.k must be positive")
        if not 0 < self.r < 1:
            raise InvalidInputError("jump.r must lie strictly inside (0, 1) for existence of minimizers")


@dataclass(frozen=True)
class SmecticParams:
    B: float = 1.0
    q: float = 2 * math.pi
    s: float = 1.0
    a: float = -1.0
    b: float = 0.0
    c: float = 1.0
    k: float = 1.0
    r: float = 0.5
    K: float = 1.0
    p: float = 2.0       # 2: quadratic K/(2 s^2)|H|^2; (1, 2): subquadratic modification
    alpha: float = 0.1

    def __post_init__(self):
        for name in ("B", "q", "s", "c", "k", "K"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"smectic.{name} must be positive")
        if not 0 < self.r < 1:
            raise InvalidInputError("smectic.r must lie strictly inside (0, 1)")
        if not 1 < self.p <= 2:
            raise InvalidInputError("smectic.p must lie in (1, 2]")
        if self.p < 2 and not self.alpha > 0:
            raise InvalidInputError("smectic.alpha must be positive")


# ---------------------------------------------------------------- constant map

def frank_from_ldg(L: LdGElasticConstants, s: float) -> FrankConstants:
    """Frank constants of the uniaxial reduction with scalar order ``s``."""
    L1, L2, L3, L4, L5 = L.as_tuple()
    s2, s3 = s * s, s * s * s
    k1 = (L1 + L2 + 2 * L3) * s2 - 2.0 / 3.0 * L4 * s3
    k2 = 2 * L3 * s2 - 2.0 / 3.0 * L4 * s3
    k3 = (L1 + L2 + 2 * L3) * s2 + 4.0 / 3.0 * L4 * s3
    k4 = L2 * s2
    denom = 4 * (L3 + 2.0 / 3.0 * L4)
    if denom == 0:
        if L5 != 0:
            raise InvalidModelError("pitch undefined: L3 + 2 L4 / 3 = 0 with L5 != 0")
        q0 = 0.0
    else:
        q0 = L5 / denom
    return FrankConstants(k1, k2, k3, k4, q0)


# ---------------------------------------------------------------- Oseen-Frank

def _frank_parts(n, G):
    div = np.trace(G, axis1=-2, axis2=-1)
    curl = np.einsum("ijk,...kj->...i", EPS, G)
    return div, curl


def oseen_frank(n, G, K: FrankConstants):
    n, G = np.asarray(n, float), np.asarray(G, float)
    div, curl = _frank_parts(n, G)
    twist = np.einsum("...i,...i->...", n, curl) + K.q0
    bend = np.cross(n, curl)
    trg2 = np.einsum("...ij,...ji->...", G, G)
    return (K.K1 * div ** 2 + K.K2 * twist ** 2 + K.K3 * np.einsum("...i,...i->...", bend, bend)
            + (K.K2 + K.K4) * (trg2 - div ** 2))


def oseen_frank_grad(n, G, K: FrankConstants):
    n, G = np.asarray(n, float), np.asarray(G, float)
    div, curl = _frank_parts(n, G)
    twist = np.einsum("...i,...i->...", n, curl) + K.q0
    bend = np.cross(n, curl)
    trg2 = np.einsum("...ij,...ji->...", G, G)
    w = (K.K1 * div ** 2 + K.K2 * twist ** 2 + K.K3 * np.einsum("...i,...i->...", bend, bend)
         + (K.K2 + K.K4) * (trg2 - div ** 2))

    # d curl_i / d G_ab = eps_iba
    d_curl = 2 * K.K2 * twist[..., None] * n + 2 * K.K3 * np.cross(bend, n)
    dG = np.einsum("...i,iba->...ab", d_curl, EPS)
    dG = dG + (2 * (K.K1 - K.K2 - K.K4) * div)[..., None, None] * IDENTITY
    dG = dG + 2 * (K.K2 + K.K4) * np.swapaxes(G, -1, -2)
    dn = 2 * K.K2 * twist[..., None] * curl + 2 * K.K3 * np.cross(curl, bend)
    return w, dn, dG


def frank_bounds(K: FrankConstants) -> tuple[float, float]:
    """Extreme ratios ``W / |G|^2`` over gradients tangent to the sphere.

    Frame indifference makes the ratio independent of ``n``, so the quadratic
    form is diagonalized once at ``n = e3`` on the six-dimensional tangent
    space ``{G : n^T G = 0}``.  Requires ``q0 = 0``.
    """
    if K.q0 != 0:
        raise InvalidInputError("bounds are defined for q0 = 0")
    n = np.array([0.0, 0.0, 1.0])
    basis = []
    for i in range(2):
        for j in range(3):
            e = np.zeros((3, 3))
            e[i, j] = 1.0
            basis.append(e)
    m = np.zeros((6, 6))
    for a in range(6):
        for b in range(6):
            m[a, b] = 0.25 * (oseen_frank(n, basis[a] + basis[b], K)
                              - oseen_frank(n, basis[a] - basis[b], K))
    ev = np.linalg.eigvalsh(m)
    return float(ev[0]), float(ev[-1])


# ---------------------------------------------------------------- W_alpha

def _phi(w, m: GrowthModParams):
    # expm1/log1p keep the small-alpha limit W_alpha -> W free of cancellation
    return 2.0 / (m.p * m.alpha) * np.expm1(m.p / 2 * np.log1p(m.alpha * w))


def _check_w(w):
    if np.any(w < -1e-12):
        raise InvalidModelError("Frank energy negative: constants violate the Ericksen inequalities")
    return np.maximum(w, 0.0)


def w_alpha(n, G, K: FrankConstants, m: GrowthModParams):
    """Subquadratic modification ``2/(p alpha) ((1 + alpha W)^(p/2) - 1)``."""
    return _phi(_check_w(oseen_frank(n, G, K)), m)


def w_alpha_grad(n, G, K: FrankConstants, m: GrowthModParams):
    w, dn, dG = oseen_frank_grad(n, G, K)
    w = _check_w(w)
    dphi = (1.0 + m.alpha * w) ** (m.p / 2 - 1.0)
    return _phi(w, m), dphi[..., None] * dn, dphi[..., None, None] * dG


def w_alpha_scalar(w, m: GrowthModParams):
    """W_alpha as a function of the Frank value alone."""
    return _phi(np.asarray(w, float), m)


def growth_constants(K: FrankConstants, m: GrowthModParams):
    """Constants ``(C_alpha, C'_alpha)`` with ``C'(|G|^p - 1) <= W_alpha <= C |G|^p``.

    Uses the exact quadratic-form bounds ``c |G|^2 <= W <= C |G|^2``.  The
    upper constant is the large-gradient limit (the ratio increases towards
    it); the lower one is the infimum of a one-variable envelope, located by
    a log-spaced sweep and polished with a bounded scalar search.
    """
    lo, hi = frank_bounds(K)
    if lo <= 0:
        raise InvalidModelError("Frank form is not positive definite on tangent gradients")
    scale = 2.0 / (m.p * m.alpha)
    c_upper = scale * (m.alpha * hi) ** (m.p / 2)

    def ratio(log_u):
        t = 1.0 + np.exp(log_u)
        return _phi(lo * t * t, m) / (t ** m.p - 1.0)

    grid = np.linspace(-20, 20, 4001)
    vals = ratio(grid)
    i = int(np.argmin(vals))
    lo_b, hi_b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(ratio, bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": 1e-12})
    c_lower = min(float(vals[i]), float(res.fun), scale * (m.alpha * lo) ** (m.p / 2))
    return c_upper * (1 + 1e-9), c_lower * (1 - 1e-6)


def small_alpha_constant(m: GrowthModParams) -> float:
    """``c`` in ``|W_alpha - W| <= c alpha W^2`` (Taylor remainder, valid for all W >= 0)."""
    return (2.0 - m.p) / 4.0


# ---------------------------------------------------------------- LdG bulk

def ldg_bulk(Q, P: BulkParams):
    Q = np.asarray(Q, float)
    Q2 = Q @ Q
    tr2 = np.trace(Q2, axis1=-2, axis2=-1)
    tr3 = np.einsum("...ij,...ji->...", Q2, Q)
    tr4 = np.einsum("...ij,...ji->...", Q2, Q2)
    val = P.a * tr2 - 2.0 * P.b / 3.0 * tr3 + P.c * tr4
    if P.barrier:
        val = val + _barrier(Q, P.barrier)[0]
    return val


def ldg_bulk_grad(Q, P: BulkParams):
    Q = np.asarray(Q, float)
    Q2 = Q @ Q
    Q3 = Q2 @ Q
    tr2 = np.trace(Q2, axis1=-2, axis2=-1)
    tr3 = np.trace(Q3, axis1=-2, axis2=-1)
    tr4 = np.einsum("...ij,...ji->...", Q2, Q2)
    val = P.a * tr2 - 2.0 * P.b / 3.0 * tr3 + P.c * tr4
    dQ = (2 * P.a * np.swapaxes(Q, -1, -2) - 2 * P.b * np.swapaxes(Q2, -1, -2)
          + 4 * P.c * np.swapaxes(Q3, -1, -2))
    if P.barrier:
        b, db = _barrier(Q, P.barrier)
        val, dQ = val + b, dQ + db
    return val, dQ


def _barrier(Q, kappa):
    # -kappa ln det(Q + I/3) = -kappa sum_i ln(lambda_i + 1/3)
    A = Q + IDENTITY / 3.0
    sign, logdet = np.linalg.slogdet(A)
    lam_min = np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, -1, -2)))[..., 0]
    val = np.where(lam_min > 0, -kappa * logdet, np.inf)
    safe = np.where((lam_min > 0)[..., None, None], A, IDENTITY)
    grad = -kappa * np.swapaxes(np.linalg.inv(safe), -1, -2)
    return val, grad


def bulk_uniaxial(s, P: BulkParams):
    """Quartic bulk energy restricted to uniaxial tensors of order ``s``."""
    s = np.asarray(s, float)
    return 2 * P.a / 3 * s ** 2 - 4 * P.b / 27 * s ** 3 + 2 * P.c / 9 * s ** 4


def bulk_uniaxial_ds(s, P: BulkParams):
    s = np.asarray(s, float)
    return 4 * P.a / 3 * s - 4 * P.b / 9 * s ** 2 + 8 * P.c / 9 * s ** 3


@dataclass(frozen=True)
class BulkMinimum:
    s: float
    nematic: bool


def bulk_minimizer_s(P: BulkParams) -> BulkMinimum:
    """Minimizing uniaxial order: ``(b + sqrt(b^2 - 24 a c)) / 4c`` on the nematic branch."""
    if not P.nematic:
        return BulkMinimum(0.0, False)
    return BulkMinimum((P.b + math.sqrt(P.b ** 2 - 24 * P.a * P.c)) / (4 * P.c), True)


# ---------------------------------------------------------------- LdG elastic

def _elastic_invariants(Q, H):
    d = np.einsum("...ijj->...i", H)
    I1 = np.einsum("...i,...i->...", d, d)
    I2 = np.einsum("...ikj,...ijk->...", H, H)
    I3 = np.einsum("...ijk,...ijk->...", H, H)
    I4 = np.einsum("...lk,...ijl,...ijk->...", Q, H, H)
    I5 = np.einsum("ijk,...il,...jlk->...", EPS, Q, H)
    return d, (I1, I2, I3, I4, I5)


def ldg_elastic(Q, H, L: LdGElasticConstants):
    Q, H = np.asarray(Q, float), np.asarray(H, float)
    _, inv = _elastic_invariants(Q, H)
    return sum(li * ii for li, ii in zip(L.as_tuple(), inv))


def ldg_elastic_grad(Q, H, L: LdGElasticConstants):
    Q, H = np.asarray(Q, float), np.asarray(H, float)
    L1, L2, L3, L4, L5 = L.as_tuple()
    d, inv = _elastic_invariants(Q, H)
    val = sum(li * ii for li, ii in zip(L.as_tuple(), inv))
    dH = 2 * L3 * H
    if L1:
        dH = dH + 2 * L1 * np.einsum("...a,bc->...abc", d, IDENTITY)
    if L2:
        dH = dH + 2 * L2 * np.swapaxes(H, -1, -2)
    dQ = np.zeros_like(Q)
    if L4:
        dH = dH + L4 * (np.einsum("...abk,...kc->...abc", H, Q)
                        + np.einsum("...abl,...cl->...abc", H, Q))
        dQ = dQ + L4 * np.einsum("...ijl,...ijk->...lk", H, H)
    if L5:
        dQ = dQ + L5 * np.einsum("ijk,...jlk->...il", EPS, H)
        dH = dH + L5 * np.einsum("ijk,...il->...jlk", EPS, Q)
    return val, dQ, dH


# ---------------------------------------------------------------- Ericksen

def ericksen_density(s, gs, n, G, K: float, P: BulkParams):
    """``K (|grad s|^2 + 2 s^2 |grad n|^2) + psi_B(s)``."""
    s, gs, G = np.asarray(s, float), np.asarray(gs, float), np.asarray(G, float)
    return (K * (np.sum(gs * gs, axis=-1) + 2 * s ** 2 * np.sum(G * G, axis=(-2, -1)))
            + bulk_uniaxial(s, P))


def ericksen_density_grad(s, gs, n, G, K: float, P: BulkParams):
    s, gs, G = np.asarray(s, float), np.asarray(gs, float), np.asarray(G, float)
    g2 = np.sum(G * G, axis=(-2, -1))
    val = K * (np.sum(gs * gs, axis=-1) + 2 * s ** 2 * g2) + bulk_uniaxial(s, P)
    ds = 4 * K * s * g2 + bulk_uniaxial_ds(s, P)
    return val, ds, 2 * K * gs, np.zeros_like(np.asarray(n, float)), 4 * K * (s ** 2)[..., None, None] * G


# ---------------------------------------------------------------- jumps

def jump_invariants(n_plus, n_minus, nu, tol: float = 1e-12):
    """``((n+.n-)^2, (n+.nu)^2, (n-.nu)^2, (n+.n-)(n+.nu)(n-.nu))``, checked to lie in D."""
    a = float(np.dot(n_plus, n_minus))
    b = float(np.dot(n_plus, nu))
    c = float(np.dot(n_minus, nu))
    inv = (a * a, b * b, c * c, a * b * c)
    al, be, ga, de = inv
    if abs(de * de - al * be * ga) > tol or al + be + ga - 2 * de > 1 + tol:
        raise InvalidInputError("invariants outside the admissible domain; are the vectors unit?")
    return inv


def director_jump_energy(n_plus, n_minus, kprime: float, r: float):
    """Orientation-only kernel ``k' (1 - (n+.n-)^2)^(r/2)``."""
    c = np.einsum("...i,...i->...", np.asarray(n_plus, float), np.asarray(n_minus, float))
    return kprime * np.maximum(1.0 - c * c, 0.0) ** (r / 2)


def _qjump_invariants(Qp, Qm, nu):
    Qpn = Qp @ nu
    Qmn = Qm @ nu
    return (np.sum(Qp * Qm, axis=(-2, -1)), Qpn @ nu, Qmn @ nu, np.sum(Qpn * Qmn, axis=-1))


def jump_energy(Qp, Qm, nu, J: JumpEnergyParams):
    """Surface energy density ``F(Q+, Q-, nu)``."""
    Qp, Qm = np.asarray(Qp, float), np.asarray(Qm, float)
    if J.kernel is not None:
        return J.kernel(*_qjump_invariants(Qp, Qm, np.asarray(nu, float)))
    d = Qp - Qm
    return J.k * np.sqrt(np.sum(d * d, axis=(-2, -1))) ** J.r


def jump_energy_grad(Qp, Qm, nu, J: JumpEnergyParams):
    """Density and its gradients w.r.t. ``Q+`` and ``Q-`` (zero at ``Q+ = Q-``)."""
    Qp, Qm = np.asarray(Qp, float), np.asarray(Qm, float)
    nu = np.asarray(nu, float)
    if J.kernel is not None:
        if J.kernel_grad is None or Qp.ndim != 2:
            raise InvalidInputError("general-kernel gradients need kernel_grad and a single face")
        inv = _qjump_invariants(Qp, Qm, nu)
        g1, g2, g3, g4 = J.kernel_grad(*inv)
        nn = np.outer(nu, nu)
        dp = g1 * Qm + g2 * nn + g4 * np.outer(Qm @ nu, nu)
        dm = g1 * Qp + g3 * nn + g4 * np.outer(Qp @ nu, nu)
        return J.kernel(*inv), dp, dm
    d = Qp - Qm
    norm = np.sqrt(np.sum(d * d, axis=(-2, -1)))
    val = J.k * norm ** J.r
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(norm > 0, J.k * J.r * norm ** (J.r - 2), 0.0)
    g = fac[..., None, None] * d
    return val, g, -g


# ---------------------------------------------------------------- smectic

def smectic_elastic(H, S: SmecticParams):
    h2 = np.sum(np.asarray(H, float) ** 2, axis=(-3, -2, -1))
    w = S.K / (2 * S.s ** 2) * h2
    if S.p == 2:
        return w
    return 2.0 / (S.p * S.alpha) * ((1 + S.alpha * w) ** (S.p / 2) - 1)


def smectic_elastic_grad(H, S: SmecticParams):
    H = np.asarray(H, float)
    h2 = np.sum(H ** 2, axis=(-3, -2, -1))
    w = S.K / (2 * S.s ** 2) * h2
    dw = S.K / S.s ** 2 * H
    if S.p == 2:
        return w, dw
    val = 2.0 / (S.p * S.alpha) * ((1 + S.alpha * w) ** (S.p / 2) - 1)
    return val, ((1 + S.alpha * w) ** (S.p / 2 - 1))[..., None, None, None] * dw


def smectic_coercivity(S: SmecticParams, samples: int = 4001) -> tuple[float, float]:
    """``(C, D)`` with ``psi_E(Q, H) >= C |H|^p + D``."""
    kq = S.K / (2 * S.s ** 2)
    if S.p == 2:
        return kq, 0.0
    t = np.logspace(-6, 8, samples)
    val = 2.0 / (S.p * S.alpha) * ((1 + S.alpha * kq * t * t) ** (S.p / 2) - 1)
    C = 2.0 / (S.p * S.alpha) * (S.alpha * kq) ** (S.p / 2)
    D = float(np.min(val - C * t ** S.p))
    return C, min(D, -2.0 / (S.p * S.alpha))


def _check_uniaxial_order(Q, s, tol=1e-8):
    Q = np.asarray(Q, float)
    flat = Q.reshape(-1, 3, 3)
    for m in flat:
        lam, _ = spectral(m)
        target = np.array([2 * s / 3, -s / 3, -s / 3])
        if np.abs(lam - target).max() > tol * (1 + abs(s)):
            raise InvalidInputError(f"Q is not uniaxial with order s = {s}")


def smectic_density(Q, H, rho, Hrho, S: SmecticParams, check: bool = True):
    """``psi_E + B |D^2 rho + q^2/(3s) (3Q + s I) rho|^2 + f(rho)``."""
    return smectic_density_grad(Q, H, rho, Hrho, S, check=check)[0]


def smectic_density_grad(Q, H, rho, Hrho, S: SmecticParams, check: bool = True):
    Q, H = np.asarray(Q, float), np.asarray(H, float)
    rho, Hrho = np.asarray(rho, float), np.asarray(Hrho, float)
    if check:
        _check_uniaxial_order(Q, S.s)
    A = S.q ** 2 / (3 * S.s) * (3 * Q + S.s * IDENTITY)
    M = Hrho + A * rho[..., None, None]
    e, dH = smectic_elastic_grad(H, S)
    f = S.a * rho ** 2 / 2 + S.b * rho ** 3 / 3 + S.c * rho ** 4 / 4
    df = S.a * rho + S.b * rho ** 2 + S.c * rho ** 3
    val = e + S.B * np.sum(M * M, axis=(-2, -1)) + f
    dQ = 2 * S.B * M * (S.q ** 2 / S.s) * rho[..., None, None]
    drho = 2 * S.B * np.sum(M * A, axis=(-2, -1)) + df
    dHrho = 2 * S.B * M
    return val, dQ, dH, drho, dHrho


def kleman_parodi_density(n, G, gphi, K: FrankConstants, Bpar: float, Bperp: float):
    return kleman_parodi_density_grad(n, G, gphi, K, Bpar, Bperp)[0]


def kleman_parodi_density_grad(n, G, gphi, K: FrankConstants, Bpar: float, Bperp: float):
    """Frank energy plus ``1/2 B (n - grad phi).(n - grad phi)``, ``B = Bperp I + (Bpar - Bperp) n n``."""
    n, gphi = np.asarray(n, float), np.asarray(gphi, float)
    w, dn, dG = oseen_frank_grad(n, G, K)
    d = n - gphi
    nd = np.sum(n * d, axis=-1)
    val = w + 0.5 * (Bperp * np.sum(d * d, axis=-1) + (Bpar - Bperp) * nd ** 2)
    dB = (Bpar - Bperp) * nd[..., None]
    dn = dn + Bperp * d + dB * (d + n)
    dgphi = -(Bperp * d + dB * n)
    return val, dn, dG, dgphi


# ---------------------------------------------------------------- elastomer

def elastomer_density(A, mu: float, a: float):
    """Relaxed nematic-elastomer energy ``mu/2 (a^(-2/3) v1^2 + a^(1/3) (v2^2 + v3^2))``.

    Evaluation only; ``v1 >= v2 >= v3`` are the singular values of ``A``.
    """
    v = np.linalg.svd(np.asarray(A, float), compute_uv=False)
    return mu / 2 * (a ** (-2.0 / 3.0) * v[..., 0] ** 2 + a ** (1.0 / 3.0) * (v[..., 1] ** 2 + v[..., 2] ** 2))
