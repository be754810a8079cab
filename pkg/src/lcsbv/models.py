"""Energy models: a named density plus parameters, in the form the grid assembles.

A model maps a field value ``u`` and its physical gradient ``g`` (both batched
over cells or nodes) to ``(bulk, elastic)`` density arrays, and, through
``density_grad``, to the partial derivatives of their sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import energy as en
from .errors import InvalidInputError, InvalidModelError
from .qtensor import IDENTITY


class EnergyModel:
    name = "model"
    field_kind = "director"
    needs_hessian = False

    def density(self, u, g):
        bulk, elastic, _, _ = self.density_grad(u, g)
        return bulk, elastic

    def density_grad(self, u, g):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"name": self.name, **self.params()}


@dataclass
class FrankModel(EnergyModel):
    K: en.FrankConstants = field(default_factory=en.FrankConstants.one_constant)
    name = "oseen-frank"

    def density_grad(self, n, G):
        w, dn, dG = en.oseen_frank_grad(n, G, self.K)
        return np.zeros_like(w), w, dn, dG

    def params(self):
        return {"frank": asdict(self.K)}


@dataclass
class WAlphaModel(EnergyModel):
    K: en.FrankConstants = field(default_factory=en.FrankConstants.one_constant)
    growth: en.GrowthModParams = field(default_factory=en.GrowthModParams)
    name = "w-alpha"

    def density_grad(self, n, G):
        w, dn, dG = en.w_alpha_grad(n, G, self.K, self.growth)
        return np.zeros_like(w), w, dn, dG

    def params(self):
        return {"frank": asdict(self.K), "growth": asdict(self.growth)}


@dataclass
class LdGModel(EnergyModel):
    """Landau-de Gennes: quartic bulk (optional) plus the L1..L5 elastic form.

    ``bulk_scale`` multiplies the bulk term; ``allow_mixed`` must be set to
    minimize with ``L4`` or ``L5`` nonzero (the energy is then unbounded below).
    """
    L: en.LdGElasticConstants = field(default_factory=en.LdGElasticConstants)
    bulk: Optional[en.BulkParams] = None
    bulk_scale: float = 1.0
    allow_mixed: bool = False
    name = "landau-de-gennes"
    field_kind = "qtensor"

    def density_grad(self, Q, H):
        e, dQ, dH = en.ldg_elastic_grad(Q, H, self.L)
        if self.bulk is not None and self.bulk_scale:
            b, db = en.ldg_bulk_grad(Q, self.bulk)
            return self.bulk_scale * b, e, dQ + self.bulk_scale * db, dH
        return np.zeros_like(e), e, dQ, dH

    def check_minimizable(self):
        if not self.L.quadratic and not self.allow_mixed:
            raise InvalidModelError("L4/L5 terms are evaluation-only; set allow_mixed to minimize")

    def params(self):
        out = {"elastic": asdict(self.L), "bulk_scale": self.bulk_scale}
        if self.bulk is not None:
            out["bulk"] = asdict(self.bulk)
        return out


@dataclass
class UniaxialLift(EnergyModel):
    """A Q-tensor model evaluated on ``Q = s (n n - I/3)`` with fixed ``s``.

    The grid lifts node directors to Q-tensors before differencing, so the
    discrete energy is the Q-model's energy of the lifted field.  With
    ``interpolation="geodesic"`` (1D, one-constant only) the director instead
    rotates at constant speed inside each cell; that ansatz is conforming, so
    bisecting every cell can only lower the minimal discrete energy.
    """
    inner: LdGModel = field(default_factory=LdGModel)
    s: float = 1.0
    interpolation: str = "linear"
    name = "uniaxial-lift"
    field_kind = "director"

    def __post_init__(self):
        if self.interpolation not in ("linear", "geodesic"):
            raise InvalidModelError("interpolation must be 'linear' or 'geodesic'")
        if self.interpolation == "geodesic":
            L = self.inner.L.as_tuple()
            if L[0] or L[1] or L[3] or L[4]:
                raise InvalidModelError("geodesic interpolation needs the one-constant form (only L3)")

    def params(self):
        return {"s": self.s, "inner": self.inner.describe(), "interpolation": self.interpolation}


@dataclass
class EricksenModel(EnergyModel):
    """Ericksen ``(s, n)`` model; field values are ``(s, n1, n2, n3)``."""
    K: float = 1.0
    bulk: Optional[en.BulkParams] = None
    name = "ericksen"
    field_kind = "ericksen"

    def density_grad(self, u, g):
        s, n = u[..., 0], u[..., 1:]
        gs, G = g[..., 0, :], g[..., 1:, :]
        P = self.bulk if self.bulk is not None else _ZERO_BULK
        val, ds, dgs, dn, dG = en.ericksen_density_grad(s, gs, n, G, self.K, P)
        bulk = en.bulk_uniaxial(s, P)
        du = np.concatenate([ds[..., None], dn], axis=-1)
        dg = np.concatenate([dgs[..., None, :], dG], axis=-2)
        return bulk, val - bulk, du, dg

    def params(self):
        out = {"K": self.K}
        if self.bulk is not None:
            out["bulk"] = asdict(self.bulk)
        return out


class _ZeroBulk:
    a = b = c = 0.0
    barrier = 0.0


_ZERO_BULK = _ZeroBulk()


@dataclass
class SmecticModel(EnergyModel):
    """Density modulation ``rho`` with the director frozen along ``n0``.

    With ``Q`` constant its gradient vanishes, leaving
    ``B |D^2 rho + q^2 n0 n0 rho|^2 + f(rho)``.
    """
    S: en.SmecticParams = field(default_factory=en.SmecticParams)
    n0: tuple = (0.0, 0.0, 1.0)
    name = "smectic"
    field_kind = "scalar"
    needs_hessian = True

    def q_tensor(self):
        n = np.asarray(self.n0, float)
        return self.S.s * (np.outer(n, n) - IDENTITY / 3)

    def density_grad(self, rho, hess):
        Q = np.broadcast_to(self.q_tensor(), rho.shape + (3, 3))
        H = np.zeros(rho.shape + (3, 3, 3))
        val, _, _, drho, dhess = en.smectic_density_grad(Q, H, rho, hess, self.S, check=False)
        f = self.S.a * rho ** 2 / 2 + self.S.b * rho ** 3 / 3 + self.S.c * rho ** 4 / 4
        return f, val - f, drho, dhess

    def params(self):
        return {"smectic": asdict(self.S), "n0": list(self.n0)}


def check_compatible(model: EnergyModel, kind: str):
    if model.field_kind != kind:
        raise InvalidInputError(f"model '{model.name}' needs a {model.field_kind} field, got {kind}")
