import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lcsbv", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lcsbv")


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_unit(rng, size=None):
    shape = (3,) if size is None else (size, 3)
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_q(rng, scale=1.0):
    m = rng.normal(size=(3, 3)) * scale
    m = 0.5 * (m + m.T)
    return m - np.trace(m) / 3 * np.eye(3)


def random_qgrad(rng, scale=1.0):
    """Gradient ``H[i, j, k] = d_k Q_ij`` symmetric traceless in ``(i, j)``."""
    H = rng.normal(size=(3, 3, 3)) * scale
    H = 0.5 * (H + H.transpose(1, 0, 2))
    return H - np.einsum("iik->k", H)[None, None, :] * np.eye(3)[:, :, None] / 3


def central_diff(fun, x, h=1e-5):
    """Central-difference gradient of a scalar function of an array."""
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = fun(x)
        flat[i] = old - h
        fm = fun(x)
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return g


def richardson_diff(fun, x, h=1e-3):
    """Fourth-order gradient: central differences at ``h`` and ``h/2`` extrapolated.

    The larger step keeps roundoff small when the function value dwarfs the slope.
    """
    return (4 * central_diff(fun, x, h / 2) - central_diff(fun, x, h)) / 3


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
