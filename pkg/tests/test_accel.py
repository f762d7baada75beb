import numpy as np
import pytest

from discscat import _accel, _kernels
from discscat.jost import jost_batch
from discscat.model import DensityProfile, NumericsConfig

from conftest import bump_potential


@pytest.fixture
def backend():
    prev = _accel.backend()
    yield _accel.set_backend
    _accel.set_backend(prev)


def test_unknown_backend_rejected(backend):
    with pytest.raises(ValueError):
        backend("fortran")


def test_fourier_sum_backends_agree(backend):
    rng = np.random.default_rng(3)
    lam = np.linspace(-10, 10, 301)
    wg = rng.normal(size=301) + 1j * rng.normal(size=301)
    t = np.linspace(-4, 4, 77)
    ref = (wg[None, :] * np.exp(1j * np.outer(t, lam))).sum(axis=1)
    out = {}
    for name in ("numpy", "numba"):
        backend(name)
        out[name] = _kernels.fourier_sum(lam, wg, t)
    assert np.allclose(out["numpy"], ref, atol=1e-10)
    assert np.allclose(out["numba"], ref, atol=1e-10)


def test_jost_backends_agree(backend):
    p = DensityProfile(2.0, 1.0)
    q = bump_potential(step=0.01)
    cfg = NumericsConfig().resolve(p, q)
    lams = np.array([0.7, 3.0, 11.0, 0.9j])
    res = {}
    for name in ("numpy", "numba"):
        backend(name)
        res[name] = jost_batch(p, q, lams, cfg)
    # roundoff can steer the adaptive step sequence, so agree to well below quad_tol
    for a, b in zip(res["numpy"], res["numba"]):
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)
