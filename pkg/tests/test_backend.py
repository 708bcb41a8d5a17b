import numpy as np
import pytest

from superliouville import _backend, kernels

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba unavailable")


def both(fn, *args):
    prev = _backend.set_backend("numba")
    try:
        a = fn(*args)
        _backend.set_backend("numpy")
        b = fn(*args)
    finally:
        _backend.set_backend(prev)
    return a, b


def test_set_backend_validation():
    with pytest.raises(ValueError):
        _backend.set_backend("cuda")
    prev = _backend.set_backend("numpy")
    assert _backend.get_backend() == "numpy"
    assert _backend.set_backend(prev) == "numpy"


def test_threads_cap():
    assert _backend.set_threads(1) == 1


def test_stencil_parity(rng):
    u = rng.standard_normal((37, 29))
    a, b = both(kernels.laplacian, u, 0.1)
    assert np.allclose(a, b, atol=1e-10)
    a, b = both(kernels.gradient, u, 0.1)
    assert np.allclose(a[0], b[0], atol=1e-12) and np.allclose(a[1], b[1], atol=1e-12)
    f = u + 1j * rng.standard_normal(u.shape)
    g = rng.standard_normal(u.shape) - 1j * u
    a, b = both(kernels.dirac, f, g, 0.1)
    assert np.allclose(a, b, atol=1e-12)


def test_interp_parity(rng):
    v = rng.standard_normal((21, 17))
    px = rng.uniform(0, 2.0, 300)
    py = rng.uniform(-1, 0.6, 300)
    a, b = both(kernels.interp_cubic, v, 0.0, -1.0, 0.1, px, py)
    assert np.allclose(a, b, atol=1e-13)


def test_cauchy_parity(rng):
    f = rng.standard_normal((15, 13)) + 1j * rng.standard_normal((15, 13))
    g = rng.standard_normal((15, 13)) + 1j * rng.standard_normal((15, 13))
    w = np.full((15, 13), 0.01)
    tx = rng.uniform(-1, 1, 40)
    ty = rng.uniform(-1, 1, 40)
    a, b = both(kernels.cauchy_direct, f, g, w, -0.7, -0.6, 0.1, tx, ty)
    assert np.allclose(a[0], b[0], atol=1e-11) and np.allclose(a[1], b[1], atol=1e-11)
