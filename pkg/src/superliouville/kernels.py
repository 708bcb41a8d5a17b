"""Hot inner loops: finite-difference stencils, cubic-convolution sampling
and the direct Cauchy-kernel sum.

Every kernel exists twice, once as a numba ``@njit`` function and once as
vectorised numpy.  The public wrappers dispatch on
:func:`superliouville._backend.get_backend`; both paths compute the same
discrete quantity and are cross-checked in the test suite.

Arrays are indexed ``a[i, j]`` with ``i`` running along ``x1`` and ``j``
along ``x2``.
"""
import math

import numpy as np

from ._backend import HAVE_NUMBA, get_backend

if HAVE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover
    njit = prange = None

_nb_opts = {"cache": True, "nogil": True}


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------
if HAVE_NUMBA:

    @njit(**_nb_opts)
    def _laplacian_nb(u, h):
        nx, ny = u.shape
        out = np.zeros_like(u)
        inv = 1.0 / (h * h)
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                out[i, j] = (u[i + 1, j] + u[i - 1, j] + u[i, j + 1]
                             + u[i, j - 1] - 4.0 * u[i, j]) * inv
        return out

    @njit(**_nb_opts)
    def _gradient_nb(a, h):
        nx, ny = a.shape
        d1 = np.empty_like(a)
        d2 = np.empty_like(a)
        c = 0.5 / h
        for j in range(ny):
            d1[0, j] = (-3.0 * a[0, j] + 4.0 * a[1, j] - a[2, j]) * c
            d1[nx - 1, j] = (3.0 * a[nx - 1, j] - 4.0 * a[nx - 2, j] + a[nx - 3, j]) * c
            for i in range(1, nx - 1):
                d1[i, j] = (a[i + 1, j] - a[i - 1, j]) * c
        for i in range(nx):
            d2[i, 0] = (-3.0 * a[i, 0] + 4.0 * a[i, 1] - a[i, 2]) * c
            d2[i, ny - 1] = (3.0 * a[i, ny - 1] - 4.0 * a[i, ny - 2] + a[i, ny - 3]) * c
            for j in range(1, ny - 1):
                d2[i, j] = (a[i, j + 1] - a[i, j - 1]) * c
        return d1, d2

    @njit(**_nb_opts)
    def _dirac_nb(f, g, h):
        f1, f2 = _gradient_nb(f, h)
        g1, g2 = _gradient_nb(g, h)
        out = np.empty((2,) + f.shape, dtype=np.complex128)
        nx, ny = f.shape
        for i in range(nx):
            for j in range(ny):
                out[0, i, j] = g1[i, j] + 1j * g2[i, j]
                out[1, i, j] = -(f1[i, j] - 1j * f2[i, j])
        return out

    @njit(**_nb_opts)
    def _keys(t):
        t = abs(t)
        if t <= 1.0:
            return (1.5 * t - 2.5) * t * t + 1.0
        if t < 2.0:
            return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
        return 0.0

    @njit(**_nb_opts)
    def _interp_nb(padded, ox, oy, h, px, py):
        nx = padded.shape[0] - 2
        ny = padded.shape[1] - 2
        out = np.empty(px.shape[0], dtype=padded.dtype)
        for p in range(px.shape[0]):
            tx = (px[p] - ox) / h
            ty = (py[p] - oy) / h
            i0 = min(max(int(math.floor(tx)), 0), nx - 2)
            j0 = min(max(int(math.floor(ty)), 0), ny - 2)
            fx = tx - i0
            fy = ty - j0
            acc = padded[0, 0] * 0.0
            for a in range(4):
                wx = _keys(fx - (a - 1))
                if wx == 0.0:
                    continue
                for b in range(4):
                    wy = _keys(fy - (b - 1))
                    if wy == 0.0:
                        continue
                    acc += wx * wy * padded[i0 + a, j0 + b]
            out[p] = acc
        return out

    @njit(parallel=True, **_nb_opts)
    def _cauchy_direct_nb(f, g, w, ox, oy, h, tx, ty):
        nx, ny = f.shape
        nt = tx.shape[0]
        xf = np.zeros(nt, dtype=np.complex128)
        xg = np.zeros(nt, dtype=np.complex128)
        for p in prange(nt):
            af = 0j
            ag = 0j
            for k in range(nx):
                dx = tx[p] - (ox + k * h)
                for l in range(ny):
                    dy = ty[p] - (oy + l * h)
                    r2 = dx * dx + dy * dy
                    if r2 == 0.0:
                        continue
                    wk = w[k, l] / r2
                    af += wk * (dx + 1j * dy) * g[k, l]
                    ag -= wk * (dx - 1j * dy) * f[k, l]
            xf[p] = af
            xg[p] = ag
        return xf, xg


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------
def _laplacian_np(u, h):
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
                       - 4.0 * u[1:-1, 1:-1]) / (h * h)
    return out


def _gradient_np(a, h):
    return (np.gradient(a, h, axis=0, edge_order=2),
            np.gradient(a, h, axis=1, edge_order=2))


def _dirac_np(f, g, h):
    f1, f2 = _gradient_np(f, h)
    g1, g2 = _gradient_np(g, h)
    return np.stack([g1 + 1j * g2, -(f1 - 1j * f2)])


def _keys_np(t):
    t = np.abs(t)
    return np.where(
        t <= 1.0,
        (1.5 * t - 2.5) * t * t + 1.0,
        np.where(t < 2.0, ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0, 0.0),
    )


def _interp_np(padded, ox, oy, h, px, py):
    nx = padded.shape[0] - 2
    ny = padded.shape[1] - 2
    tx = (px - ox) / h
    ty = (py - oy) / h
    i0 = np.clip(np.floor(tx).astype(np.int64), 0, nx - 2)
    j0 = np.clip(np.floor(ty).astype(np.int64), 0, ny - 2)
    fx = tx - i0
    fy = ty - j0
    out = np.zeros(px.shape, dtype=padded.dtype)
    for a in range(4):
        wx = _keys_np(fx - (a - 1))
        for b in range(4):
            out += wx * _keys_np(fy - (b - 1)) * padded[i0 + a, j0 + b]
    return out


def _cauchy_direct_np(f, g, w, ox, oy, h, tx, ty, tile=256):
    nx, ny = f.shape
    yx = ox + h * np.arange(nx)
    yy = oy + h * np.arange(ny)
    wf = (w * f).ravel()
    wg = (w * g).ravel()
    sx = np.repeat(yx, ny)
    sy = np.tile(yy, nx)
    xf = np.empty(tx.shape, dtype=np.complex128)
    xg = np.empty(tx.shape, dtype=np.complex128)
    for start in range(0, tx.size, tile):
        sl = slice(start, start + tile)
        dx = tx[sl, None] - sx[None, :]
        dy = ty[sl, None] - sy[None, :]
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(r2 == 0.0, 0.0, 1.0 / r2)
        xf[sl] = ((dx + 1j * dy) * inv) @ wg
        xg[sl] = -(((dx - 1j * dy) * inv) @ wf)
    return xf, xg


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------
def _nb():
    return HAVE_NUMBA and get_backend() == "numba"


def laplacian(u, h):
    """Five-point Laplacian; boundary rows and columns are left at zero."""
    u = np.ascontiguousarray(u)
    if np.iscomplexobj(u):
        return laplacian(u.real, h) + 1j * laplacian(u.imag, h)
    return _laplacian_nb(u, float(h)) if _nb() else _laplacian_np(u, h)


def gradient(a, h):
    """Central differences inside, second-order one-sided on the edges."""
    a = np.ascontiguousarray(a)
    if _nb():
        return _gradient_nb(a, float(h))
    return _gradient_np(a, h)


def dirac(f, g, h):
    """Flat Dirac operator ``2(dg/dzbar, -df/dz)`` with the gradient stencils."""
    f = np.ascontiguousarray(f, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    return _dirac_nb(f, g, float(h)) if _nb() else _dirac_np(f, g, h)


def pad_for_interp(values):
    """Append one ghost layer per side using the cubic-convolution end rule
    ``f[-1] = 3 f[0] - 3 f[1] + f[2]``."""
    v = np.asarray(values)
    p = np.empty((v.shape[0] + 2, v.shape[1] + 2), dtype=v.dtype)
    p[1:-1, 1:-1] = v
    p[0, 1:-1] = 3 * v[0] - 3 * v[1] + v[2]
    p[-1, 1:-1] = 3 * v[-1] - 3 * v[-2] + v[-3]
    p[:, 0] = 3 * p[:, 1] - 3 * p[:, 2] + p[:, 3]
    p[:, -1] = 3 * p[:, -2] - 3 * p[:, -3] + p[:, -4]
    return p


def interp_cubic(values, ox, oy, h, px, py):
    """Keys cubic-convolution (a = -1/2) sampling of node values at points."""
    padded = pad_for_interp(values)
    px = np.ascontiguousarray(px, dtype=np.float64).ravel()
    py = np.ascontiguousarray(py, dtype=np.float64).ravel()
    if _nb():
        return _interp_nb(padded, float(ox), float(oy), float(h), px, py)
    return _interp_np(padded, ox, oy, h, px, py)


def cauchy_direct(f, g, w, ox, oy, h, tx, ty):
    """Punctured direct sums ``sum_y w(y) (x - y) . (f, g)(y) / |x - y|^2``.

    ``(a e1 + b e2)`` acting on ``(f, g)`` gives ``((a + ib) g, -(a - ib) f)``,
    so the two components reduce to complex Cauchy-type sums.  The node
    ``y = x`` is skipped.
    """
    f = np.ascontiguousarray(f, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.float64)
    tx = np.ascontiguousarray(tx, dtype=np.float64).ravel()
    ty = np.ascontiguousarray(ty, dtype=np.float64).ravel()
    if _nb():
        return _cauchy_direct_nb(f, g, w, float(ox), float(oy), float(h), tx, ty)
    return _cauchy_direct_np(f, g, w, ox, oy, h, tx, ty)
