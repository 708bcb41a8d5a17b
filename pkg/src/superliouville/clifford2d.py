"""Two-dimensional Clifford algebra acting on 2-component complex spinors.

A spinor is an array whose leading axis has length 2, holding the positive
and negative half-spinor components ``(f, g)``; trailing axes (if any) index
grid nodes.  Vectors are pairs ``(x1, x2)`` of scalars or node arrays.

The frame vectors act by the fixed matrices

    e1 = [[0, 1], [-1, 0]],    e2 = [[0, i], [i, 0]],

so ``e1.(f, g) = (g, -f)`` and ``e2.(f, g) = (i g, i f)``.  Complex
coefficients extend the action complex-linearly, which is what the
quadratic differential built from ``dz = e1 + i e2`` needs.
"""
import numpy as np

E1 = np.array([[0, 1], [-1, 0]], dtype=np.complex128)
E2 = np.array([[0, 1j], [1j, 0]], dtype=np.complex128)


def spinor(f, g=0.0):
    """Build a spinor array from its two components."""
    return np.stack(np.broadcast_arrays(np.asarray(f, dtype=np.complex128),
                                        np.asarray(g, dtype=np.complex128)))


def clifford_mul(v, psi):
    """Clifford product ``(v1 e1 + v2 e2) . psi``.

    Parameters
    ----------
    v : pair
        Components ``(v1, v2)``.  Real or complex scalars, or arrays that
        broadcast against ``psi[0]``.
    psi : array_like, shape (2, ...)
        Spinor or spinor field.

    Returns
    -------
    ndarray, shape (2, ...)
    """
    a, b = v
    f, g = psi[0], psi[1]
    return np.stack([(a + 1j * b) * g, (-a + 1j * b) * f])


def inner(psi, phi):
    """Hermitian product ``f_psi conj(f_phi) + g_psi conj(g_phi)``.

    Linear in the first slot, conjugate-linear in the second.  Works
    nodewise on fields.
    """
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    return psi[0] * np.conj(phi[0]) + psi[1] * np.conj(phi[1])


def norm2(psi):
    """``<psi, psi>`` as a real array."""
    psi = np.asarray(psi)
    return np.abs(psi[0]) ** 2 + np.abs(psi[1]) ** 2


def killing_spinor(v, x):
    """Killing spinor of the round sphere in the stereographic chart,
    ``(v + x.v) / sqrt(1 + |x|^2)``.

    ``v`` is a constant spinor (unit norm recommended); ``x`` is a point or a
    pair of coordinate arrays.
    """
    v = np.asarray(v, dtype=np.complex128)
    x1, x2 = (np.asarray(c, dtype=np.float64) for c in x)
    shape = np.broadcast(x1, x2).shape
    vv = np.broadcast_to(v.reshape((2,) + (1,) * len(shape)), (2,) + shape)
    return (vv + clifford_mul((x1, x2), vv)) / np.sqrt(1.0 + x1 * x1 + x2 * x2)
