"""Trapezoidal quadrature on grids, radial least-squares fits and analytic
tails of power-law profiles outside a rectangle."""
import numpy as np

from .errors import EmptyAnnulus


def trapezoid_weights(grid):
    """Node weights of the tensor trapezoidal rule (``h^2`` inside)."""
    wx = np.ones(grid.nx)
    wy = np.ones(grid.ny)
    wx[[0, -1]] = 0.5
    wy[[0, -1]] = 0.5
    return np.outer(wx, wy) * grid.h ** 2


def integrate(density, grid, mask=None):
    """Trapezoidal integral of a node field (NaN nodes count as zero)."""
    w = trapezoid_weights(grid)
    if mask is not None:
        w = w * mask
    d = np.where(np.isfinite(density), density, 0.0)
    return np.tensordot(d, w, axes=([-2, -1], [0, 1]))


def annulus_mask(grid, r1, r2, center=(0.0, 0.0)):
    r = grid.radius(center)
    return (r >= r1) & (r <= r2)


def radial_fit(values, grid, annulus, center=(0.0, 0.0)):
    """Ordinary least squares ``values ~ slope * ln r + intercept`` on the
    nodes of an annulus.

    Returns ``(slope, intercept, rms)``.
    """
    r1, r2 = annulus
    m = annulus_mask(grid, r1, r2, center) & np.isfinite(values)
    if r1 <= 0 or r2 <= r1 or m.sum() < 2:
        raise EmptyAnnulus(f"annulus {annulus} holds {int(m.sum())} usable nodes")
    x = np.log(grid.radius(center)[m])
    y = values[m]
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return float(slope), float(intercept), rms


def exterior_power_integral(grid, amplitude, power, center=(0.0, 0.0), n_theta=20000):
    """``int amplitude * |x - c|^power dx`` over the plane outside the grid
    rectangle; requires ``power < -2`` and ``c`` inside the rectangle."""
    if power >= -2:
        return np.inf
    (a1, b1), (a2, b2) = grid.bounds()
    c1, c2 = center
    theta = (np.arange(n_theta) + 0.5) * (2 * np.pi / n_theta)
    ct, st = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore"):
        tx = np.where(ct > 0, (b1 - c1) / ct, np.where(ct < 0, (a1 - c1) / ct, np.inf))
        ty = np.where(st > 0, (b2 - c2) / st, np.where(st < 0, (a2 - c2) / st, np.inf))
    rho = np.minimum(tx, ty)
    q = power + 2.0
    return float(amplitude * np.sum(rho ** q / (-q)) * (2 * np.pi / n_theta))


def ball_weights(grid, center, radius, sub=8):
    """Trapezoid weights times the fraction of each node's cell inside a disk.

    Cells cut by the circle are sampled on a ``sub x sub`` midpoint lattice,
    which removes most of the O(h) error of a plain node mask.
    """
    h = grid.h
    r = grid.radius(center)
    frac = (r <= radius).astype(np.float64)
    cut = np.abs(r - radius) <= h * np.sqrt(0.5) + 1e-12
    if np.any(cut):
        off = (np.arange(sub) + 0.5) / sub - 0.5
        ox, oy = np.meshgrid(off * h, off * h, indexing="ij")
        X, Y = grid.coords()
        dx = X[cut][:, None, None] - center[0] + ox
        dy = Y[cut][:, None, None] - center[1] + oy
        frac[cut] = np.mean(dx * dx + dy * dy <= radius * radius, axis=(1, 2))
    return trapezoid_weights(grid) * frac
