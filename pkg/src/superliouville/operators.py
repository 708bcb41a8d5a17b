"""Discrete differential operators, the system residual and the energies.

Fields are plain arrays on a :class:`~superliouville.geometry.Grid`:
scalar/complex fields have shape ``grid.shape`` and spinor fields
``(2,) + grid.shape``.  Stencils are second order; residuals are evaluated
on interior nodes only (boundary entries are zero).

Curved backgrounds are handled in the flat chart.  For ``g = mu^2 |dx|^2``
the residual of ``-Delta_g u = 2 e^{2u} - e^u |psi|^2 - K`` is taken in the
form multiplied by ``rho = mu^2``, and the Dirac operator of ``g`` is
``mu^{-3/2} D(mu^{1/2} psi)``.
"""
import numpy as np

from . import kernels
from .clifford2d import inner, norm2
from .errors import EmptyAnnulus, GridTooSmall
from .quadrature import exterior_power_integral, integrate, radial_fit

U_MAX = 30.0
overflow_guard = {"hits": 0}


def exp_guarded(u, k=1.0):
    """``exp(k u)`` with ``u`` clamped at ``U_MAX``; clamps are counted in
    ``overflow_guard["hits"]``."""
    over = u > U_MAX
    if np.any(over):
        overflow_guard["hits"] += int(np.count_nonzero(over))
        u = np.minimum(u, U_MAX)
    return np.exp(k * u)


def _check(grid):
    if grid.nx < 3 or grid.ny < 3:
        raise GridTooSmall("stencils need at least 3x3 nodes")


def laplacian(u, grid):
    _check(grid)
    return kernels.laplacian(u, grid.h)


def gradient(w, grid):
    _check(grid)
    if np.iscomplexobj(w):
        ar, br = kernels.gradient(np.ascontiguousarray(w.real), grid.h)
        ai, bi = kernels.gradient(np.ascontiguousarray(w.imag), grid.h)
        return ar + 1j * ai, br + 1j * bi
    return kernels.gradient(w, grid.h)


def dz(w, grid):
    """``d/dz = (d/dx1 - i d/dx2) / 2``."""
    w1, w2 = gradient(w, grid)
    return 0.5 * (w1 - 1j * w2)


def dzbar(w, grid):
    """``d/dzbar = (d/dx1 + i d/dx2) / 2``."""
    w1, w2 = gradient(w, grid)
    return 0.5 * (w1 + 1j * w2)


def second_derivatives(u, grid):
    """Compact second differences ``(u11, u12, u22)``.

    ``u11`` and ``u22`` use the 3-point stencil (one-sided 4-point on the
    edges); ``u12`` is the composition of the two gradient stencils.  Their
    interior sum ``u11 + u22`` is the five-point Laplacian.
    """
    _check(grid)
    h2 = grid.h ** 2

    def d2(a, axis):
        a = np.moveaxis(a, axis, 0)
        out = np.empty_like(a)
        out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / h2
        if a.shape[0] >= 4:
            out[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / h2
            out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / h2
        else:
            out[0] = out[1]
            out[-1] = out[-2]
        return np.moveaxis(out, 0, axis)

    u1, _ = gradient(u, grid)
    _, u12 = gradient(u1, grid)
    return d2(u, 0), u12, d2(u, 1)


def dirac(psi, grid):
    """Flat Dirac operator ``2 (dg/dzbar, -df/dz)`` on a spinor field."""
    _check(grid)
    return kernels.dirac(psi[0], psi[1], grid.h)


def metric_dirac(psi, grid, metric):
    """Dirac operator of ``mu^2 |dx|^2`` via ``mu^{-3/2} D (mu^{1/2} psi)``."""
    if metric.is_flat:
        return dirac(psi, grid)
    mu = metric.mu
    return mu ** -1.5 * dirac(np.sqrt(mu) * psi, grid)


def residual(pair):
    """Residuals ``(r_u, r_psi)`` of the coupled system on interior nodes.

    ``r_u = -Delta u - rho (2 e^{2u} - e^u |psi|^2 - K)`` and
    ``r_psi = D_g psi + e^u psi``.
    """
    g, m = pair.grid, pair.metric
    eu = exp_guarded(pair.u)
    r_u = -laplacian(pair.u, g) - m.rho * (2.0 * eu * eu - eu * norm2(pair.psi) - m.K)
    r_psi = metric_dirac(pair.psi, g, m) + eu * pair.psi
    edge = ~g.interior()
    r_u[edge] = 0.0
    r_psi[:, edge] = 0.0
    return r_u, r_psi


def residual_norms(pair):
    """Interior infinity norms ``(|r_u|, |r_psi|)``; masked nodes are skipped."""
    r_u, r_psi = residual(pair)
    ru = np.nanmax(np.abs(r_u)) if np.isfinite(r_u).any() else np.nan
    rp = np.sqrt(norm2(r_psi))
    rp = np.nanmax(rp) if np.isfinite(rp).any() else np.nan
    return float(ru), float(rp)


def energy_density(pair):
    """Integrand of ``E`` against ``dx`` (flat chart), complex-valued.

    ``1/2 |grad u|^2 + rho K u + rho <(D_g + e^u) psi, psi> - rho e^{2u}``;
    the imaginary part comes only from ``<D psi, psi>``.
    """
    g, m = pair.grid, pair.metric
    u1, u2 = gradient(pair.u, g)
    eu = exp_guarded(pair.u)
    action = inner(metric_dirac(pair.psi, g, m) + eu * pair.psi, pair.psi)
    return 0.5 * (u1 ** 2 + u2 ** 2) + m.rho * (m.K * pair.u + action - eu * eu)


def energy_E(pair, return_imag=False):
    """Trapezoidal ``E(u, psi)``; the spinor action enters through its real part.

    With ``return_imag=True`` returns ``(E, Im part of the action integral)``.
    """
    val = complex(integrate(energy_density(pair), pair.grid))
    return (val.real, val.imag) if return_imag else val.real


def fitted_tails(pair, annulus=None):
    """Power-law profiles fitted on an annulus: ``u ~ s ln r + C`` and
    ``|psi|^2 ~ B r^q``.  Returns a dict or ``None`` pieces when a fit is
    impossible (e.g. ``psi = 0``)."""
    g = pair.grid
    R = g.inner_radius()
    if annulus is None:
        annulus = (0.2 * R, 0.8 * R)
    s, C, _ = radial_fit(pair.u, g, annulus)
    n2 = norm2(pair.psi)
    psi_fit = None
    pos = n2 > 0
    if pos.sum() >= 2:
        logn2 = np.where(pos, np.log(np.where(pos, n2, 1.0)), np.nan)
        try:
            q, logB, _ = radial_fit(logn2, g, annulus)
            psi_fit = (float(np.exp(logB)), q)
        except EmptyAnnulus:
            psi_fit = None
    return {"u": (s, C), "psi2": psi_fit, "annulus": annulus}


def tail_integral(pair, terms, annulus=None):
    """Analytic exterior integral of a combination of fitted profiles.

    ``terms`` is a list of ``(coefficient, a, b)`` standing for
    ``coefficient * e^{a u} |psi|^{2 b}`` with the fitted power laws.
    """
    fits = fitted_tails(pair, annulus)
    s, C = fits["u"]
    total = 0.0
    for coef, a, b in terms:
        amp = coef * np.exp(a * C)
        power = a * s
        if b:
            if fits["psi2"] is None:
                continue
            B, q = fits["psi2"]
            amp *= B ** b
            power += b * q
        total += exterior_power_integral(pair.grid, amp, power)
    return total


def energy_I(pair, tail="none"):
    """``I(u, psi) = int (e^{2u} + |psi|^4) dv``, optionally adding the
    analytic tail of the fitted asymptotic profile outside the grid."""
    m = pair.metric
    dens = m.rho * (exp_guarded(pair.u, 2.0) + norm2(pair.psi) ** 2)
    val = float(integrate(dens, pair.grid))
    if tail == "fitted":
        _require_flat_tail(pair)
        val += tail_integral(pair, [(1.0, 2.0, 0), (1.0, 0.0, 2)])
    elif tail != "none":
        raise ValueError(f"unknown tail mode {tail!r}")
    return val


def _require_flat_tail(pair):
    if not pair.metric.is_flat:
        raise ValueError("tail corrections assume the flat plane")
