"""Conserved and asymptotic quantities of solutions.

* ``T(z) = (u_z)^2 - u_zz + 1/4 <psi, dz.psi_zbar> + 1/4 <dzbar.psi_z, psi>``
  and its holomorphy defect,
* the stress tensor ``T_ab`` with trace, symmetry and divergence checks,
* the total charge ``alpha = int 2 e^{2u} - e^u |psi|^2`` and the spinor
  charge ``xi0 = int e^u psi``,
* asymptotic fits of ``u`` and ``psi`` and the Cauchy-kernel representation
  ``xi(x) = 1/(2 pi) int (x - y)/|x - y|^2 . e^u psi(y) dy``.

T-based quantities are evaluated on the flat-chart representative of the
pair, which is only meaningful for the constant-curvature presets.
"""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .clifford2d import E1, E2, clifford_mul, inner, norm2
from .errors import EmptyAnnulus, NonConstantCurvature, NotASolution
from .operators import (dirac, dz, dzbar, energy_E, energy_I, exp_guarded, gradient,
                        residual_norms, second_derivatives, tail_integral)
from .quadrature import annulus_mask, integrate, radial_fit, trapezoid_weights

DZ = (1.0, 1j)
DZBAR = (1.0, -1j)


@dataclass
class DiagnosticsReport:
    residual_u_inf: float
    residual_psi_inf: float
    E: float
    I: float
    alpha: float
    xi0: list
    T_max: float
    T_holomorphy_residual: float
    u_fit: dict
    psi_decay_exponent: float

    def to_dict(self):
        return asdict(self)


@dataclass
class StressTensor:
    """Trace-free symmetric part of ``T_ab`` plus the defects of the raw tensor."""

    T11: np.ndarray
    T12: np.ndarray
    T22: np.ndarray
    trace_residual: np.ndarray
    asymmetry: np.ndarray

    def divergence(self, grid, K=None):
        d11 = gradient(self.T11, grid)
        d12 = gradient(self.T12, grid)
        d22 = gradient(self.T22, grid)
        div1 = d11[0] + d12[1]
        div2 = d12[0] + d22[1]
        if K is not None:
            k1, k2 = gradient(K, grid)
            div1 = div1 + k1
            div2 = div2 + k2
        return div1, div2


def _flat_fields(pair):
    if not pair.metric.constant_curvature:
        raise NonConstantCurvature(f"metric {pair.metric.name!r} is not a constant-curvature preset")
    return pair.flat_gauge()


def _core(grid, rings):
    m = np.zeros(grid.shape, dtype=bool)
    m[rings:-rings, rings:-rings] = True
    return m


def compute_T(pair):
    """Quadratic differential ``T(z)`` as a complex node field."""
    u, psi = _flat_fields(pair)
    g = pair.grid
    u11, u12, u22 = second_derivatives(u, g)
    uz = dz(u, g)
    uzz = 0.25 * (u11 - u22 - 2j * u12)
    psi_z = np.stack([dz(c, g) for c in psi])
    psi_zb = np.stack([dzbar(c, g) for c in psi])
    spin = inner(psi, clifford_mul(DZ, psi_zb)) + inner(clifford_mul(DZBAR, psi_z), psi)
    return uz ** 2 - uzz + 0.25 * spin


def holomorphy_residual(pair, gate=1e-1, T=None):
    """``max |dT/dzbar + 1/4 dK/dz|`` over nodes two rings inside the boundary.

    ``K`` is constant for the admissible presets, so only ``dT/dzbar``
    remains.  With a numeric ``gate`` the pair must satisfy
    ``residual_u_inf <= gate`` first.
    """
    if gate is not None:
        ru, _ = residual_norms(pair)
        if not ru <= gate:
            raise NotASolution(f"residual_u_inf={ru:.3e} exceeds gate {gate:.3e}")
    if T is None:
        T = compute_T(pair)
    d = np.abs(dzbar(T, pair.grid))
    return float(np.nanmax(d[_core(pair.grid, 2)]))


def stress_tensor(pair):
    """Stress tensor ``T_ab`` built from ``u`` and ``psi``.

    The raw tensor
    ``2 u_a u_b - d_ab |grad u|^2 - 2 u_ab + d_ab Lap u + 2 Re<psi, e_a.d_b psi> + d_ab e^u |psi|^2``
    is split into its trace-free symmetric part (stored as ``T11``, ``T12``,
    ``T22 = -T11``) and the defects ``trace_residual = R11 + R22`` and
    ``asymmetry = R12 - R21``, both of which vanish on exact solutions.
    """
    u, psi = _flat_fields(pair)
    g = pair.grid
    u1, u2 = gradient(u, g)
    u11, u12, u22 = second_derivatives(u, g)
    lap = u11 + u22
    grad2 = u1 ** 2 + u2 ** 2
    d1 = np.stack(gradient(psi[0], g))
    d2 = np.stack(gradient(psi[1], g))
    dpsi = [np.stack([d1[0], d2[0]]), np.stack([d1[1], d2[1]])]
    e = [E1, E2]

    def spin(a, b):
        ea_db = np.einsum("ij,j...->i...", e[a], dpsi[b])
        return 2.0 * inner(psi, ea_db).real

    mass = exp_guarded(u) * norm2(psi)
    R11 = 2 * u1 * u1 - grad2 - 2 * u11 + lap + spin(0, 0) + mass
    R22 = 2 * u2 * u2 - grad2 - 2 * u22 + lap + spin(1, 1) + mass
    R12 = 2 * u1 * u2 - 2 * u12 + spin(0, 1)
    R21 = 2 * u1 * u2 - 2 * u12 + spin(1, 0)
    T11 = 0.5 * (R11 - R22)
    return StressTensor(T11, 0.5 * (R12 + R21), -T11, R11 + R22, R12 - R21)


def charge_alpha(pair, tail="none", annulus=None):
    """``alpha = int 2 e^{2u} - e^u |psi|^2 dx`` over the flat chart.

    ``tail="fitted"`` adds the exterior integral of the power laws fitted on
    ``annulus`` (default ``(0.2 R, 0.8 R)``).
    """
    flat = pair.as_flat()
    eu = exp_guarded(flat.u)
    val = float(integrate(2 * eu * eu - eu * norm2(flat.psi), flat.grid))
    if tail == "fitted":
        val += tail_integral(flat, [(2.0, 2.0, 0), (-1.0, 1.0, 1)], annulus)
    elif tail != "none":
        raise ValueError(f"unknown tail mode {tail!r}")
    return val


def spinor_charge_xi0(pair):
    """``xi0 = int e^u psi dx`` (a constant spinor, shape ``(2,)``)."""
    flat = pair.as_flat()
    return integrate(exp_guarded(flat.u) * flat.psi, flat.grid)


def default_annulus(grid):
    R = grid.inner_radius()
    return (0.2 * R, 0.8 * R)


def asymptotic_fit_u(pair, annulus=None):
    """Least-squares fit ``u ~ slope ln|x| + intercept``; returns
    ``(slope, intercept, rms)``.  ``slope`` estimates ``-alpha / (2 pi)``."""
    flat = pair.as_flat()
    return radial_fit(flat.u, flat.grid, annulus or default_annulus(flat.grid))


def psi_decay_exponent(pair, annulus=None):
    """Slope of ``ln|psi|`` against ``ln|x|`` on the annulus (NaN if ``psi = 0``)."""
    flat = pair.as_flat()
    n = np.sqrt(norm2(flat.psi))
    if not np.any(n > 0):
        return float("nan")
    logn = np.where(n > 0, np.log(np.where(n > 0, n, 1.0)), np.nan)
    return radial_fit(logn, flat.grid, annulus or default_annulus(flat.grid))[0]


def leading_spinor_term(xi0, grid):
    """``(1/(2 pi)) (x/|x|^2) . xi0`` on the grid nodes."""
    X, Y = grid.coords()
    r2 = X * X + Y * Y
    with np.errstate(divide="ignore", invalid="ignore"):
        a, b = X / r2, Y / r2
    xi = np.broadcast_to(np.asarray(xi0).reshape(2, 1, 1), (2,) + grid.shape)
    return clifford_mul((a, b), xi) / (2 * np.pi)


def spinor_asymptotic_check(pair, annulus, xi0=None):
    """``max |x| |psi(x) - (1/(2 pi)) (x/|x|^2) . xi0|`` over the annulus nodes."""
    flat = pair.as_flat()
    g = flat.grid
    m = annulus_mask(g, *annulus)
    if annulus[0] <= 0 or annulus[1] <= annulus[0] or not m.any():
        raise EmptyAnnulus(f"annulus {annulus} contains no nodes")
    if xi0 is None:
        xi0 = spinor_charge_xi0(flat)
    diff = flat.psi - leading_spinor_term(xi0, g)
    val = g.radius() * np.sqrt(norm2(diff))
    return float(np.nanmax(val[m]))


@dataclass
class GreenResult:
    xi: np.ndarray
    residual: float
    match: float


def cauchy_sum(source, grid, method="fft"):
    """Punctured trapezoidal sum ``(1/(2 pi)) sum_y w(y) (x - y)/|x - y|^2 . s(y)``
    at every node ``x``.

    ``method="fft"`` evaluates the identical discrete sum as a zero-padded
    convolution; ``"direct"`` loops over node pairs.
    """
    w = trapezoid_weights(grid)
    f, gg = source[0], source[1]
    if method == "direct":
        X, Y = grid.coords()
        xf, xg = kernels.cauchy_direct(f, gg, w, grid.origin[0], grid.origin[1], grid.h,
                                       X.ravel(), Y.ravel())
        out = np.stack([xf.reshape(grid.shape), xg.reshape(grid.shape)])
    elif method == "fft":
        kx = grid.h * np.arange(-(grid.nx - 1), grid.nx)
        ky = grid.h * np.arange(-(grid.ny - 1), grid.ny)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        r2 = KX * KX + KY * KY
        r2[grid.nx - 1, grid.ny - 1] = np.inf
        kern = (KX + 1j * KY) / r2
        out = np.stack([fftconvolve(w * gg, kern, mode="valid"),
                        -fftconvolve(w * f, np.conj(kern), mode="valid")])
    else:
        raise ValueError(f"unknown method {method!r}")
    return out / (2 * np.pi)


def green_convolve(pair, method="fft", inner_fraction=0.5):
    """Represent ``psi`` through the Dirac Green function.

    Returns ``xi = (1/(2 pi)) int (x - y)/|x - y|^2 . e^u psi dy`` (self node
    skipped), the residual ``max |D xi + e^u psi|`` on interior nodes and
    ``match = max |xi - psi|`` over the centred box whose half-width is
    ``inner_fraction`` of the grid's.
    """
    flat = pair.as_flat()
    g = flat.grid
    src = exp_guarded(flat.u) * flat.psi
    xi = cauchy_sum(src, g, method)
    r = dirac(xi, g) + src
    res = float(np.sqrt(norm2(r))[1:-1, 1:-1].max())
    (a1, b1), (a2, b2) = g.bounds()
    c1, c2 = g.center
    X, Y = g.coords()
    box = (np.abs(X - c1) <= inner_fraction * 0.5 * (b1 - a1) + 1e-12) & \
          (np.abs(Y - c2) <= inner_fraction * 0.5 * (b2 - a2) + 1e-12)
    match = float(np.sqrt(norm2(xi - flat.psi))[box].max())
    return GreenResult(xi, res, match)


def _finite(x):
    return float(x) if np.isfinite(x) else None


def run_diagnostics(pair, tail="fitted", annulus=None):
    """Collect every diagnostic into a :class:`DiagnosticsReport`."""
    annulus = annulus or default_annulus(pair.grid)
    ru, rp = residual_norms(pair)
    flat = pair.as_flat()
    T = compute_T(pair)
    slope, intercept, rms = asymptotic_fit_u(flat, annulus)
    xi0 = spinor_charge_xi0(flat)
    return DiagnosticsReport(
        residual_u_inf=ru,
        residual_psi_inf=rp,
        E=energy_E(pair),
        I=energy_I(flat, tail=tail),
        alpha=charge_alpha(flat, tail=tail, annulus=annulus),
        xi0=[[float(c.real), float(c.imag)] for c in xi0],
        T_max=float(np.nanmax(np.abs(T)[1:-1, 1:-1])),
        T_holomorphy_residual=holomorphy_residual(pair, gate=None, T=T),
        u_fit={"slope": slope, "intercept": intercept, "rms": rms},
        psi_decay_exponent=_finite(psi_decay_exponent(flat, annulus)),
    )
