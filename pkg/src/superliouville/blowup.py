"""Concentration harness for sequences of solutions.

Sequences are built from exact families (typically dilations), then scanned
for points where the ``e^{2u}`` mass of small balls stays above a threshold
``epsilon0 < pi``.  The behaviour of ``u`` away from those points decides
between the classification alternatives.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from .clifford2d import norm2
from .errors import BallOutsideGrid, InvalidThreshold
from .geometry import Grid
from .operators import exp_guarded
from .quadrature import ball_weights, trapezoid_weights
from .solutions import FAMILIES, family

CLASSIFICATIONS = (
    "bounded",
    "uniform_minus_infinity",
    "blowup_bounded_outside",
    "blowup_minus_infinity_outside",
)


@dataclass
class SequenceSpec:
    """Recipe for ``count`` members of a solution family on ``domain``.

    ``params_n(n)`` returns ``{"center": ..., "scale": ..., "spin_direction": ...}``
    (missing keys take the family defaults).
    """

    family: str
    params_n: Callable
    count: int
    domain: Grid

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.count < 2:
            raise ValueError("a sequence needs at least two members")

    @classmethod
    def geometric(cls, family_name, domain, count, base=2.0, center=(0.0, 0.0),
                  spin_direction=None):
        """Scales ``base**n`` for ``n = 0 .. count-1``; ``base = 1`` is a constant family."""
        if not base > 0:
            raise ValueError("scale base must be positive")

        def rule(n):
            return {"center": tuple(center), "scale": float(base) ** n,
                    "spin_direction": spin_direction}

        return cls(family_name, rule, count, domain)


class PairSequence(list):
    """List of pairs with the uniform energy bounds of the members."""

    bounds: dict = None


def _energies(pair):
    w = trapezoid_weights(pair.grid) * pair.metric.rho
    return (float(np.sum(exp_guarded(pair.u, 2.0) * w)),
            float(np.sum(norm2(pair.psi) ** 2 * w)))


def generate_sequence(spec, workers=1):
    """Build the members and record ``max_n int e^{2u_n}`` and ``max_n int |psi_n|^4``."""

    def build(n):
        p = spec.params_n(n)
        if not p.get("scale", 1.0) > 0:
            raise ValueError(f"member {n}: scale must be positive")
        return family(spec.family, spec.domain, **p)

    idx = range(spec.count)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            pairs = PairSequence(ex.map(build, idx))
    else:
        pairs = PairSequence(build(n) for n in idx)
    e2u, psi4 = zip(*(_energies(p) for p in pairs))
    pairs.bounds = {"e2u": list(e2u), "psi4": list(psi4),
                    "max_e2u": max(e2u), "max_psi4": max(psi4)}
    return pairs


def local_mass(pair, center, radius):
    """``int_{B_radius(center)} e^{2u} dv`` with sub-cell treatment of the rim.

    Raises
    ------
    BallOutsideGrid
        If the ball is not contained in the grid rectangle.
    """
    g = pair.grid
    (x0, x1), (y0, y1) = g.bounds()
    c = (float(center[0]), float(center[1]))
    tol = 1e-9 * g.h
    if not (radius > 0 and c[0] - radius >= x0 - tol and c[0] + radius <= x1 + tol
            and c[1] - radius >= y0 - tol and c[1] + radius <= y1 + tol):
        raise BallOutsideGrid(f"ball of radius {radius} at {c} leaves the grid")
    dens = exp_guarded(pair.u, 2.0) * pair.metric.rho
    w = ball_weights(g, c, radius)
    return float(np.sum(np.where(np.isfinite(dens), dens, 0.0) * w))


def _disk_footprint(h, radius):
    m = int(np.floor(radius / h + 1e-9))
    k = np.arange(-m, m + 1) * h
    return (k[:, None] ** 2 + k[None, :] ** 2) <= radius * radius + 1e-12


def mass_map(pair, radius):
    """Node-mask ball masses ``int_{B_radius(x)} e^{2u}`` for every node ``x``."""
    dens = exp_guarded(pair.u, 2.0) * pair.metric.rho * trapezoid_weights(pair.grid)
    dens = np.where(np.isfinite(dens), dens, 0.0)
    disk = _disk_footprint(pair.grid.h, radius).astype(np.float64)
    return fftconvolve(dens, disk, mode="same")


def _components(mask, values):
    """Argmax of ``values`` in each connected component of ``mask``."""
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    if n == 0:
        return []
    idx = ndimage.maximum_position(values, labels, index=np.arange(1, n + 1))
    return sorted(tuple(int(i) for i in ij) for ij in idx)


def is_minus_infinity(maxima, floor=-10.0, window=3, ratio=0.5):
    """Operational test for ``sup_K u_n -> -inf`` from the last ``window`` maxima.

    The maxima must decrease strictly and either fall below ``floor`` or keep
    decreasing without geometric slow-down (each decrement at least ``ratio``
    times the previous one), which separates logarithmic divergence from a
    convergent tail.
    """
    m = np.asarray(maxima[-window:], dtype=np.float64)
    if m.size < window or not np.all(np.isfinite(m)):
        return False
    d = -np.diff(m)
    if not np.all(d > 0):
        return False
    if m[-1] < floor:
        return True
    return bool(np.all(d[1:] >= ratio * d[:-1]))


@dataclass
class BlowupReport:
    sigma1: list
    sigma2: list
    masses: list
    classification: str
    epsilon0: float
    delta: float = None
    outside_max_u: list = field(default_factory=list)
    energy_bounds: dict = None

    def to_dict(self):
        return asdict(self)


def detect_concentration(pairs, epsilon0=np.pi / 2, delta=0.5, window=3, floor=-10.0,
                         psi_growth=1.25, psi_floor=1.0):
    """Locate concentration points and classify the sequence.

    Parameters
    ----------
    pairs : list of SolutionPair
        Sequence members on a common grid, in order.
    epsilon0 : float
        Mass threshold, ``0 < epsilon0 < pi``.
    delta : float
        Ball radius for the local masses.
    window : int
        Number of final members used for the ``limsup`` and the trend tests.
    psi_growth, psi_floor : float
        A node belongs to the spinor set when ``|psi|`` there grows by
        ``psi_growth`` between the first and last member of the window and
        ends above ``psi_floor``.

    Returns
    -------
    BlowupReport
    """
    if not 0 < epsilon0 < np.pi:
        raise InvalidThreshold(f"epsilon0 must lie in (0, pi), got {epsilon0}")
    if len(pairs) < 2:
        raise ValueError("need at least two sequence members")
    grid = pairs[0].grid
    tail = list(pairs[-window:])

    masses = np.min([mass_map(p, delta) for p in tail], axis=0)
    last_u = tail[-1].u
    cand = masses >= epsilon0
    points_idx = _components(cand, np.where(np.isfinite(last_u), last_u, -np.inf))
    X, Y = grid.coords()
    sigma1 = [[float(X[ij]), float(Y[ij])] for ij in points_idx]

    psi_abs = [np.sqrt(norm2(p.psi)) for p in tail]
    grow = (psi_abs[-1] >= psi_growth * psi_abs[0]) & (psi_abs[-1] >= psi_floor)
    psi_last = psi_abs[-1]
    sigma2 = [[float(X[ij]), float(Y[ij])] for ij in _components(grow, psi_last)]

    outside = np.ones(grid.shape, dtype=bool)
    for c in sigma1:
        outside &= grid.radius(c) > delta
    maxima = [float(np.nanmax(np.where(outside, p.u, np.nan))) if outside.any() else np.nan
              for p in pairs]
    diverging = is_minus_infinity(maxima, floor=floor, window=window)
    if sigma1:
        cls = "blowup_minus_infinity_outside" if diverging else "blowup_bounded_outside"
        mass_list = []
        for c in sigma1:
            try:
                mass_list.append(local_mass(pairs[-1], c, delta))
            except BallOutsideGrid:
                mass_list.append(float(masses[grid.nearest_index(c)]))
    else:
        cls = "uniform_minus_infinity" if diverging else "bounded"
        mass_list = []
    return BlowupReport(
        sigma1=sigma1,
        sigma2=sigma2,
        masses=mass_list,
        classification=cls,
        epsilon0=float(epsilon0),
        delta=float(delta),
        outside_max_u=maxima,
        energy_bounds=getattr(pairs, "bounds", None),
    )
