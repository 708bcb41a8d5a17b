"""Grids, conformally flat background metrics, solution pairs and the
conformal / Kelvin transformation laws for ``(u, psi)``."""
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .clifford2d import clifford_mul
from .errors import GridTooSmall, OutOfDomain, SingularPoint

METRIC_PRESETS = ("flat", "sphere")


@dataclass(frozen=True)
class Grid:
    """Uniform node grid ``origin + (i h, j h)``, ``0 <= i < nx``, ``0 <= j < ny``."""

    origin: tuple
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        if self.nx < 3 or self.ny < 3:
            raise GridTooSmall(f"need at least 3x3 nodes, got {self.nx}x{self.ny}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def square(cls, half_width, n, center=(0.0, 0.0)):
        """``n x n`` nodes covering ``center + [-half_width, half_width]^2``."""
        h = 2.0 * half_width / (n - 1)
        return cls((center[0] - half_width, center[1] - half_width), h, n, n)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def x1(self):
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def x2(self):
        return self.origin[1] + self.h * np.arange(self.ny)

    def coords(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def radius(self, center=(0.0, 0.0)):
        X, Y = self.coords()
        return np.hypot(X - center[0], Y - center[1])

    def bounds(self):
        return ((self.origin[0], self.origin[0] + (self.nx - 1) * self.h),
                (self.origin[1], self.origin[1] + (self.ny - 1) * self.h))

    @property
    def center(self):
        (a1, b1), (a2, b2) = self.bounds()
        return (0.5 * (a1 + b1), 0.5 * (a2 + b2))

    def inner_radius(self, center=(0.0, 0.0)):
        """Distance from ``center`` to the nearest grid edge."""
        (a1, b1), (a2, b2) = self.bounds()
        return min(center[0] - a1, b1 - center[0], center[1] - a2, b2 - center[1])

    def contains(self, px, py, tol=1e-9):
        (a1, b1), (a2, b2) = self.bounds()
        t = tol * self.h
        return (px >= a1 - t) & (px <= b1 + t) & (py >= a2 - t) & (py <= b2 + t)

    def center_index(self):
        return ((self.nx - 1) // 2, (self.ny - 1) // 2)

    def nearest_index(self, point):
        i = int(round((point[0] - self.origin[0]) / self.h))
        j = int(round((point[1] - self.origin[1]) / self.h))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def interior(self):
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def crop_slices(self, box):
        """Index slices of the nodes inside ``box = (x1min, x1max, x2min, x2max)``.

        The box edges must sit on nodes (to 1e-9 h).
        """
        idx = []
        for lo, hi, o in ((box[0], box[1], self.origin[0]), (box[2], box[3], self.origin[1])):
            a = (lo - o) / self.h
            b = (hi - o) / self.h
            ia, ib = int(round(a)), int(round(b))
            if abs(a - ia) > 1e-9 or abs(b - ib) > 1e-9:
                raise ValueError(f"crop box {box} is not aligned with the grid nodes")
            idx.append(slice(ia, ib + 1))
        return tuple(idx)

    def subgrid(self, slices):
        si, sj = slices
        i0 = si.start or 0
        j0 = sj.start or 0
        nx = len(range(*si.indices(self.nx)))
        ny = len(range(*sj.indices(self.ny)))
        return Grid((self.origin[0] + i0 * self.h, self.origin[1] + j0 * self.h), self.h, nx, ny)

    def to_dict(self):
        return {"origin": list(self.origin), "h": self.h, "nx": self.nx, "ny": self.ny}


@dataclass(frozen=True)
class Metric:
    """Conformally flat metric ``rho(x) |dx|^2`` with Gaussian curvature ``K``.

    ``rho`` and ``K`` are stored as node fields on the grid they were built for.
    """

    name: str
    rho: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)

    @property
    def is_flat(self):
        return self.name == "flat"

    @property
    def constant_curvature(self):
        return self.name in METRIC_PRESETS

    @property
    def mu(self):
        """Length scale ``sqrt(rho)``; the metric is ``mu^2`` times the flat one."""
        return np.sqrt(self.rho)


def flat_metric(grid):
    return Metric("flat", np.ones(grid.shape), np.zeros(grid.shape))


def sphere_metric(grid):
    """Round unit sphere through stereographic projection: ``rho = 4/(1+|x|^2)^2``, ``K = 1``."""
    r2 = grid.radius() ** 2
    return Metric("sphere", 4.0 / (1.0 + r2) ** 2, np.ones(grid.shape))


def metric_by_name(name, grid):
    if name == "flat":
        return flat_metric(grid)
    if name == "sphere":
        return sphere_metric(grid)
    raise ValueError(f"unknown metric preset {name!r}; expected one of {METRIC_PRESETS}")


@dataclass(frozen=True)
class SolutionPair:
    """A candidate ``(u, psi)`` on a grid with its background metric.

    ``u`` has shape ``grid.shape``; ``psi`` has shape ``(2,) + grid.shape``.
    Nodes excluded by a transform (e.g. the disk around the Kelvin centre)
    carry NaN.
    """

    grid: Grid
    metric: Metric
    u: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        psi = np.asarray(self.psi, dtype=np.complex128)
        if u.shape != self.grid.shape or psi.shape != (2,) + self.grid.shape:
            raise ValueError(
                f"field shapes {u.shape}, {psi.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "psi", psi)

    @property
    def valid(self):
        return np.isfinite(self.u) & np.all(np.isfinite(self.psi), axis=0)

    def replace(self, **changes):
        return replace(self, **changes)

    def flat_gauge(self):
        """Fields of the equivalent flat-plane solution,
        ``(u + ln mu, mu^{1/2} psi)`` with ``mu = sqrt(rho)``."""
        if self.metric.is_flat:
            return self.u, self.psi
        mu = self.metric.mu
        return self.u + np.log(mu), np.sqrt(mu) * self.psi

    def as_flat(self):
        u, psi = self.flat_gauge()
        return SolutionPair(self.grid, flat_metric(self.grid), u, psi)

    def crop(self, box):
        s = self.grid.crop_slices(box)
        g = self.grid.subgrid(s)
        m = Metric(self.metric.name, self.metric.rho[s], self.metric.K[s])
        return SolutionPair(g, m, self.u[s], self.psi[(slice(None),) + s])


@dataclass(frozen=True)
class ConformalMap:
    """Translation ``x -> x + shift`` or dilation ``x -> scale * x``.

    ``factor`` is the conformal factor ``lam`` with ``phi^* g = lam^2 g``.
    """

    kind: str
    shift: tuple = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("translation", "dilation"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("dilation scale must be positive")

    @classmethod
    def translation(cls, shift):
        return cls("translation", shift=(float(shift[0]), float(shift[1])))

    @classmethod
    def dilation(cls, scale):
        return cls("dilation", scale=float(scale))

    @property
    def factor(self):
        return self.scale if self.kind == "dilation" else 1.0

    def __call__(self, x1, x2):
        if self.kind == "translation":
            return x1 + self.shift[0], x2 + self.shift[1]
        return self.scale * x1, self.scale * x2

    def inverse(self):
        if self.kind == "translation":
            return ConformalMap.translation((-self.shift[0], -self.shift[1]))
        return ConformalMap.dilation(1.0 / self.scale)

    def preimage_grid(self, grid):
        """Grid whose nodes map exactly onto the nodes of ``grid``."""
        ox, oy = self.inverse()(*grid.origin)
        return Grid((ox, oy), grid.h / self.factor, grid.nx, grid.ny)


def sample(values, grid, px, py):
    """Cubic-convolution samples of node values (real, complex or spinor)."""
    values = np.asarray(values)
    shape = np.shape(px)
    if values.ndim == 3:
        return np.stack([sample(v, grid, px, py) for v in values])
    out = kernels.interp_cubic(values, grid.origin[0], grid.origin[1], grid.h, px, py)
    return out.reshape(shape)


def _require_flat(pair):
    if not pair.metric.is_flat:
        raise ValueError("planar transforms act on flat-metric pairs; use pair.as_flat() first")


def conformal_transform(pair, cmap, grid=None):
    """Pull a flat-plane pair back by a translation or dilation.

    ``u~ = u o phi + ln lam`` and ``psi~ = lam^{1/2} psi o phi``, sampled on
    ``grid`` (default: the preimage of the source grid, whose nodes map
    exactly onto source nodes).

    Raises
    ------
    OutOfDomain
        If ``phi`` sends a target node outside the source grid.
    """
    _require_flat(pair)
    if grid is None:
        grid = cmap.preimage_grid(pair.grid)
    X, Y = grid.coords()
    PX, PY = cmap(X, Y)
    if not np.all(pair.grid.contains(PX, PY)):
        raise OutOfDomain("conformal map sends target nodes outside the source grid")
    lam = cmap.factor
    u = sample(pair.u, pair.grid, PX, PY) + np.log(lam)
    psi = np.sqrt(lam) * sample(pair.psi, pair.grid, PX, PY)
    return SolutionPair(grid, flat_metric(grid), u, psi)


def kelvin_transform(pair, grid=None, r_min=None, r_max=None, spinor_law="inverse_radius",
                     mask_inner=True):
    """Kelvin transform through the unit circle.

    ``v(x) = u(x/|x|^2) - 2 ln|x|`` and, for ``spinor_law="inverse_radius"``,
    ``phi(x) = |x|^{-1} psi(x/|x|^2)``.  ``spinor_law="clifford"`` inserts
    the unit-vector factor: ``phi(x) = |x|^{-1} (x/|x|) . psi(x/|x|^2)``.

    Nodes with ``|x| < r_min`` (default: the smallest radius whose image
    still lies in the source grid) or ``|x| > r_max`` are set to NaN; with
    ``mask_inner=False`` a node inside ``r_min`` raises ``SingularPoint``.

    Raises
    ------
    OutOfDomain
        If a retained node maps outside the source grid.
    """
    _require_flat(pair)
    if spinor_law not in ("inverse_radius", "clifford"):
        raise ValueError(f"unknown spinor law {spinor_law!r}")
    if grid is None:
        grid = pair.grid
    if r_min is None:
        reach = pair.grid.inner_radius()
        if reach <= 0:
            raise OutOfDomain("source grid does not surround the inversion centre")
        r_min = (1.0 + 1e-9) / reach
    if r_min <= 0:
        raise SingularPoint("r_min must be positive")
    X, Y = grid.coords()
    r = np.hypot(X, Y)
    inner = r < r_min
    if inner.any() and not mask_inner:
        raise SingularPoint(f"{int(inner.sum())} target nodes lie within r_min={r_min} of 0")
    keep = ~inner
    if r_max is not None:
        keep &= r <= r_max
    rk = r[keep]
    PX = X[keep] / rk ** 2
    PY = Y[keep] / rk ** 2
    if not np.all(pair.grid.contains(PX, PY)):
        raise OutOfDomain("Kelvin images of retained nodes leave the source grid")
    u = np.full(grid.shape, np.nan)
    psi = np.full((2,) + grid.shape, np.nan + 0j)
    u[keep] = sample(pair.u, pair.grid, PX, PY) - 2.0 * np.log(rk)
    phi = sample(pair.psi, pair.grid, PX, PY) / rk
    if spinor_law == "clifford":
        phi = clifford_mul((X[keep] / rk, Y[keep] / rk), phi)
    psi[:, keep] = phi
    return SolutionPair(grid, flat_metric(grid), u, psi)
