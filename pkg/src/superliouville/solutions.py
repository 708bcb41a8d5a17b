"""Closed-form solutions: Liouville bubbles, the spinor bubble and Killing
spinors on the round sphere.

The translated and dilated families are generated from the two base
solutions by the conformal law ``u~ = u o phi + ln lam``,
``psi~ = lam^{1/2} psi o phi`` with ``phi(x) = lam (x - x0)``.
"""
from dataclasses import dataclass

import numpy as np

from .clifford2d import clifford_mul, killing_spinor
from .errors import InvalidSpinDirection
from .geometry import SolutionPair, flat_metric, sphere_metric

FAMILIES = ("scalar_bubble", "spinor_bubble", "sphere_killing")


@dataclass(frozen=True)
class BubbleParams:
    center: tuple = (0.0, 0.0)
    scale: float = 1.0
    spin_direction: tuple = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("bubble scale must be positive")
        if self.spin_direction is not None:
            object.__setattr__(self, "spin_direction",
                               tuple(complex(c) for c in self.spin_direction))


def _unit_spinor(v):
    if v is None:
        raise InvalidSpinDirection("spin_direction is required")
    v = np.asarray(v, dtype=np.complex128).reshape(2)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise InvalidSpinDirection(f"|v| = {np.linalg.norm(v)!r}, expected 1")
    return v


def _base_scalar(y1, y2):
    return 0.5 * np.log(2.0) - np.log1p(y1 * y1 + y2 * y2), None


def _base_spinor(y1, y2, v):
    r2 = y1 * y1 + y2 * y2
    vv = np.broadcast_to(v.reshape(2, *([1] * np.ndim(y1))), (2,) + np.shape(y1))
    psi = np.sqrt(2.0) * (vv + clifford_mul((y1, y2), vv)) / (1.0 + r2)
    return np.log(2.0) - np.log1p(r2), psi


def _pull_back(params, grid, base):
    lam = params.scale
    X, Y = grid.coords()
    y1 = lam * (X - params.center[0])
    y2 = lam * (Y - params.center[1])
    u, psi = base(y1, y2)
    u = u + np.log(lam)
    psi = np.zeros((2,) + grid.shape, complex) if psi is None else np.sqrt(lam) * psi
    return u, psi


def scalar_bubble(params, grid):
    """``(log(sqrt(2) lam / (1 + lam^2 |x - x0|^2)), 0)`` on the flat plane."""
    if params.spin_direction is not None:
        raise ValueError("scalar_bubble takes no spin_direction")
    u, psi = _pull_back(params, grid, _base_scalar)
    return SolutionPair(grid, flat_metric(grid), u, psi)


def spinor_bubble(params, grid):
    """Spinor bubble ``u = log(2 lam / (1 + lam^2 |y|^2))``,
    ``psi = lam^{1/2} sqrt(2) (v + lam y.v) / (1 + lam^2 |y|^2)``, ``y = x - x0``."""
    v = _unit_spinor(params.spin_direction)
    u, psi = _pull_back(params, grid, lambda a, b: _base_spinor(a, b, v))
    return SolutionPair(grid, flat_metric(grid), u, psi)


def sphere_killing_solution(v, grid):
    """``(0, Killing spinor)`` on the round sphere in the stereographic chart.

    The fields are stored in the sphere gauge: ``u = 0`` and
    ``psi = (v + x.v) / sqrt(1 + |x|^2)`` with ``|psi| = 1``.  Its flat
    representative (``pair.flat_gauge()``) is the unit spinor bubble.
    """
    v = _unit_spinor(v)
    X, Y = grid.coords()
    psi = killing_spinor(v, (X, Y))
    return SolutionPair(grid, sphere_metric(grid), np.zeros(grid.shape), psi)


def family(name, grid, center=(0.0, 0.0), scale=1.0, spin_direction=None):
    """Construct a library solution by family name."""
    if name == "scalar_bubble":
        return scalar_bubble(BubbleParams(center, scale), grid)
    if name == "spinor_bubble":
        if spin_direction is None:
            spin_direction = (1.0, 0.0)
        return spinor_bubble(BubbleParams(center, scale, spin_direction), grid)
    if name == "sphere_killing":
        if spin_direction is None:
            spin_direction = (1.0, 0.0)
        return sphere_killing_solution(spin_direction, grid)
    raise ValueError(f"unknown solution family {name!r}; expected one of {FAMILIES}")
