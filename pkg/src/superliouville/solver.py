"""Damped Newton iteration for the coupled system on truncated domains.

Unknowns are the interior node values of ``u`` and of the four real
spinor fields ``(Re f, Im f, Re g, Im g)``; boundary nodes carry Dirichlet
data taken from the initial pair.  Each Newton step solves the real-linear
Jacobian system with restarted GMRES driven by the matrix-free action, and
preconditioned by a sparse LU factorisation of the same Jacobian.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .clifford2d import norm2
from .errors import LinearSolveFailure, NoConvergence
from .geometry import SolutionPair
from .operators import exp_guarded, laplacian, metric_dirac, residual

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    tol_residual: float = 1e-10
    max_iters: int = 50
    damping: str = "backtracking"
    max_halvings: int = 20
    linear_tol: float = 1e-8
    linear_max_iters: int = 200
    gauge: str = "pin_node"
    pin_index: tuple = None

    def __post_init__(self):
        if not (self.tol_residual > 0 and self.linear_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.damping not in ("none", "backtracking"):
            raise ValueError(f"unknown damping {self.damping!r}")
        if self.gauge not in ("none", "pin_node"):
            raise ValueError(f"unknown gauge {self.gauge!r}")


@dataclass
class SolveReport:
    iterations: int
    residual_history: list
    converged: bool
    final_pair: SolutionPair = field(repr=False)
    linear_iterations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "converged": bool(self.converged),
            "linear_iterations": list(self.linear_iterations),
        }


class Layout:
    """Packing between full node arrays and the vector of free unknowns."""

    def __init__(self, grid, pin=None):
        self.grid = grid
        self.free = grid.interior()
        self.n = int(self.free.sum())
        self.pin = None
        self.pin_node = pin
        if pin is not None:
            flat_index = np.flatnonzero(self.free.ravel())
            pos = np.searchsorted(flat_index, pin[0] * grid.ny + pin[1])
            if pos >= self.n or flat_index[pos] != pin[0] * grid.ny + pin[1]:
                raise ValueError(f"pin node {pin} is not an interior node")
            self.pin = int(pos)

    @property
    def size(self):
        return 5 * self.n

    def pack(self, du, dpsi):
        m = self.free
        return np.concatenate([du[m], dpsi[0].real[m], dpsi[0].imag[m],
                               dpsi[1].real[m], dpsi[1].imag[m]])

    def unpack(self, x):
        n, m = self.n, self.free
        du = np.zeros(self.grid.shape)
        dpsi = np.zeros((2,) + self.grid.shape, dtype=np.complex128)
        du[m] = x[:n]
        dpsi[0][m] = x[n:2 * n] + 1j * x[2 * n:3 * n]
        dpsi[1][m] = x[3 * n:4 * n] + 1j * x[4 * n:5 * n]
        return du, dpsi


class Linearization:
    """Frechet derivative of :func:`~superliouville.operators.residual` at a pair.

    ``dr_u = -Lap du - rho (4 e^{2u} - e^u |psi|^2) du + 2 rho e^u Re<psi, dpsi>``
    ``dr_psi = D_g dpsi + e^u dpsi + e^u psi du``
    """

    def __init__(self, pair):
        self.pair = pair
        self.eu = exp_guarded(pair.u)
        self.n2 = norm2(pair.psi)
        self.rho = pair.metric.rho

    def apply(self, du, dpsi):
        p, eu = self.pair, self.eu
        g, m = p.grid, p.metric
        dr_u = (-laplacian(du, g) - self.rho * (4 * eu * eu - eu * self.n2) * du
                + 2 * self.rho * eu * (p.psi[0].conj() * dpsi[0]
                                       + p.psi[1].conj() * dpsi[1]).real)
        dr_psi = metric_dirac(dpsi, g, m) + eu * dpsi + eu * p.psi * du
        edge = ~g.interior()
        dr_u[edge] = 0.0
        dr_psi[:, edge] = 0.0
        return dr_u, dr_psi

    def operator(self, layout):
        def matvec(x):
            du, dpsi = layout.unpack(np.asarray(x).ravel())
            y = layout.pack(*self.apply(du, dpsi))
            if layout.pin is not None:
                y[layout.pin] = x[layout.pin]
            return y

        return LinearOperator((layout.size, layout.size), matvec=matvec, dtype=np.float64)

    def assemble(self, layout):
        """Sparse matrix of the same real-linear map restricted to the free nodes."""
        g, p = layout.grid, self.pair
        nx, ny, h = g.nx, g.ny, g.h

        def d1d(n):
            d = sp.lil_matrix((n, n))
            for k in range(1, n - 1):
                d[k, k - 1], d[k, k + 1] = -0.5 / h, 0.5 / h
            d[0, :3] = np.array([-3, 4, -1]) * 0.5 / h
            d[n - 1, n - 3:] = np.array([1, -4, 3]) * 0.5 / h
            return d.tocsr()

        def lap1d(n):
            return sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h ** 2

        Ix, Iy = sp.identity(nx), sp.identity(ny)
        D1 = sp.kron(d1d(nx), Iy, format="csr")
        D2 = sp.kron(Ix, d1d(ny), format="csr")
        L = sp.kron(lap1d(nx), Iy) + sp.kron(Ix, lap1d(ny))
        mu = p.metric.mu.ravel()
        if not p.metric.is_flat:
            M, S = sp.diags(mu ** -1.5), sp.diags(np.sqrt(mu))
            D1, D2 = M @ D1 @ S, M @ D2 @ S
        idx = np.flatnonzero(layout.free.ravel())

        def r(A):
            return A.tocsr()[idx][:, idx]

        D1, D2, L = r(D1), r(D2), r(L)
        f = layout.free
        eu, rho, n2 = self.eu[f], self.rho[f], self.n2[f]
        pa, pb = p.psi[0].real[f], p.psi[0].imag[f]
        pc, pd = p.psi[1].real[f], p.psi[1].imag[f]
        Z = None
        dg = sp.diags
        E = dg(eu)
        blocks = [
            [-L - dg(rho * (4 * eu * eu - eu * n2)),
             dg(2 * rho * eu * pa), dg(2 * rho * eu * pb), dg(2 * rho * eu * pc), dg(2 * rho * eu * pd)],
            [dg(eu * pa), E, Z, D1, -D2],
            [dg(eu * pb), Z, E, D2, D1],
            [dg(eu * pc), -D1, -D2, E, Z],
            [dg(eu * pd), D2, -D1, Z, E],
        ]
        J = sp.bmat(blocks, format="lil")
        if layout.pin is not None:
            J[layout.pin, :] = 0.0
            J[layout.pin, layout.pin] = 1.0
        return J.tocsc()


def linearize(pair):
    return Linearization(pair)


def _residual_vector(pair, layout, pin_target):
    r_u, r_psi = residual(pair)
    F = layout.pack(r_u, r_psi)
    if layout.pin is not None:
        F[layout.pin] = pair.u[layout.pin_node] - pin_target
    return F


def _norm(F):
    return float(np.max(np.abs(F))) if F.size else 0.0


class _Preconditioner:
    """Sparse LU of an assembled Jacobian, reused across Newton steps.

    Factorisation dominates the cost of a step, so the factors are kept
    until GMRES needs more than ``refactor_after`` iterations.
    """

    def __init__(self, refactor_after=30):
        self.refactor_after = refactor_after
        self.lu = None
        self.factorizations = 0

    def refresh(self, lin, layout):
        self.lu = splu(lin.assemble(layout))
        self.factorizations += 1

    def operator(self, shape):
        return LinearOperator(shape, matvec=self.lu.solve, dtype=np.float64)


def _gmres(A, M, rhs, tol, maxiter):
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(A, rhs, M=M, rtol=tol, atol=0.0, restart=50, maxiter=maxiter,
                    callback=cb, callback_type="pr_norm")
    rel = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    return x, count[0], info == 0 and rel <= max(tol, 1e-13) * 10, rel


def solve_linear(lin, layout, rhs, tol, maxiter, precond=None):
    """GMRES on the matrix-free Jacobian, preconditioned by a sparse LU.

    A stale factorisation in ``precond`` is tried first and refreshed when
    GMRES stalls or becomes slow.  Returns ``(x, iterations)``.
    """
    precond = precond or _Preconditioner()
    A = lin.operator(layout)
    if precond.lu is not None:
        x, k, ok, rel = _gmres(A, precond.operator(A.shape), rhs, tol, maxiter)
        if ok and k <= precond.refactor_after:
            return x, k
    precond.refresh(lin, layout)
    x, k, ok, rel = _gmres(A, precond.operator(A.shape), rhs, tol, maxiter)
    if not ok:
        raise LinearSolveFailure(f"GMRES stalled: relative residual {rel:.2e}")
    return x, k


def newton_solve(initial, config=None, monitor=None):
    """Newton iteration from ``initial`` with Dirichlet boundary values fixed.

    With ``gauge="pin_node"`` the ``u`` equation at the pinned node (grid
    centre by default) is replaced by ``u = initial value``; the residual
    history then records that constraint in place of the replaced equation.

    ``monitor(iteration, pair)`` is called after every accepted step.

    Raises
    ------
    NoConvergence
        When ``max_iters`` is reached or backtracking cannot reduce the
        residual; the partial report is attached as ``.report``.
    LinearSolveFailure
        When GMRES stagnates.
    """
    config = config or SolverConfig()
    grid = initial.grid
    pin = None
    if config.gauge == "pin_node":
        pin = tuple(config.pin_index) if config.pin_index is not None else grid.center_index()
    layout = Layout(grid, pin)
    pin_target = initial.u[pin] if pin is not None else None

    pair = initial
    F = _residual_vector(pair, layout, pin_target)
    history = [_norm(F)]
    lin_its = []
    precond = _Preconditioner()
    log.info("newton start: |F| = %.3e", history[0])
    for it in range(1, config.max_iters + 1):
        if history[-1] <= config.tol_residual:
            return SolveReport(it - 1, history, True, pair, lin_its)
        lin = linearize(pair)
        delta, k = solve_linear(lin, layout, -F, config.linear_tol,
                                config.linear_max_iters, precond)
        lin_its.append(k)
        du, dpsi = layout.unpack(delta)
        step = 1.0
        for _ in range(config.max_halvings + 1):
            trial = pair.replace(u=pair.u + step * du, psi=pair.psi + step * dpsi)
            F_trial = _residual_vector(trial, layout, pin_target)
            nrm = _norm(F_trial)
            if config.damping == "none" or nrm <= history[-1]:
                break
            step *= 0.5
        else:
            report = SolveReport(it - 1, history, False, pair, lin_its)
            raise NoConvergence(f"backtracking failed at iteration {it}", report)
        pair, F = trial, F_trial
        history.append(nrm)
        log.info("newton %d: |F| = %.3e (step %.3g, %d gmres its)", it, nrm, step, k)
        if monitor is not None:
            monitor(it, pair)
    if history[-1] <= config.tol_residual:
        return SolveReport(config.max_iters, history, True, pair, lin_its)
    report = SolveReport(config.max_iters, history, False, pair, lin_its)
    raise NoConvergence(f"no convergence in {config.max_iters} iterations "
                        f"(|F| = {history[-1]:.3e})", report)


def asymptotic_boundary(u, grid, alpha=4 * np.pi, C=0.0):
    """Overwrite the boundary ring of ``u`` with ``-(alpha/2pi) ln|x| + C``."""
    u = np.array(u, dtype=np.float64)
    r = np.maximum(grid.radius(), grid.h)
    edge = ~grid.interior()
    u[edge] = (-(alpha / (2 * np.pi)) * np.log(r) + C)[edge]
    return u
