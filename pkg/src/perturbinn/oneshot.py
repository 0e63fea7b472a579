"""Closed-form head solves against a fixed latent representation.

The quadratic physics loss of a linear problem is minimized exactly by
solving its normal equations.  The Gram matrix depends only on the latent,
the operator and the collocation sets, so its factorization is built once
and reused across hierarchy orders, forcings and condition values; each new
equation costs one right-hand-side assembly and two triangular solves.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .hierarchy import LinearSubproblem
from .network import LossWeights

__all__ = ["OperatorSpec", "ConditioningError", "first_order_form",
           "apply_operator", "NormalSystem", "assemble_normal_system",
           "one_shot_solve", "OneShotOdeSolver", "solve_hierarchy"]


class ConditioningError(RuntimeError):
    """Factorization failed even after regularization."""


@dataclass(frozen=True)
class OperatorSpec:
    """Linear operator of one hierarchy: a first-order ODE system or a PDE.

    ode_first_order_system: A u' + B u = F with invertible A.
    heat_like:  u_t - D u_xx = f.
    wave_like:  u_tt - c^2 u_xx = f.
    """

    kind: str
    A: object = None
    B: object = None
    D: float = None
    c: float = None

    def __post_init__(self):
        if self.kind == "ode_first_order_system":
            A = np.asarray(self.A, dtype=float)
            if abs(np.linalg.det(A)) < 1e-12:
                raise ValueError("A must be invertible")
        elif self.kind == "heat_like":
            if self.D is None or self.D <= 0:
                raise ValueError("diffusion coefficient must be positive")
        elif self.kind == "wave_like":
            if self.c is None or self.c <= 0:
                raise ValueError("wave speed must be positive")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @property
    def components(self):
        return np.asarray(self.A).shape[0] if self.kind == "ode_first_order_system" else 1

    def cache_key(self):
        if self.kind == "ode_first_order_system":
            return (self.kind, np.asarray(self.A, float).tobytes(),
                    np.asarray(self.B, float).tobytes())
        return (self.kind, self.D, self.c)


def first_order_form(osc):
    """Companion first-order system of the linear part of an oscillator.

    State (x, x'): the rows are x' - v = 0 and
    v' + 2*zeta*omega0*v + omega0^2*x = F(t), i.e. A = I and
    B = [[0, -1], [omega0^2, 2*zeta*omega0]] with forcing (0, F).
    """
    B = np.array([[0.0, -1.0],
                  [osc.omega0 ** 2, 2.0 * osc.zeta * osc.omega0]])
    return OperatorSpec(kind="ode_first_order_system", A=np.eye(2), B=B)


def apply_operator(ev, op, latent_width=None):
    """Operator applied to the latent: the residual's linear map of the head.

    For an r-component ODE system the result stacks r equation blocks of N
    rows each over the r*m head unknowns; for the scalar PDE operators it is
    a single N x m block.
    """
    if op.kind == "heat_like":
        if ev.d2H_dx2 is None:
            raise ValueError("heat operator needs spatial second derivatives")
        return ev.dH_dt - op.D * ev.d2H_dx2
    if op.kind == "wave_like":
        if ev.d2H_dx2 is None:
            raise ValueError("wave operator needs spatial second derivatives")
        return ev.d2H_dt2 - op.c ** 2 * ev.d2H_dx2
    A = np.asarray(op.A, float)
    B = np.asarray(op.B, float)
    r = A.shape[0]
    n, total = ev.H.shape
    m = latent_width or total // r
    if r * m != total:
        raise ValueError(f"latent width {total} does not split into {r} blocks")
    G = np.zeros((r * n, r * m))
    for e in range(r):
        for s in range(r):
            blk = A[e, s] * ev.dH_dt[:, s * m:(s + 1) * m] \
                + B[e, s] * ev.H[:, s * m:(s + 1) * m]
            G[e * n:(e + 1) * n, s * m:(s + 1) * m] = blk
    return G


@dataclass
class NormalSystem:
    """Gram matrix of the quadratic loss with its cached factorization."""

    M: np.ndarray
    factor: object
    weights: LossWeights
    G: np.ndarray                 # operator applied to the latent (stacked)
    ic_rows: np.ndarray           # condition rows, components then derivatives
    bc_rows: np.ndarray
    latent_width: int
    components: int

    def refactor(self):
        self.factor = cho_factor(self.M, lower=True)


def _embed_rows(block_rows, s, r, m):
    """Place an (n, m) row block into component slot s of the r*m unknowns."""
    n = block_rows.shape[0]
    rows = np.zeros((n, r * m))
    rows[:, s * m:(s + 1) * m] = block_rows
    return rows


def condition_rows(bundle, op, latent_width):
    """Initial/boundary condition rows aligned with the stacked unknowns."""
    r = op.components
    m = latent_width
    ic_rows = np.zeros((0, r * m))
    bc_rows = np.zeros((0, r * m))
    if bundle.initial is not None:
        if op.kind == "ode_first_order_system":
            ic_rows = np.vstack([
                _embed_rows(bundle.initial.component(s, m), s, r, m)
                for s in range(r)])
        elif op.kind == "wave_like":
            ic_rows = np.vstack([bundle.initial.H, bundle.initial.dH_dt])
        else:
            ic_rows = bundle.initial.H
    if bundle.boundary is not None:
        bc_rows = bundle.boundary.H
    return ic_rows, bc_rows


def assemble_normal_system(bundle, op, weights=None, latent_width=None):
    """Build and factor the Gram matrix of the quadratic head loss.

    M = w_pde * G^T G + w_ic * sum rows^T rows + w_bc * sum rows^T rows,
    Tikhonov-regularized by 1e-10 * trace(M)/m_total before the symmetric
    positive-definite factorization.  No inverse is ever formed.
    """
    weights = weights or LossWeights()
    r = op.components
    m = latent_width or bundle.interior.H.shape[1] // r
    G = apply_operator(bundle.interior, op, m)
    ic_rows, bc_rows = condition_rows(bundle, op, m)
    M = weights.w_pde * (G.T @ G)
    if ic_rows.size:
        M += weights.w_ic * (ic_rows.T @ ic_rows)
    if bc_rows.size:
        M += weights.w_bc * (bc_rows.T @ bc_rows)
    m_total = M.shape[0]
    lam = 1e-10 * np.trace(M) / m_total
    M_reg = M + lam * np.eye(m_total)
    try:
        factor = cho_factor(M_reg, lower=True)
    except LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(M_reg)[0])
        raise ConditioningError(
            f"normal matrix is not positive definite after regularization "
            f"(smallest eigenvalue ~ {smallest:.3e})") from exc
    return NormalSystem(M=M_reg, factor=factor, weights=weights, G=G,
                        ic_rows=ic_rows, bc_rows=bc_rows,
                        latent_width=m, components=r)


def one_shot_solve(system, forcing, ic_values=None, bc_values=None):
    """Closed-form head weights for one linear equation.

    ``forcing`` is stacked per equation block to match ``system.G``;
    ``ic_values``/``bc_values`` align with the rows recorded at assembly.
    Two triangular solves against the cached factorization; the explicit
    inverse is never formed.  Returns W of shape (latent_width, components).
    """
    f = np.ravel(np.asarray(forcing, dtype=float))
    if f.size != system.G.shape[0]:
        raise ValueError(f"forcing length {f.size} does not match the "
                         f"{system.G.shape[0]} residual rows of this system")
    rhs = system.weights.w_pde * (system.G.T @ f)
    if ic_values is not None and system.ic_rows.size:
        v = np.ravel(np.asarray(ic_values, dtype=float))
        if v.size != system.ic_rows.shape[0]:
            raise ValueError("initial-condition values do not match the rows "
                             "recorded at assembly")
        rhs += system.weights.w_ic * (system.ic_rows.T @ v)
    if bc_values is not None and system.bc_rows.size:
        v = np.ravel(np.asarray(bc_values, dtype=float))
        rhs += system.weights.w_bc * (system.bc_rows.T @ v)
    w = cho_solve(system.factor, rhs)
    return w.reshape(system.components, system.latent_width).T


class OneShotOdeSolver:
    """Linear-subproblem backend that solves heads in closed form.

    Satisfies the same protocol as the Runge-Kutta oracle backend: ``grid``
    is the collocation/inference grid, ``solve`` returns a handle (here the
    head weights) and ``values``/``derivatives`` evaluate anywhere the
    backbone extends.
    """

    def __init__(self, model, grid, weights=None):
        self.model = model
        self.grid = np.asarray(grid, dtype=float)
        self.weights = weights or LossWeights()
        self.m = model.config.latent_width
        self.r = model.config.state_components
        self.bundle = model.bundle(interior=self.grid,
                                   initial=self.grid[:1])
        self._systems = {}
        self._latent_cache = {}

    def system_for(self, op):
        key = op.cache_key()
        if key not in self._systems:
            self._systems[key] = assemble_normal_system(
                self.bundle, op, self.weights, self.m)
        return self._systems[key]

    def _latent_at(self, pts):
        pts = np.asarray(pts, dtype=float)
        key = pts.tobytes()
        if key not in self._latent_cache:
            self._latent_cache[key] = self.model.latent(pts)
        return self._latent_cache[key]

    def solve(self, sub):
        system = self.system_for(sub.operator)
        ic_values = np.asarray(sub.ic, dtype=float)
        return one_shot_solve(system, np.asarray(sub.forcing).ravel(), ic_values)

    def values(self, W, pts):
        ev = self._latent_at(pts)
        return np.vstack([ev.component(s, self.m) @ W[:, s] for s in range(self.r)])

    def derivatives(self, W, pts):
        ev = self._latent_at(pts)
        return np.vstack([ev.dH_dt[:, s * self.m:(s + 1) * self.m] @ W[:, s]
                          for s in range(self.r)])


def solve_hierarchy(model, problem, grid, weights=None, method="standard",
                    passes=1, t_grid=None, monitor=True):
    """Solve a weakly nonlinear ODE problem end to end with one-shot transfer.

    Builds the normal system once, then walks the hierarchy reusing its
    factorization across all orders.  ``method`` picks the standard expansion
    or the time-rescaled one; the rescaled path needs an undamped oscillator
    or the predator-prey system.
    """
    from .hierarchy import solve_standard_oscillator
    from .lindstedt import solve_lp_lotka_volterra, solve_lp_oscillator

    solver = OneShotOdeSolver(model, grid, weights)
    if problem.kind == "lotka_volterra":
        return solve_lp_lotka_volterra(problem, solver, t_grid=t_grid,
                                       monitor=monitor)
    if method == "lindstedt_poincare":
        return solve_lp_oscillator(problem, solver, t_grid=t_grid,
                                   passes=passes, monitor=monitor)
    series, handles = solve_standard_oscillator(problem, solver)
    return series, handles, solver
