"""Hierarchy drivers for the weakly nonlinear reaction-diffusion and wave problems.

Corrections live on a rectangular space-time mesh.  Two interchangeable
backends solve the per-order linear PDEs: a method-of-lines oracle on a fine
spatial grid, and the closed-form head solve against a pretrained latent.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .hierarchy import PerturbationSeries, assemble_series, pde_order_forcing
from .network import LossWeights
from .problems import distribute_initial_conditions
from .reference import IntegratorSettings, discretize_pde, rk45_integrate

__all__ = ["comparison_mesh", "MolPdeBackend", "OneShotPdeBackend",
           "solve_pde_hierarchy", "PdeRun"]


def comparison_mesh(space_domain, time_domain, nx=50, nt=50):
    """Uniform evaluation mesh: x excludes the far boundary so the points
    embed into the oracle grid by plain index selection."""
    xa, xb = space_domain
    t0, t1 = time_domain
    x = xa + (xb - xa) * np.arange(nx) / nx
    t = np.linspace(t0, t1, nt)
    return x, t


class MolPdeBackend:
    """Linear-subproblem backend: central differences in space, adaptive
    Runge-Kutta in time, forcing interpolated from its mesh samples."""

    def __init__(self, operator, space_domain, time_domain, nx_intervals=200,
                 nt_samples=121, rtol=1e-10, atol=1e-10):
        self.operator = operator
        self.space_domain = space_domain
        self.time_domain = time_domain
        self.x_nodes = np.linspace(*space_domain, nx_intervals + 1)[1:-1]
        self.t_nodes = np.linspace(*time_domain, nt_samples)
        self.nx_intervals = nx_intervals
        self.settings = IntegratorSettings(rtol=rtol, atol=atol)
        kind = "kpp_fisher" if operator.kind == "heat_like" else "wave"
        from .problems import PdeOperatorSpec
        self._spec = PdeOperatorSpec(kind=kind,
                                     diffusion=operator.D or 1.0,
                                     speed=operator.c or 1.0)

    def solve(self, order, forcing_field, ic_values, bc=(0.0, 0.0)):
        """forcing_field and ic_values are sampled on (t_nodes, x_nodes)."""
        spline = CubicSpline(self.t_nodes, np.asarray(forcing_field, float), axis=0)
        mol = discretize_pde(self._spec, self.x_nodes.size + 2,
                             lambda x: np.asarray(ic_values, float),
                             bc=bc, space_domain=self.space_domain,
                             forcing=lambda x, t: spline(t))
        settings = IntegratorSettings(rtol=self.settings.rtol,
                                      atol=self.settings.atol,
                                      dense_output_grid=self.t_nodes)
        traj = rk45_integrate(mol.rhs, mol.y0, self.time_domain, settings)
        return dict(traj=traj, mol=mol)

    def field(self, handle, t_eval=None):
        """Interior field (len(t), len(x_nodes)) at the requested times."""
        t_eval = self.t_nodes if t_eval is None else np.asarray(t_eval, float)
        states = handle["traj"].dense(t_eval).T
        if self._spec.kind == "wave":
            states = states[:, :self.x_nodes.size]
        return states

    def to_comparison(self, handle, x_cmp, t_cmp):
        mol = handle["mol"]
        full = mol.full_field(self.field(handle, t_cmp))
        stride = self.nx_intervals // x_cmp.size
        idx = (np.arange(x_cmp.size) * stride)
        if not np.allclose(mol.x[idx], x_cmp, atol=1e-12):
            raise ValueError("comparison points are not a subset of the oracle grid")
        return full[:, idx]


class OneShotPdeBackend:
    """Closed-form head solves on the space-time collocation mesh."""

    def __init__(self, model, operator, space_domain, time_domain, nx=50, nt=50,
                 weights=None):
        from .oneshot import assemble_normal_system

        self.model = model
        self.operator = operator
        self.weights = weights or LossWeights()
        self.x_nodes, self.t_nodes = comparison_mesh(space_domain, time_domain,
                                                     nx, nt)
        T, X = np.meshgrid(self.t_nodes, self.x_nodes, indexing="ij")
        interior = np.column_stack([X.ravel(), T.ravel()])
        initial = np.column_stack([self.x_nodes,
                                   np.full(nx, time_domain[0])])
        xa, xb = space_domain
        boundary = np.vstack([
            np.column_stack([np.full(nt, xa), self.t_nodes]),
            np.column_stack([np.full(nt, xb), self.t_nodes])])
        self.bundle = model.bundle(interior=interior, initial=initial,
                                   boundary=boundary)
        self.system = assemble_normal_system(self.bundle, operator, self.weights,
                                             model.config.latent_width)
        self.nx, self.nt = nx, nt

    def solve(self, order, forcing_field, ic_values, bc=(0.0, 0.0)):
        from .oneshot import one_shot_solve

        f = np.asarray(forcing_field, float).ravel()
        ic = np.asarray(ic_values, float)
        if self.operator.kind == "wave_like":
            ic = np.concatenate([ic, np.zeros_like(ic)])
        bc_vals = np.concatenate([np.full(self.nt, bc[0]), np.full(self.nt, bc[1])])
        return one_shot_solve(self.system, f, ic, bc_vals)

    def field(self, W, t_eval=None):
        vals = self.bundle.interior.H @ W[:, 0]
        return vals.reshape(self.nt, self.nx)

    def to_comparison(self, handle, x_cmp, t_cmp):
        return self.field(handle)


@dataclass
class PdeRun:
    series: PerturbationSeries
    solution: np.ndarray          # (nt, nx) on the comparison mesh
    x: np.ndarray
    t: np.ndarray
    handles: list
    backend: object

    def solution_at_order(self, k):
        fields = [self.backend.to_comparison(h, self.x, self.t)
                  for h in self.handles[:k + 1]]
        return assemble_series(fields, self.series.epsilon)


def solve_pde_hierarchy(problem, backend, x_cmp=None, t_cmp=None):
    """Walk the PDE hierarchy on the backend's mesh and assemble the series."""
    pde = problem.pde
    p = problem.max_order
    eps = problem.epsilon
    if x_cmp is None or t_cmp is None:
        x_cmp, t_cmp = comparison_mesh(problem.space_domain, problem.time_domain)

    xg = backend.x_nodes
    tg = backend.t_nodes
    Xg, Tg = np.meshgrid(xg, tg, indexing="xy")
    ic_full = pde.ic(xg)
    shares = distribute_initial_conditions(problem.ic_strategy, (1.0,), eps, p)

    handles, fields = [], []
    for n in range(p + 1):
        if n == 0:
            if problem.external_forcing is not None:
                forcing = problem.external_forcing(Xg, Tg)
            else:
                forcing = np.zeros((tg.size, xg.size))
        else:
            forcing = pde_order_forcing(pde.kind, n, fields, q=pde.q)
        ic_vals = ic_full * shares[n][0]
        h = backend.solve(n, forcing, ic_vals, bc=pde.bc)
        handles.append(h)
        fields.append(backend.field(h))

    cmp_fields = [backend.to_comparison(h, x_cmp, t_cmp) for h in handles]
    series = PerturbationSeries(corrections=cmp_fields, epsilon=eps,
                                grid=(t_cmp, x_cmp))
    return PdeRun(series=series, solution=series.assemble(), x=x_cmp, t=t_cmp,
                  handles=handles, backend=backend)
