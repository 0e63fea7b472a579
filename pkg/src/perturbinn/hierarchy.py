"""Perturbation hierarchies: linear subproblems, series assembly, truncation.

A weakly nonlinear problem is expanded in powers of its small parameter; each
order is a linear problem sharing the operator of order zero and forced by
products of lower-order solutions.  Drivers here are agnostic to how the
linear solves happen: any object with ``grid`` / ``solve`` / ``values``
(see :class:`OracleOdeSolver`) can back them, which is how the closed-form
network path and the Runge-Kutta oracle path stay interchangeable.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .compositions import series_polynomial, series_power
from .problems import distribute_initial_conditions
from .reference import IntegratorSettings, rk45_integrate

__all__ = ["FrequencySeries", "PerturbationSeries", "LinearSubproblem",
           "divergence_monitor", "effective_truncation", "assemble_series",
           "standard_forcing", "OracleOdeSolver", "solve_standard_oscillator",
           "pde_order_forcing"]


@dataclass
class FrequencySeries:
    """Per-order frequency corrections of a time-rescaled expansion.

    ``convention`` records which series the corrections parameterize:
    "direct" sums to the frequency itself, "reciprocal" stores corrections
    whose negatives (scaled by omega0^2) expand 1/omega.  Both agree to first
    order; they differ in how ``total`` resums them.
    """

    omega_n: list
    epsilon: float
    convention: str = "reciprocal"

    def __post_init__(self):
        if self.omega_n[0] <= 0:
            raise ValueError("leading frequency must be positive")
        if self.convention not in ("direct", "reciprocal"):
            raise ValueError(f"unknown convention {self.convention!r}")

    def total(self, order=None):
        """Resummed frequency using corrections up to ``order`` (default all)."""
        if order is None:
            order = len(self.omega_n) - 1
        w0 = self.omega_n[0]
        if self.convention == "direct":
            tot = sum(self.omega_n[k] * self.epsilon ** k for k in range(order + 1))
        else:
            recip = 1.0 / w0
            for k in range(1, order + 1):
                recip += (-self.omega_n[k] / w0 ** 2) * self.epsilon ** k
            tot = 1.0 / recip
        if tot <= 0:
            raise ValueError(f"resummed frequency {tot} is not positive")
        return tot

    def contributions(self):
        """|eps^n w_n| / |sum_{k<=n} eps^k w_k| for every order."""
        out = []
        for n in range(len(self.omega_n)):
            partial = sum(self.omega_n[k] * self.epsilon ** k for k in range(n + 1))
            out.append(abs(self.omega_n[n] * self.epsilon ** n) / abs(partial))
        return out


@dataclass
class PerturbationSeries:
    """Ordered correction solutions of one hierarchy on a common grid."""

    corrections: list
    epsilon: float
    grid: np.ndarray = None
    frequency: FrequencySeries = None
    truncation_order: int = None

    def __post_init__(self):
        if not self.corrections:
            raise ValueError("a series needs at least one correction")
        shapes = {np.asarray(c).shape for c in self.corrections}
        if len(shapes) > 1:
            raise ValueError(f"corrections on mismatched grids: {sorted(shapes)}")
        if self.truncation_order is None:
            self.truncation_order = len(self.corrections) - 1

    def assemble(self, order=None):
        if order is None:
            order = self.truncation_order
        return assemble_series(self.corrections[:order + 1], self.epsilon)


@dataclass(frozen=True)
class LinearSubproblem:
    """One order of a hierarchy: shared operator, per-order forcing and data."""

    order: int
    operator: object
    forcing: np.ndarray          # (r, N) rows aligned with operator equations
    ic: tuple
    bc: tuple = None


def divergence_monitor(contributions):
    """Truncation index from a sequence of relative frequency contributions.

    Returns the largest position n such that the sequence is non-increasing
    through n; the first increase at position j truncates the series at j-1.
    """
    contributions = list(contributions)
    if len(contributions) < 2:
        raise ValueError("need at least 2 contributions")
    for j in range(1, len(contributions)):
        if contributions[j] > contributions[j - 1]:
            return j - 1
    return len(contributions) - 1


def effective_truncation(contributions, zero_tol=1e-12):
    """Divergence check that ignores vanishing contributions.

    Orders whose contribution is numerically zero (symmetry-killed
    corrections) cannot signal divergence; they are skipped before the
    monotone check and mapped back afterwards.
    """
    contributions = list(contributions)
    kept = [(i, c) for i, c in enumerate(contributions) if c > zero_tol]
    if len(kept) < 2:
        return len(contributions) - 1
    idx = [i for i, _ in kept]
    vals = [c for _, c in kept]
    pos = divergence_monitor(vals)
    if pos == len(vals) - 1:
        return len(contributions) - 1
    # truncate just below the first offending (nonzero) order
    return idx[pos + 1] - 1


def assemble_series(corrections, epsilon):
    """Pointwise sum of eps^n * u_n over the supplied corrections."""
    if len(corrections) == 0:
        raise ValueError("cannot assemble an empty series")
    total = np.zeros_like(np.asarray(corrections[0], dtype=float))
    for n, c in enumerate(corrections):
        total += epsilon ** n * np.asarray(c, dtype=float)
    return total


def standard_forcing(n, poly, lower, external=None):
    """Forcing of order ``n`` in the standard (unrescaled) hierarchy.

    Order 0 carries the external forcing; order n >= 1 is driven by minus the
    eps^(n-1) coefficient of the polynomial nonlinearity.
    """
    if n == 0:
        if external is None:
            raise ValueError("order 0 needs the external forcing samples")
        return np.asarray(external, dtype=float)
    if len(lower) < n:
        raise ValueError(f"order {n} needs corrections 0..{n - 1}")
    return -series_polynomial(poly, n - 1, lower)


def pde_order_forcing(kind, n, lower, q=3):
    """Order-n interior forcing for the weakly nonlinear PDE families.

    kpp_fisher moves eps*u*(1-u) across the equality, so order n is driven by
    the eps^(n-1) coefficient of u - u^2; the wave nonlinearity +eps*u^q
    contributes with a minus sign.
    """
    if n < 1:
        raise ValueError("pde correction forcing starts at order 1")
    if kind == "kpp_fisher":
        conv = series_power(2, n - 1, lower)
        return np.asarray(lower[n - 1], dtype=float) - conv
    if kind == "wave":
        return -series_power(q, n - 1, lower)
    raise ValueError(f"unknown pde kind {kind!r}")


class OracleOdeSolver:
    """Linear-subproblem backend built on the adaptive Runge-Kutta oracle.

    Solves A u' + B u = F(t) with F cubic-interpolated from its samples on
    ``grid``.  Corrections come back as dense interpolants, so they can be
    evaluated (and differentiated) anywhere inside the integration span.
    """

    def __init__(self, grid, rtol=1e-10, atol=1e-10, t_max=None):
        self.grid = np.asarray(grid, dtype=float)
        self.rtol = rtol
        self.atol = atol
        self.t_max = float(t_max) if t_max is not None else float(self.grid[-1])

    def solve(self, sub):
        op = sub.operator
        A_inv = np.linalg.inv(np.asarray(op.A, dtype=float))
        B = np.asarray(op.B, dtype=float)
        forcing = np.atleast_2d(np.asarray(sub.forcing, dtype=float))
        splines = [CubicSpline(self.grid, row) for row in forcing]

        def rhs(t, y):
            f = np.array([s(t) for s in splines])
            return A_inv @ (f - B @ y)

        span_end = max(self.t_max, float(self.grid[-1]))
        settings = IntegratorSettings(rtol=self.rtol, atol=self.atol,
                                      dense_output_grid=self.grid)
        traj = rk45_integrate(rhs, np.asarray(sub.ic, dtype=float),
                              (self.grid[0], span_end), settings)
        return traj.dense

    def values(self, handle, pts):
        return handle(np.asarray(pts, dtype=float))

    def derivatives(self, handle, pts):
        return handle.derivative(np.asarray(pts, dtype=float))


def solve_standard_oscillator(problem, solver, orders=None):
    """Run the standard hierarchy of a (possibly damped) oscillator.

    Returns a PerturbationSeries whose corrections are the position samples
    on ``solver.grid`` plus the per-order solve handles for re-evaluation.
    """
    from .oneshot import first_order_form

    osc = problem.oscillator
    p = problem.max_order if orders is None else orders
    poly = osc.polynomial()
    op = first_order_form(osc)
    grid = solver.grid
    ics = distribute_initial_conditions(problem.ic_strategy, osc.ic,
                                        problem.epsilon, p)
    external = osc.external_forcing(grid)
    zeros = np.zeros_like(grid)

    handles, corrections = [], []
    for n in range(p + 1):
        f = standard_forcing(n, poly, corrections, external if n == 0 else None)
        sub = LinearSubproblem(order=n, operator=op,
                               forcing=np.vstack([zeros, f]), ic=ics[n])
        h = solver.solve(sub)
        handles.append(h)
        corrections.append(solver.values(h, grid)[0])

    series = PerturbationSeries(corrections=corrections, epsilon=problem.epsilon,
                                grid=grid)
    return series, handles
