"""Lindstedt-Poincare hierarchies for undamped oscillatory systems.

Time is rescaled by the (unknown) nonlinear frequency so every order stays
periodic; the frequency correction of each order is fixed by a solvability
condition that zeroes the resonant projection of its forcing.

For the oscillator the rescaled equation is divided through by the squared
frequency, so the hierarchy tracks the series of the *reciprocal* frequency.
The reported correction at order n is the reciprocal coefficient scaled by
-omega0^2, which matches the direct frequency correction to first order, and
``FrequencySeries.total`` resums the reciprocal series exactly.  The coupled
predator-prey system is first order in time, so its frequency expands
directly and no reciprocal bookkeeping is needed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .compositions import series_polynomial
from .hierarchy import (FrequencySeries, LinearSubproblem, PerturbationSeries,
                        assemble_series, effective_truncation)
from .problems import distribute_initial_conditions

__all__ = ["DegenerateProjectionError", "lp_oscillator_forcing",
           "lp_frequency_correction", "lp_rescale", "solve_lp_oscillator",
           "solve_lp_lotka_volterra", "LpOscillatorRun", "LpLotkaVolterraRun"]

PROJECTION_POINTS = 2048     # uniform solvability grid over one period


class DegenerateProjectionError(RuntimeError):
    """The resonant projection denominator vanished."""


def _projection_grid(omega0=1.0):
    # tau in [0, 2*pi]; expressed in the solver's time variable (tau/omega0)
    return np.linspace(0.0, 2.0 * np.pi, PROJECTION_POINTS) / omega0


def _reciprocal_products(nu, k, exclude_leading_pair=False):
    """Coefficient of eps^k in (sum nu_i eps^i)^2, optionally without 2*nu_0*nu_k."""
    total = 0.0
    for i in range(k + 1):
        j = k - i
        if exclude_leading_pair and k > 0 and (i == 0 or j == 0):
            continue
        if i < len(nu) and j < len(nu):
            total += nu[i] * nu[j]
    return total


def lp_oscillator_forcing(n, nu, lower, poly, omega0):
    """Known forcing and resonant-coefficient samples at hierarchy order n.

    ``lower`` holds sampled corrections u_0..u_{n-1} on one grid; ``nu`` the
    reciprocal-frequency coefficients found so far (nu[0] = 1/omega0).
    Returns ``(forcing_known, resonant_term)`` where the order-n equation is
    u_n'' + u_n = forcing_known + w_n * resonant_term and the resonant term
    equals 2*u_0/omega0 (minus twice the leading correction's second
    derivative over omega0, since u_0'' = -u_0).
    """
    if n <= 0:
        raise ValueError("correction forcing starts at order 1")
    if len(lower) < n:
        raise ValueError(f"order {n} needs corrections 0..{n - 1}")
    base = np.asarray(lower[0], dtype=float)
    f = np.zeros_like(base)
    for k in range(1, n + 1):
        ck = _reciprocal_products(nu, k, exclude_leading_pair=(k == n))
        if ck != 0.0:
            f -= omega0 ** 2 * ck * np.asarray(lower[n - k], dtype=float)
    for k in range(0, n):
        ck = _reciprocal_products(nu, k)
        if ck != 0.0:
            f -= ck * series_polynomial(poly, n - 1 - k, lower)
    resonant = 2.0 * base / omega0
    return f, resonant


def lp_frequency_correction(forcing_known, u0_ddot, omega0, grid=None):
    """Frequency correction that cancels the resonant cosine projection.

    Both integrals run over one period of the rescaled time on a uniform
    grid by the composite trapezoid rule.  The correction w_n solves
    <forcing_known + w_n * (-2*u0_ddot/omega0), cos> = 0.
    """
    forcing_known = np.asarray(forcing_known, dtype=float)
    u0_ddot = np.asarray(u0_ddot, dtype=float)
    if grid is None:
        grid = np.linspace(0.0, 2.0 * np.pi, forcing_known.size)
    resonant = -2.0 * u0_ddot / omega0
    ct = np.cos(grid * (2.0 * np.pi / grid[-1]))
    den = np.trapezoid(resonant * ct, grid)
    if abs(den) < 1e-12:
        raise DegenerateProjectionError(
            "the leading correction has no resonant cosine component")
    num = np.trapezoid(forcing_known * ct, grid)
    return -num / den


def lp_rescale(series_samples, grid, omega_total, target_grid):
    """Map rescaled-time samples back to physical time on a uniform grid.

    Emits the pairs (s_i / omega, X(s_i)) and resamples them onto
    ``target_grid`` with a natural cubic spline so downstream metrics compare
    on one uniform time grid.
    """
    if omega_total <= 0:
        raise ValueError(f"total frequency must be positive, got {omega_total}")
    grid = np.asarray(grid, dtype=float)
    samples = np.asarray(series_samples, dtype=float)
    target = np.asarray(target_grid, dtype=float)
    abscissae = grid / omega_total
    lo, hi = abscissae[0], abscissae[-1]
    pad = 1e-9 * max(1.0, hi - lo)
    if target.min() < lo - pad or target.max() > hi + pad:
        raise ValueError(
            f"target grid [{target.min():.6g}, {target.max():.6g}] extends beyond the "
            f"rescaled samples [{lo:.6g}, {hi:.6g}]")
    return CubicSpline(abscissae, samples, axis=-1)(np.clip(target, lo, hi))


@dataclass
class LpOscillatorRun:
    series: PerturbationSeries
    handles: list
    solver: object
    t_grid: np.ndarray
    solution: np.ndarray
    omega_total: float
    pass_frequencies: list

    def solution_at_order(self, k):
        """Rescaled series truncated at order k, on the run's time grid."""
        freq = self.series.frequency
        w = freq.total(k)
        stretched = self.t_grid * w
        parts = [self.solver.values(self.handles[n], stretched)[0]
                 for n in range(k + 1)]
        return lp_rescale(assemble_series(parts, self.series.epsilon),
                          stretched, w, self.t_grid)


def _lp_oscillator_single_pass(problem, solver, omega_phase, monitor=True):
    from .oneshot import OperatorSpec

    osc = problem.oscillator
    w0 = osc.omega0
    eps = problem.epsilon
    p = problem.max_order
    poly = osc.polynomial()
    grid = solver.grid
    proj = _projection_grid()         # tau grid, leading order has unit frequency
    op = OperatorSpec(kind="ode_first_order_system",
                      A=np.eye(2), B=np.array([[0.0, -1.0], [1.0, 0.0]]))
    ics = distribute_initial_conditions(problem.ic_strategy, osc.ic, eps, p)
    zeros = np.zeros_like(grid)

    nu = [1.0 / w0]
    omegas = [w0]
    handles, U, Uproj = [], [], []
    for n in range(p + 1):
        if n == 0:
            # external forcing is carried entirely by the leading order, with
            # its phase frozen at the supplied frequency estimate
            f = np.zeros_like(grid)
            for gam, om, phi in osc.forcing:
                f += gam * np.cos(om * grid / omega_phase + phi)
            f = f / w0 ** 2
            ic = (ics[0][0], ics[0][1] / w0)
        else:
            f_known, resonant = lp_oscillator_forcing(n, nu, Uproj, poly, w0)
            w_n = lp_frequency_correction(f_known, -Uproj[0], w0, proj)
            omegas.append(w_n)
            nu.append(-w_n / w0 ** 2)
            fg, rg = lp_oscillator_forcing(n, nu, U, poly, w0)
            f = fg + w_n * rg
            ic = (ics[n][0], ics[n][1] / w0)
        sub = LinearSubproblem(order=n, operator=op,
                               forcing=np.vstack([zeros, f]), ic=ic)
        h = solver.solve(sub)
        handles.append(h)
        U.append(solver.values(h, grid)[0])
        Uproj.append(solver.values(h, proj)[0])

    freq = FrequencySeries(omega_n=omegas, epsilon=eps, convention="reciprocal")
    trunc = effective_truncation(freq.contributions()) if monitor else p
    return handles, U, freq, trunc


def solve_lp_oscillator(problem, solver, t_grid=None, passes=1, monitor=True):
    """Lindstedt-Poincare solve of an undamped oscillator, optionally multipass.

    With external forcing the leading-order phase needs a frequency estimate;
    pass 1 uses omega0, and each later pass reruns the hierarchy with the
    previous pass's resummed frequency.  The final pass's series is kept.
    """
    if passes < 1:
        raise ValueError(f"need at least one pass, got {passes}")
    if problem.oscillator.zeta != 0:
        raise ValueError("the time-rescaled hierarchy applies to undamped oscillators")
    t_grid = solver.grid if t_grid is None else np.asarray(t_grid, dtype=float)

    omega_phase = problem.oscillator.omega0
    pass_freqs = []
    for _ in range(passes):
        handles, U, freq, trunc = _lp_oscillator_single_pass(
            problem, solver, omega_phase, monitor=monitor)
        omega_phase = freq.total(trunc)
        pass_freqs.append(omega_phase)

    w = pass_freqs[-1]
    stretched = t_grid * w
    kept = [solver.values(handles[n], stretched)[0] for n in range(trunc + 1)]
    solution = lp_rescale(assemble_series(kept, problem.epsilon), stretched, w, t_grid)
    series = PerturbationSeries(corrections=U, epsilon=problem.epsilon,
                                grid=solver.grid, frequency=freq,
                                truncation_order=trunc)
    return LpOscillatorRun(series=series, handles=handles, solver=solver,
                           t_grid=t_grid, solution=solution, omega_total=w,
                           pass_frequencies=pass_freqs)


@dataclass
class LpLotkaVolterraRun:
    series: PerturbationSeries
    handles: list
    solver: object
    t_grid: np.ndarray
    populations: np.ndarray      # (2, N): prey, predator on t_grid
    omega_total: float

    def populations_at_order(self, k):
        freq = self.series.frequency
        w = freq.total(k)
        w0 = freq.omega_n[0]
        stretched = self.t_grid * w / w0
        parts = [self.solver.values(self.handles[n], stretched) for n in range(k + 1)]
        offsets = lp_rescale(assemble_series(parts, self.series.epsilon),
                             stretched * w0, w, self.t_grid)
        return 1.0 + self.series.epsilon * offsets


def lv_lp_step(n, lower_vals, lower_tau_derivs, lower_omegas, alpha, proj_grid_s):
    """Frequency correction and forcings of order n for the predator-prey system.

    ``lower_vals`` holds (xi_k, eta_k) sample pairs, ``lower_tau_derivs`` their
    rescaled-time derivatives, both on the solvability grid.  Returns
    (w_n, integrand pieces) with the solvability projection taken against the
    leading predator offset eta_0.
    """
    if n < 1:
        raise ValueError("correction steps start at order 1")
    xi0_dtau = lower_tau_derivs[0][0]
    eta0 = lower_vals[0][1]
    S_xi = np.zeros_like(eta0)
    for i in range(1, n):
        S_xi += lower_omegas[i] * lower_tau_derivs[n - i][0]
    C = np.zeros_like(eta0)
    for i in range(0, n):
        C += lower_vals[i][0] * lower_vals[n - 1 - i][1]
    den = np.trapezoid(-xi0_dtau * eta0, proj_grid_s)
    if abs(den) < 1e-12:
        raise DegenerateProjectionError("leading predator offset is orthogonal "
                                        "to the prey derivative")
    num = np.trapezoid((S_xi + C) * eta0, proj_grid_s)
    return num / den, S_xi, C


def solve_lp_lotka_volterra(problem, solver, t_grid=None, monitor=True):
    """Lindstedt-Poincare solve of the equilibrium-centered predator-prey system.

    The offsets (xi, eta) around the steady state (1, 1) satisfy a coupled
    first-order hierarchy whose order-0 operator has natural frequency
    sqrt(alpha); corrections are solved on the time variable s = tau/omega0
    so all orders share that operator.
    """
    from .oneshot import OperatorSpec

    alpha = problem.lv_alpha
    eps = problem.epsilon
    p = problem.max_order
    w0 = np.sqrt(alpha)
    t_grid = solver.grid if t_grid is None else np.asarray(t_grid, dtype=float)
    grid = solver.grid
    proj_s = _projection_grid(omega0=w0)      # s grid spanning one tau period
    op = OperatorSpec(kind="ode_first_order_system",
                      A=np.eye(2), B=np.array([[0.0, 1.0], [-alpha, 0.0]]))
    xi0, eta0 = problem.lv_perturbation_ic()
    ics = distribute_initial_conditions(problem.ic_strategy, (xi0, eta0), eps, p)

    omegas = [w0]
    handles = []
    vals_g, vals_p = [], []           # (xi, eta) samples on grid / projection grid
    dtau_g, dtau_p = [], []           # d/dtau values
    for n in range(p + 1):
        if n == 0:
            forcing = np.zeros((2, grid.size))
        else:
            w_n, S_xi, C = lv_lp_step(n, vals_p, dtau_p, omegas, alpha, proj_s)
            omegas.append(w_n)
            # rebuild the known sums on the solve grid
            S_xi_g = np.zeros(grid.size)
            S_eta_g = np.zeros(grid.size)
            for i in range(1, n):
                S_xi_g += omegas[i] * dtau_g[n - i][0]
                S_eta_g += omegas[i] * dtau_g[n - i][1]
            C_g = np.zeros(grid.size)
            for i in range(0, n):
                C_g += vals_g[i][0] * vals_g[n - 1 - i][1]
            f_xi = -w_n * dtau_g[0][0] - S_xi_g - C_g
            f_eta = -w_n * dtau_g[0][1] - S_eta_g + alpha * C_g
            forcing = np.vstack([f_xi, f_eta])
        sub = LinearSubproblem(order=n, operator=op, forcing=forcing, ic=ics[n])
        h = solver.solve(sub)
        handles.append(h)
        vals_g.append(solver.values(h, grid))
        vals_p.append(solver.values(h, proj_s))
        dtau_g.append(solver.derivatives(h, grid) / w0)
        dtau_p.append(solver.derivatives(h, proj_s) / w0)

    freq = FrequencySeries(omega_n=omegas, epsilon=eps, convention="direct")
    trunc = effective_truncation(freq.contributions()) if monitor else p
    w = freq.total(trunc)
    stretched = t_grid * w / w0
    kept = [solver.values(handles[n], stretched) for n in range(trunc + 1)]
    offsets = lp_rescale(assemble_series(kept, eps), stretched * w0, w, t_grid)
    series = PerturbationSeries(corrections=[np.vstack(v) for v in vals_g],
                                epsilon=eps, grid=grid, frequency=freq,
                                truncation_order=trunc)
    return LpLotkaVolterraRun(series=series, handles=handles, solver=solver,
                              t_grid=t_grid, populations=1.0 + eps * offsets,
                              omega_total=w)
