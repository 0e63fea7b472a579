"""Benchmark harness: accuracy metrics, experiment runner, timing, sweeps.

Every accuracy comparison is taken against the adaptive Runge-Kutta oracle
at tolerances 1e-10 on the same evaluation grid.  Timing uses the highest
resolution monotonic clock and excludes the one-time latent/derivative
evaluations, which are reusable across solves; timing runs expect exclusive
single-threaded execution.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .hierarchy import assemble_series
from .lindstedt import solve_lp_lotka_volterra, solve_lp_oscillator
from .network import LossWeights, finetune_head
from .oneshot import OneShotOdeSolver, first_order_form, one_shot_solve
from .pde import MolPdeBackend, OneShotPdeBackend, comparison_mesh, solve_pde_hierarchy
from .presets import SCENARIOS, build_scenario
from .problems import NonlinearProblemSpec
from .reference import (IntegratorSettings, discretize_pde, measure_frequency,
                        rk45_integrate, InsufficientOscillationError)

__all__ = ["MetricReport", "TimingReport", "compute_metrics", "reference_solution",
           "run_experiment", "benchmark_timing", "sweep_orders", "sweep_points",
           "make_finetune_problem"]

ORACLE = IntegratorSettings(rtol=1e-10, atol=1e-10)


@dataclass
class MetricReport:
    experiment: str
    method: str
    order: int
    epsilon: float
    n_points: int
    mae: float
    iae_curve: np.ndarray
    iae_times: np.ndarray
    omega_mae: float = None
    config_hash: str = ""
    seed: int = 0
    per_order_mae: list = field(default_factory=list)
    time_ms_median: float = None
    time_ms_mean: float = None
    extras: dict = field(default_factory=dict)

    @property
    def iae_final(self):
        return float(self.iae_curve[-1])


@dataclass
class TimingReport:
    task: str
    repetitions: int
    mean_ms: float
    median_ms: float
    min_ms: float
    excluded: str = ""

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")
        if not (self.min_ms <= self.median_ms <= self.mean_ms + 1e-12):
            raise ValueError("timing statistics are inconsistent")


def compute_metrics(approx, reference, grid, experiment="", method="",
                    order=0, epsilon=0.0, **kw):
    """MAE over the grid plus the running integral of the absolute error.

    For space-time fields the error is averaged over space before the time
    integral.
    """
    a = np.asarray(approx, dtype=float)
    r = np.asarray(reference, dtype=float)
    if a.shape != r.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {r.shape}")
    err = np.abs(a - r)
    mae = float(err.mean())
    if err.ndim == 1:
        tgrid = np.asarray(grid, dtype=float)
        pointwise = err
    elif err.ndim == 2 and err.shape[0] == 2:       # component pair (e.g. LV)
        tgrid = np.asarray(grid, dtype=float)
        pointwise = err.mean(axis=0)
    else:                                           # (nt, nx) field
        tgrid = np.asarray(grid[0] if isinstance(grid, tuple) else grid, float)
        pointwise = err.mean(axis=1)
    iae = np.concatenate([[0.0], np.cumsum(0.5 * (pointwise[1:] + pointwise[:-1])
                                           * np.diff(tgrid))])
    return MetricReport(experiment=experiment, method=method, order=order,
                        epsilon=epsilon, n_points=pointwise.size, mae=mae,
                        iae_curve=iae, iae_times=tgrid, **kw)


def _oscillator_rhs(problem):
    osc = problem.oscillator
    poly = osc.polynomial()
    eps = problem.epsilon
    w0, zeta = osc.omega0, osc.zeta

    def rhs(t, y):
        x, v = y
        nl = sum(c * x ** q for c, q in poly)
        return [v, -2.0 * zeta * w0 * v - w0 ** 2 * x - eps * nl
                + osc.external_forcing(np.array([t]))[0]]
    return rhs


def reference_solution(problem, grid):
    """Oracle solution of the nonlinear problem on the evaluation grid."""
    if problem.kind == "oscillator":
        t = np.asarray(grid, dtype=float)
        settings = IntegratorSettings(1e-10, 1e-10, dense_output_grid=t)
        traj = rk45_integrate(_oscillator_rhs(problem), problem.oscillator.ic,
                              (t[0], t[-1]), settings)
        return traj.states[:, 0], traj
    if problem.kind == "lotka_volterra":
        t = np.asarray(grid, dtype=float)
        a = problem.lv_alpha

        def rhs(tt, y):
            x, yv = y
            return [x - x * yv, -a * yv + a * x * yv]

        settings = IntegratorSettings(1e-10, 1e-10, dense_output_grid=t)
        traj = rk45_integrate(rhs, problem.lv_ic, (t[0], t[-1]), settings)
        return traj.states.T, traj
    # PDE reference: fine method-of-lines grid, nonlinear term pointwise
    x_cmp, t_cmp = grid
    pde = problem.pde
    eps = problem.epsilon
    if pde.kind == "kpp_fisher":
        reaction = lambda u: eps * u * (1.0 - u)
    else:
        reaction = lambda u: -eps * u ** pde.q
    forcing = None
    if problem.external_forcing is not None:
        forcing = lambda x, t: problem.external_forcing(x, t)
    mol = discretize_pde(pde, 201, pde.ic, bc=pde.bc,
                         space_domain=problem.space_domain,
                         reaction=reaction, forcing=forcing)
    settings = IntegratorSettings(1e-10, 1e-10, dense_output_grid=t_cmp)
    traj = rk45_integrate(mol.rhs, mol.y0, problem.time_domain, settings)
    states = traj.states
    if pde.kind == "wave":
        states = states[:, :mol.x_interior.size]
    full = mol.full_field(states)
    stride = 200 // x_cmp.size
    idx = np.arange(x_cmp.size) * stride
    if not np.allclose(mol.x[idx], x_cmp, atol=1e-12):
        raise ValueError("comparison grid does not embed in the oracle grid")
    return full[:, idx], traj


def _ode_grid(problem, n_points):
    t0, t1 = problem.time_domain
    return np.linspace(t0, t1, n_points)


def run_experiment(scenario_name, model, n_points=150, order=None, passes=1,
                   ic_strategy=None, seed=0, config_hash="", monitor=True,
                   per_order=False):
    """Run one named scenario against the oracle and report its metrics."""
    info, problem = build_scenario(scenario_name, order=order,
                                   strategy=ic_strategy)
    method = info["method"]
    eps = problem.epsilon
    if problem.kind in ("kpp_fisher", "wave"):
        x_cmp, t_cmp = comparison_mesh(problem.space_domain, problem.time_domain)
        op_kind = "heat_like" if problem.kind == "kpp_fisher" else "wave_like"
        from .oneshot import OperatorSpec
        op = (OperatorSpec(kind="heat_like", D=problem.pde.diffusion)
              if op_kind == "heat_like" else
              OperatorSpec(kind="wave_like", c=problem.pde.speed))
        backend = OneShotPdeBackend(model, op, problem.space_domain,
                                    problem.time_domain)
        run = solve_pde_hierarchy(problem, backend, x_cmp, t_cmp)
        ref, _ = reference_solution(problem, (x_cmp, t_cmp))
        report = compute_metrics(run.solution, ref, (t_cmp, x_cmp),
                                 experiment=scenario_name, method=method,
                                 order=problem.max_order, epsilon=eps,
                                 seed=seed, config_hash=config_hash)
        if per_order:
            report.per_order_mae = [
                float(np.abs(run.solution_at_order(k) - ref).mean())
                for k in range(problem.max_order + 1)]
        report.extras["run"] = run
        report.extras["reference"] = ref
        return report

    t = _ode_grid(problem, n_points)
    solver = OneShotOdeSolver(model, t)
    if problem.kind == "lotka_volterra":
        run = solve_lp_lotka_volterra(problem, solver, t_grid=t, monitor=monitor)
        ref, ref_traj = reference_solution(problem, t)
        approx = run.populations
        omega_mae = None
        try:
            omega_mae = abs(measure_frequency(t, ref[0]) - run.omega_total)
        except InsufficientOscillationError:
            pass
    elif method == "lindstedt_poincare":
        run = solve_lp_oscillator(problem, solver, t_grid=t, passes=passes,
                                  monitor=monitor)
        ref, ref_traj = reference_solution(problem, t)
        approx = run.solution
        omega_mae = None
        try:
            omega_mae = abs(measure_frequency(t, ref) - run.omega_total)
        except InsufficientOscillationError:
            pass
    else:
        from .hierarchy import solve_standard_oscillator
        series, handles = solve_standard_oscillator(problem, solver)
        ref, ref_traj = reference_solution(problem, t)

        class _StdRun:
            def __init__(self):
                self.series = series
                self.solution = series.assemble()

            def solution_at_order(self, k):
                return series.assemble(order=k)

        run = _StdRun()
        approx = run.solution
        omega_mae = None
    report = compute_metrics(approx, ref, t, experiment=scenario_name,
                             method=method, order=problem.max_order,
                             epsilon=eps, seed=seed, config_hash=config_hash,
                             omega_mae=omega_mae)
    if per_order:
        if problem.kind == "lotka_volterra":
            report.per_order_mae = [
                float(np.abs(run.populations_at_order(k) - ref).mean())
                for k in range(run.series.truncation_order + 1)]
        else:
            report.per_order_mae = [
                float(np.abs(run.solution_at_order(k) - ref).mean())
                for k in range(run.series.truncation_order + 1)]
    report.extras["run"] = run
    report.extras["reference"] = ref
    return report


def _time_task(fn, repetitions, warmup=1):
    for _ in range(warmup):
        fn()
    samples = np.empty(repetitions)
    for i in range(repetitions):
        t0 = time.perf_counter_ns()
        fn()
        samples[i] = (time.perf_counter_ns() - t0) / 1e6
    return samples


def make_finetune_problem(model, problem, grid, weights=None):
    """Objective and scorer for head-only gradient descent on the nonlinear
    oscillator: the full physics residual including the nonlinear term."""
    weights = weights or LossWeights()
    osc = problem.oscillator
    poly = osc.polynomial()
    eps = problem.epsilon
    w0, zeta = osc.omega0, osc.zeta
    m = model.config.latent_width
    ev = model.latent(grid)
    ev0 = model.latent(grid[:1])
    H1, H2 = ev.component(0, m), ev.component(1, m)
    dH1, dH2 = ev.dH_dt[:, :m], ev.dH_dt[:, m:]
    F = osc.external_forcing(grid)
    x0, v0 = osc.ic
    H1_0, H2_0 = ev0.component(0, m), ev0.component(1, m)
    ref, _ = reference_solution(problem, grid)

    def objective(W):
        w1, w2 = W[:, 0], W[:, 1]
        x = H1 @ w1
        v = H2 @ w2
        nl = sum(c * x ** q for c, q in poly)
        dnl = sum(c * q * x ** (q - 1) for c, q in poly)
        r1 = dH1 @ w1 - v
        r2 = dH2 @ w2 + 2 * zeta * w0 * v + w0 ** 2 * x + eps * nl - F
        d0 = H1_0 @ w1 - x0
        d1 = H2_0 @ w2 - v0
        loss = weights.w_pde * (r1 @ r1 + r2 @ r2) \
            + weights.w_ic * (d0 @ d0 + d1 @ d1)
        g1 = 2 * weights.w_pde * (dH1.T @ r1
                                  + H1.T @ ((w0 ** 2 + eps * dnl) * r2)) \
            + 2 * weights.w_ic * H1_0.T @ d0
        g2 = 2 * weights.w_pde * (-H2.T @ r1
                                  + dH2.T @ r2 + 2 * zeta * w0 * (H2.T @ r2)) \
            + 2 * weights.w_ic * H2_0.T @ d1
        return loss, np.column_stack([g1, g2])

    def score(W):
        return float(np.abs(H1 @ W[:, 0] - ref).mean())

    return objective, score


def benchmark_timing(task, model=None, scenario="undamped", repetitions=800,
                     n_points=150, tl_tol=2.5e-2, tl_cap=200_000):
    """Wall-time distribution of one solver path on the named scenario.

    ptl paths exclude the one-time latent and derivative evaluation (their
    caches are primed by a warmup run); the invert path refactors the normal
    matrix inside the timed region.  regular_tl times head-only gradient
    descent until it matches the oracle at ``tl_tol``.
    """
    info, problem = build_scenario(scenario)
    t = _ode_grid(problem, n_points)
    if task in ("ptl_no_invert", "ptl_invert"):
        solver = OneShotOdeSolver(model, t)

        if info["method"] == "lindstedt_poincare":
            def solve_once():
                return solve_lp_oscillator(problem, solver, t_grid=t, passes=1)
        else:
            from .hierarchy import solve_standard_oscillator

            def solve_once():
                return solve_standard_oscillator(problem, solver)

        solve_once()           # primes latent caches and the factorization
        system = next(iter(solver._systems.values()))
        if task == "ptl_invert":
            def fn():
                system.refactor()
                solve_once()
        else:
            fn = solve_once
        samples = _time_task(fn, repetitions)
        excluded = "latent evaluation and derivative precomputation"
    elif task == "rk45_tol1e-3":
        settings = IntegratorSettings(1e-3, 1e-3, dense_output_grid=t)
        rhs = _oscillator_rhs(problem)
        y0 = problem.oscillator.ic

        def fn():
            return rk45_integrate(rhs, y0, (t[0], t[-1]), settings)
        samples = _time_task(fn, repetitions)
        excluded = ""
    elif task == "regular_tl":
        objective, score = make_finetune_problem(model, problem, t)
        samples = np.empty(repetitions)
        for i in range(repetitions):
            res = finetune_head(model, objective, score, tol=tl_tol,
                                max_iters=tl_cap)
            samples[i] = res["wall_time"] * 1e3
        excluded = "latent evaluation (performed before the descent loop)"
    else:
        raise ValueError(f"unknown timing task {task!r}")
    return TimingReport(task=task, repetitions=repetitions,
                        mean_ms=float(samples.mean()),
                        median_ms=float(np.median(samples)),
                        min_ms=float(samples.min()), excluded=excluded)


def sweep_orders(scenario_name, model, orders, n_points=150, seed=0,
                 oracle_floor=True, timing_reps=25):
    """Per-order wall time and accuracy, with the oracle-solved hierarchy as
    the attainable floor."""
    from .hierarchy import OracleOdeSolver, solve_standard_oscillator

    info, problem_full = build_scenario(scenario_name, order=max(orders))
    t = _ode_grid(problem_full, n_points)
    ref, _ = reference_solution(problem_full, t)
    rows = []
    report = run_experiment(scenario_name, model, n_points=n_points,
                            order=max(orders), seed=seed, per_order=True,
                            monitor=False)
    run = report.extras["run"]

    floor_series = None
    if oracle_floor:
        hi = max(16.0, 1.6 * t[-1])
        osolver = OracleOdeSolver(np.linspace(t[0], hi, 4 * n_points), t_max=hi)
        if info["method"] == "lindstedt_poincare":
            floor_run = solve_lp_oscillator(problem_full, osolver, t_grid=t,
                                            monitor=False)
        else:
            series, handles = solve_standard_oscillator(problem_full, osolver)

            class _R:
                def solution_at_order(self, k):
                    return series.assemble(order=k)
            floor_run = _R()
        floor_series = floor_run

    for k in orders:
        info_k, problem_k = build_scenario(scenario_name, order=k)
        solver = OneShotOdeSolver(model, t)
        if info["method"] == "lindstedt_poincare":
            def solve_once():
                return solve_lp_oscillator(problem_k, solver, t_grid=t,
                                           passes=1, monitor=False)
        else:
            def solve_once():
                return solve_standard_oscillator(problem_k, solver)
        solve_once()
        samples = _time_task(solve_once, timing_reps)
        mae = float(np.abs(np.asarray(run.solution_at_order(k)) - ref).mean())
        row = dict(order=k, time_ms=float(np.median(samples)), mae=mae)
        if floor_series is not None:
            row["floor_mae"] = float(
                np.abs(np.asarray(floor_series.solution_at_order(k)) - ref).mean())
        rows.append(row)
    return rows


def sweep_points(scenario_name, model, n_values, order=None, seed=0):
    """Accuracy as a function of the inference point count."""
    rows = []
    for n in n_values:
        if n < 50:
            raise ValueError(f"need at least 50 inference points, got {n}")
        report = run_experiment(scenario_name, model, n_points=int(n),
                                order=order, seed=seed)
        rows.append(dict(n_points=int(n), mae=report.mae))
    return rows
