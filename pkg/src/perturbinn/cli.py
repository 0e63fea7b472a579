"""Command-line entry points: train, solve, perturb, bench.

Checkpoints and reports default to the directory named by the
``PTL_DATA_DIR`` environment variable (falling back to ./perturbinn_data).
All randomness is seeded from the configuration, so reruns reproduce
identical outputs.
"""

import argparse
import os
import sys

import numpy as np

from .bench import (benchmark_timing, run_experiment, sweep_orders,
                    sweep_points)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, parse_config
from .presets import (SCENARIOS, build_heads, build_scenario, materialize_heads,
                      model_config, training_grids)
from .report import (emit_report, field_figure, frequency_figure,
                     order_sweep_figure, points_sweep_figure, solution_figure,
                     write_trajectory_csv)

__all__ = ["main", "run_cli", "data_dir"]

TIMING_TASKS = ("ptl_no_invert", "ptl_invert", "rk45_tol1e-3", "regular_tl")


def data_dir():
    return os.environ.get("PTL_DATA_DIR", os.path.join(os.getcwd(),
                                                       "perturbinn_data"))


def _checkpoint_path(preset):
    return os.path.join(data_dir(), f"{preset}.ckpt")


def _load_model_for(scenario, model_path=None):
    preset = SCENARIOS[scenario]["model"]
    path = model_path or _checkpoint_path(preset)
    if not os.path.exists(path):
        raise CheckpointError(
            f"no checkpoint at {path}; pretrain it with "
            f"'perturbinn train --preset {preset} --out {path}'")
    model = load_checkpoint(path)
    ck_preset = model.metadata.get("preset")
    if ck_preset is not None and ck_preset != preset:
        raise CheckpointError(
            f"checkpoint {path} was trained for the {ck_preset!r} family but "
            f"scenario {scenario!r} needs {preset!r}")
    expected_dim = 2 if preset in ("kpp", "wave") else 1
    if model.config.input_dim != expected_dim:
        raise CheckpointError(
            f"checkpoint {path} has input dimension {model.config.input_dim}, "
            f"scenario {scenario!r} needs {expected_dim}")
    return model


def _resolve_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    elif getattr(args, "scenario", None):
        text = f"scenario: {args.scenario}\n"
        cfg = parse_config(text)
    else:
        raise ConfigError("supply --config or --scenario")
    overrides = {}
    for key in ("seed", "passes", "method", "n_points"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "orders", None) is not None:
        overrides["corrections"] = args.orders
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def _cmd_train(args):
    preset = args.preset
    info = model_config(preset)
    grids = training_grids(preset)
    heads = materialize_heads(build_heads(preset, seed=args.seed), grids, preset)
    from dataclasses import replace as dc_replace
    config = dc_replace(info["config"], seed=info["config"].seed + args.seed)
    epochs = args.epochs or info["epochs"]
    from .network import train_multihead
    print(f"training preset {preset!r}: {len(heads)} heads, {epochs} epochs")
    model = train_multihead(config, heads, grids, epochs=epochs,
                            log_every=max(epochs // 10, 1),
                            callback=lambda s, l: print(f"  step {s}: "
                                                        f"mean loss {l:.3e}"))
    model.metadata.update(seed=args.seed, preset=preset)
    out = args.out or _checkpoint_path(preset)
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    save_checkpoint(model, out, preset=preset)
    mean_loss = float(np.mean(model.head_losses))
    print(f"saved {out}; mean head loss {mean_loss:.3e}, "
          f"max {max(model.head_losses):.3e}")
    return 0


def _cmd_solve(args):
    cfg = _resolve_config(args)
    model = _load_model_for(cfg.scenario, args.model)
    report = run_experiment(cfg.scenario, model, n_points=cfg.n_points,
                            order=cfg.corrections, passes=cfg.passes,
                            ic_strategy=cfg.ic_strategy, seed=cfg.seed,
                            config_hash=cfg.hash, per_order=True)
    out = args.out or os.path.join(data_dir(), f"{cfg.scenario}_run.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    base, _ = os.path.splitext(out)
    run = report.extras["run"]
    ref = report.extras["reference"]
    info, problem = build_scenario(cfg.scenario, order=cfg.corrections)
    if problem.kind in ("kpp_fisher", "wave"):
        np.savetxt(base + "_field.csv",
                   np.asarray(run.solution), delimiter=",", fmt="%.12g")
        if args.figures:
            field_figure(base + "_field.png", run.x, run.t, run.solution, ref,
                         title=cfg.scenario)
    elif problem.kind == "lotka_volterra":
        write_trajectory_csv(base + "_trajectory.csv", run.t_grid,
                             {"prey": run.populations[0],
                              "predator": run.populations[1],
                              "prey_ref": ref[0], "predator_ref": ref[1]})
        if args.figures:
            solution_figure(base + "_trajectory.png", run.t_grid,
                            run.populations[0], ref[0], title=cfg.scenario)
            frequency_figure(base + "_frequency.png", run.series.frequency,
                             title=cfg.scenario)
    else:
        approx = run.solution if hasattr(run, "solution") else None
        write_trajectory_csv(base + "_trajectory.csv", report.iae_times,
                             {"x": approx, "x_ref": ref,
                              "iae": report.iae_curve})
        if args.figures:
            solution_figure(base + "_trajectory.png", report.iae_times, approx,
                            ref, title=cfg.scenario)
            if getattr(run, "series", None) is not None and \
                    run.series.frequency is not None:
                frequency_figure(base + "_frequency.png", run.series.frequency,
                                 title=cfg.scenario)
    emit_report([report], out, fmt="csv")
    print(f"{cfg.scenario}: MAE {report.mae:.4e} "
          f"(IAE final {report.iae_final:.4e}) -> {out}")
    if cfg.mae_tolerance is not None and report.mae > cfg.mae_tolerance:
        print(f"warning: MAE exceeds the scenario tolerance "
              f"{cfg.mae_tolerance:.2e}")
    return 0


def _cmd_perturb(args):
    from .hierarchy import OracleOdeSolver, solve_standard_oscillator
    from .lindstedt import solve_lp_lotka_volterra, solve_lp_oscillator

    cfg = _resolve_config(args)
    info, problem = build_scenario(cfg.scenario, order=cfg.corrections,
                                   strategy=cfg.ic_strategy)
    if problem.kind in ("kpp_fisher", "wave"):
        raise ConfigError("the perturb command emits ODE hierarchies; "
                          "PDE scenarios run through 'solve'")
    t0, t1 = problem.time_domain
    t = np.linspace(t0, t1, cfg.n_points)
    hi = max(2.2 * np.pi / (np.sqrt(problem.lv_alpha)
                            if problem.kind == "lotka_volterra" else 1.0),
             1.6 * t1)
    solver = OracleOdeSolver(np.linspace(t0, hi, 4 * cfg.n_points), t_max=hi)
    out = args.out or os.path.join(data_dir(), f"{cfg.scenario}_hierarchy.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    base, _ = os.path.splitext(out)
    method = cfg.method if args.method is None else args.method
    if problem.kind == "lotka_volterra":
        run = solve_lp_lotka_volterra(problem, solver, t_grid=t)
        cols = {}
        for n, c in enumerate(run.series.corrections):
            vals = solver.values(run.handles[n], t)
            cols[f"xi_{n}"] = vals[0]
            cols[f"eta_{n}"] = vals[1]
        write_trajectory_csv(out, t, cols)
        freq = run.series.frequency
    elif method == "lindstedt_poincare":
        run = solve_lp_oscillator(problem, solver, t_grid=t, passes=cfg.passes)
        cols = {f"u_{n}": solver.values(run.handles[n], t)[0]
                for n in range(len(run.handles))}
        write_trajectory_csv(out, t, cols)
        freq = run.series.frequency
    else:
        series, handles = solve_standard_oscillator(problem, solver)
        cols = {f"u_{n}": solver.values(handles[n], t)[0]
                for n in range(len(handles))}
        write_trajectory_csv(out, t, cols)
        freq = None
    if freq is not None:
        lines = ["order,omega,contribution"]
        for n, (w, c) in enumerate(zip(freq.omega_n, freq.contributions())):
            lines.append(f"{n},{w:.12g},{c:.12g}")
        with open(base + "_frequency.csv", "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"frequency series: {[round(w, 6) for w in freq.omega_n]} "
              f"(truncation {run.series.truncation_order})")
    print(f"hierarchy written to {out}")
    return 0


def _cmd_bench(args):
    cfg = _resolve_config(args)
    task = args.task or cfg.task
    if task is None:
        raise ConfigError("bench needs --task")
    out = args.out or os.path.join(data_dir(), f"bench_{task}.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    base, _ = os.path.splitext(out)
    reps = args.reps or cfg.repetitions
    if task in TIMING_TASKS:
        model = None
        if task != "rk45_tol1e-3":
            model = _load_model_for(cfg.scenario, args.model)
        if task == "regular_tl":
            reps = min(reps, 3)
        tr = benchmark_timing(task, model=model, scenario=cfg.scenario,
                              repetitions=reps, n_points=cfg.n_points)
        lines = ["task,repetitions,median_ms,mean_ms,min_ms,excluded",
                 f"{tr.task},{tr.repetitions},{tr.median_ms:.6g},"
                 f"{tr.mean_ms:.6g},{tr.min_ms:.6g},{tr.excluded}"]
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"{task}: median {tr.median_ms:.3f} ms over {tr.repetitions} reps "
              f"-> {out}")
    elif task == "sweep_orders":
        model = _load_model_for(cfg.scenario, args.model)
        rows = sweep_orders(cfg.scenario, model,
                            orders=list(range(cfg.corrections + 1)),
                            n_points=cfg.n_points, seed=cfg.seed)
        header = "order,time_ms,mae" + (",floor_mae" if "floor_mae" in rows[0]
                                        else "")
        lines = [header]
        for r in rows:
            vals = [str(r["order"]), f"{r['time_ms']:.6g}", f"{r['mae']:.6g}"]
            if "floor_mae" in r:
                vals.append(f"{r['floor_mae']:.6g}")
            lines.append(",".join(vals))
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        if args.figures:
            order_sweep_figure(base + ".png", rows, title=cfg.scenario)
        print(f"order sweep -> {out}")
    elif task == "sweep_points":
        model = _load_model_for(cfg.scenario, args.model)
        rows = sweep_points(cfg.scenario, model, (100, 200, 400, 500),
                            order=cfg.corrections, seed=cfg.seed)
        lines = ["n_points,mae"] + [f"{r['n_points']},{r['mae']:.6g}"
                                    for r in rows]
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        if args.figures:
            points_sweep_figure(base + ".png", rows, title=cfg.scenario)
        print(f"points sweep -> {out}")
    else:
        raise ConfigError(f"unknown bench task {task!r}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="perturbinn",
        description="Weakly nonlinear solver: perturbation hierarchies with "
                    "closed-form network transfer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="pretrain a multi-head model preset")
    p_train.add_argument("--preset", required=True,
                         choices=sorted(set(s["model"] for s in
                                            SCENARIOS.values())))
    p_train.add_argument("--out", default=None)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.set_defaults(fn=_cmd_train)

    def common(p, with_model=True):
        p.add_argument("--config", default=None)
        p.add_argument("--scenario", default=None,
                       choices=sorted(SCENARIOS))
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--orders", type=int, default=None)
        p.add_argument("--method", default=None,
                       choices=("standard", "lindstedt_poincare"))
        p.add_argument("--passes", type=int, default=None)
        if with_model:
            p.add_argument("--model", default=None)

    p_solve = sub.add_parser("solve", help="run one scenario against the oracle")
    common(p_solve)
    p_solve.add_argument("--figures", action=argparse.BooleanOptionalAction,
                         default=True)
    p_solve.set_defaults(fn=_cmd_solve)

    p_pert = sub.add_parser("perturb", help="emit the hierarchy and frequency "
                                            "series via the oracle, no network")
    common(p_pert, with_model=False)
    p_pert.add_argument("--n-points", dest="n_points", type=int, default=None)
    p_pert.set_defaults(fn=_cmd_perturb)

    p_bench = sub.add_parser("bench", help="timing and accuracy sweeps")
    common(p_bench)
    p_bench.add_argument("--task", default=None,
                         choices=TIMING_TASKS + ("sweep_orders", "sweep_points"))
    p_bench.add_argument("--reps", type=int, default=None)
    p_bench.add_argument("--figures", action=argparse.BooleanOptionalAction,
                         default=True)
    p_bench.set_defaults(fn=_cmd_bench)
    return parser


def run_cli(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ConfigError, CheckpointError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
