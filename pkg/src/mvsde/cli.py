"""Experiment command line: one subcommand per experiment, CSV output.

Subcommands: chaos, ppm, picard, strong-error, rates, complexity, density.
Common flags: --config, --seed (required; no silent entropy), --threads,
--out-dir.  Results are pure functions of (config, seed): reruns produce
byte-identical CSVs for any thread count.  Wall-clock timings are printed,
never written to files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, build_config, parse_config_text
from .density import nonneg_fix, reconstruct
from .fitting import linear_fit
from .mlmc import (
    allocate_levels,
    complexity_sweep,
    picard_run,
    pilot_level_variances,
    rate_test,
    structural_parameters,
)
from .model import gaussian_kernel_model, gaussian_projected_model
from .parallel import parallel_map
from .particle import SimulationError, TimeGrid, simulate, strong_error

__all__ = ["main"]


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(c) for c in row])
    print(f"wrote {path}")


def _grid(cfg, default_h=0.01):
    if cfg.level is not None:
        return TimeGrid.dyadic(cfg.horizon, cfg.level)
    h = cfg.h if cfg.h is not None else default_h
    try:
        return TimeGrid.from_step(cfg.horizon, h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_pm(cfg, K=None):
    return gaussian_projected_model(
        K if K is not None else cfg.K, cfg.sigma, cfg.x0, cfg.horizon,
        cfg.initial_law(),
    )


def _density_grid(cfg):
    return np.linspace(cfg.density_grid_lo, cfg.density_grid_hi,
                       cfg.density_grid_points)


def _density_rows(method, picard_step, t, gamma, grid):
    est = reconstruct(gamma, grid, t=t, source=method)
    fixed = nonneg_fix(est)
    return [
        (method, picard_step, t, y, raw, fix)
        for y, raw, fix in zip(grid, est.values, fixed.values)
    ]


def _write_simulation_outputs(out, engine, cfg, res):
    times = res.grid.times
    _write_csv(out / "summary.csv", ["t_index", "t", "mean_state", "sd_state"],
               [(j, times[j], res.node_means[j], res.node_sds[j])
                for j in range(times.size)])
    _write_csv(out / "gamma.csv", ["picard_step", "k", "t_index", "t", "value"],
               [(0, k, j, times[j], res.gamma[k, j])
                for k in range(res.gamma.shape[0])
                for j in range(times.size)])
    _write_csv(out / "cost.csv", ["rng_draws", "drift_evals", "basis_evals"],
               [(res.ledger.rng_draws, res.ledger.drift_evals,
                 res.ledger.basis_evals)])
    _write_csv(out / "density.csv",
               ["method", "picard_step", "t", "y", "value_raw", "value_fixed"],
               _density_rows(engine, 0, cfg.horizon, res.gamma[:, -1],
                             _density_grid(cfg)))
    print(f"{engine}: N={res.states.size} terminal mean={res.states.mean():.6f} "
          f"sd={res.states.std():.6f} ({res.seconds:.2f}s)")


def cmd_chaos(cfg, seed, threads, out):
    model = gaussian_kernel_model(cfg.sigma, cfg.x0, cfg.horizon, cfg.initial_law())
    res = simulate("chaos", model, _grid(cfg), cfg.n_particles, seed,
                   gamma_order=cfg.K)
    _write_simulation_outputs(out, "chaos", cfg, res)
    return 0


def cmd_ppm(cfg, seed, threads, out):
    res = simulate("ppm", _build_pm(cfg), _grid(cfg), cfg.n_particles, seed)
    _write_simulation_outputs(out, "ppm", cfg, res)
    return 0


def cmd_strong_error(cfg, seed, threads, out):
    ks, had_duplicates = cfg.k_values()
    if had_duplicates:
        print("warning: duplicate K values removed")
    if not ks:
        raise ConfigError("empty K range for strong-error")
    if any(k < 0 for k in ks):
        raise ConfigError("K values must be non-negative")

    grid = _grid(cfg)
    model = gaussian_kernel_model(cfg.sigma, cfg.x0, cfg.horizon, cfg.initial_law())
    chaos_res = simulate("chaos", model, grid, cfg.n_particles, seed,
                         record_gamma=False)

    def _one(k):
        pm = _build_pm(cfg, K=k)
        return strong_error(cfg.n_particles, k, model, pm, grid, seed,
                            chaos_result=chaos_res)

    results = parallel_map(_one, ks, threads)
    _write_csv(out / "strong_error.csv", ["K", "E_NK", "cost_gain"],
               [(r.K, r.error, r.cost_gain) for r in results])
    for r in results:
        print(f"K={r.K:<3d} E={r.error:.6e} cost_gain={r.cost_gain} "
              f"time_gain={r.time_gain:.3f}s")

    positive = [r for r in results if r.error > 0.0]
    if len(positive) >= 2:
        fit = linear_fit([r.K for r in positive],
                         [math.log(r.error) for r in positive])
        print(f"log E vs K: slope={fit.slope:.4f} r2={fit.r_squared:.4f}")
        gains = [r for r in positive if r.cost_gain > 0]
        if len(gains) >= 2:
            fit_g = linear_fit([math.log(r.cost_gain) for r in gains],
                               [math.log(r.error) for r in gains])
            print(f"log E vs log cost gain: slope={fit_g.slope:.4f} "
                  f"r2={fit_g.r_squared:.4f}")
    else:
        print("warning: fewer than 2 usable K values, no fit")
    return 0


def cmd_rates(cfg, seed, threads, out):
    pm = _build_pm(cfg)
    max_level = cfg.level if cfg.level is not None else 5
    steps = cfg.picard_steps if cfg.picard_steps is not None else 4
    tables = rate_test(pm, cfg.n_particles, max_level, steps, seed,
                       picard0=cfg.picard0_law(), table_level=cfg.table_level,
                       threads=threads)
    rows = [(t.picard_step, int(lvl), a, b)
            for t in tables for lvl, a, b in zip(t.levels, t.a, t.b)]
    _write_csv(out / "rates.csv", ["picard_step", "level", "a_ell", "b_ell"], rows)
    for t in tables:
        print(f"picard step {t.picard_step}: weak slope={t.weak_slope:.3f} "
              f"(r2={t.weak_r2:.3f}) strong slope={t.strong_slope:.3f} "
              f"(r2={t.strong_r2:.3f})")
    return 0


def cmd_picard(cfg, seed, threads, out):
    K, _, L = structural_parameters(cfg.epsilon, cfg.horizon)
    if cfg.K >= 0:
        K = cfg.K
    pm = _build_pm(cfg, K=K)
    pilot = pilot_level_variances(pm, L, seed, picard0=cfg.picard0_law(),
                                  table_level=cfg.table_level, threads=threads)
    alloc = allocate_levels(cfg.epsilon, pilot, horizon=cfg.horizon,
                            picard_steps=cfg.picard_steps)
    print(f"allocation: K={K} M={alloc.picard_steps} L={alloc.max_level} "
          f"N={alloc.samples}")
    res = picard_run(pm, alloc, seed, picard0=cfg.picard0_law(),
                     table_level=cfg.table_level, threads=threads)
    rows = []
    for table in res.tables:
        times = table.grid.times
        rows.extend((table.picard_step, k, j, times[j], table.values[k, j])
                    for k in range(table.values.shape[0])
                    for j in range(times.size))
    _write_csv(out / "gamma.csv", ["picard_step", "k", "t_index", "t", "value"], rows)
    _write_csv(out / "cost.csv", ["rng_draws", "drift_evals", "basis_evals"],
               [(res.ledger.rng_draws, res.ledger.drift_evals,
                 res.ledger.basis_evals)])
    print(f"M_T(P) = {res.value:.6f}")
    for m, lg in enumerate(res.step_ledgers):
        print(f"  picard step {m}: rng_draws={lg.rng_draws} "
              f"drift_evals={lg.drift_evals} basis_evals={lg.basis_evals}")
    return 0


def cmd_complexity(cfg, seed, threads, out):
    eps_list = cfg.eps_values()
    methods = cfg.method_names()
    seeds = [seed + i for i in range(cfg.replicates)]
    rows = complexity_sweep(eps_list, seeds, methods=methods, sigma=cfg.sigma,
                            x0=cfg.x0, horizon=cfg.horizon,
                            initial=cfg.initial_law(), threads=threads)
    _write_csv(out / "complexity.csv",
               ["method", "epsilon", "rng_draws", "drift_evals", "mse_est"],
               [(r.method, r.epsilon, r.rng_draws, r.drift_evals, r.mse_est)
                for r in rows])
    for method in methods:
        sub = [r for r in rows if r.method == method]
        fit = linear_fit([math.log(1.0 / r.epsilon) for r in sub],
                         [math.log(r.rng_draws + r.drift_evals) for r in sub])
        print(f"{method}: cost slope vs log(1/eps) = {fit.slope:.3f} "
              f"(r2={fit.r_squared:.4f})")
    return 0


def cmd_density(cfg, seed, threads, out):
    pm = _build_pm(cfg)
    grid = _density_grid(cfg)
    ppm_res = simulate("ppm", pm, _grid(cfg), cfg.n_ppm, seed)
    rows = _density_rows("ppm", 0, cfg.horizon, ppm_res.gamma[:, -1], grid)

    _, _, L = structural_parameters(cfg.epsilon, cfg.horizon)
    pilot = pilot_level_variances(pm, L, seed + 1, picard0=cfg.picard0_law(),
                                  threads=threads)
    alloc = allocate_levels(cfg.epsilon, pilot, horizon=cfg.horizon,
                            picard_steps=cfg.picard_steps)
    res = picard_run(pm, alloc, seed + 1, picard0=cfg.picard0_law(),
                     threads=threads)
    for table in res.tables[1:]:
        rows.extend(_density_rows("mlmc_picard", table.picard_step, cfg.horizon,
                                  table.values[:, -1], grid))
    _write_csv(out / "density.csv",
               ["method", "picard_step", "t", "y", "value_raw", "value_fixed"],
               rows)
    print(f"ppm N={cfg.n_ppm}, mlmc M={alloc.picard_steps} "
          f"L={alloc.max_level} N={alloc.samples}")
    return 0


_COMMANDS = {
    "chaos": cmd_chaos,
    "ppm": cmd_ppm,
    "picard": cmd_picard,
    "strong-error": cmd_strong_error,
    "rates": cmd_rates,
    "complexity": cmd_complexity,
    "density": cmd_density,
}

# Per-command defaults layered under config file and flags.  The rate and
# density experiments start the Picard iteration from N(0.5, 1); density
# also starts the paths there (a narrow terminal law is not resolvable by
# ~10 basis functions, so the cross-method comparison uses the spread
# initial condition).
_COMMAND_DEFAULTS = {
    "rates": {
        "method.N": "100000", "method.level": "5", "method.M": "4",
        "mlmc.picard0": "gaussian", "mlmc.picard0_mean": "0.5",
        "mlmc.picard0_std": "1.0",
    },
    "picard": {"method.K": "-1"},
    "density": {
        "model.init": "gaussian", "model.init_mean": "0.5",
        "model.init_std": "1.0", "method.K": "10", "density.n_ppm": "10000",
    },
}

_FLAG_TO_KEY = {
    "sigma": "model.sigma", "x0": "model.x0", "T": "model.T",
    "init": "model.init", "init_mean": "model.init_mean",
    "init_std": "model.init_std", "N": "method.N", "K": "method.K",
    "h": "method.h", "level": "method.level", "M": "method.M",
    "eps": "method.eps", "L0": "method.L0", "k_min": "method.k_min",
    "k_max": "method.k_max", "k_list": "method.k_list", "picard0": "mlmc.picard0",
    "picard0_mean": "mlmc.picard0_mean", "picard0_std": "mlmc.picard0_std",
    "eps_list": "complexity.eps_list", "replicates": "complexity.replicates",
    "methods": "complexity.methods", "n_ppm": "density.n_ppm",
}


def _parser():
    parser = argparse.ArgumentParser(
        prog="mvsde",
        description="Mean-field SDE experiments: particle systems, "
                    "projections and iterative MLMC.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out-dir", type=Path, default=Path("."))
        p.add_argument("--sigma", type=float)
        p.add_argument("--x0", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--init", choices=["point", "gaussian"])
        p.add_argument("--init-mean", dest="init_mean", type=float)
        p.add_argument("--init-std", dest="init_std", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--K", type=int)
        p.add_argument("--h", type=float)
        p.add_argument("--level", type=int)
        p.add_argument("--M", type=int)
        p.add_argument("--eps", type=float)
        p.add_argument("--L0", type=int)
        p.add_argument("--k-min", dest="k_min", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--k-list", dest="k_list")
        p.add_argument("--picard0", choices=["point", "gaussian"])
        p.add_argument("--picard0-mean", dest="picard0_mean", type=float)
        p.add_argument("--picard0-std", dest="picard0_std", type=float)
        p.add_argument("--eps-list", dest="eps_list")
        p.add_argument("--replicates", type=int)
        p.add_argument("--methods")
        p.add_argument("--n-ppm", dest="n_ppm", type=int)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        file_values = dict(_COMMAND_DEFAULTS.get(args.command, {}))
        if args.config is not None:
            if not args.config.is_file():
                raise ConfigError(f"config file not found: {args.config}")
            file_values.update(parse_config_text(args.config.read_text()))
        overrides = {}
        for flag, key in _FLAG_TO_KEY.items():
            value = getattr(args, flag, None)
            if value is not None:
                overrides[key] = str(value)
        # an explicit grid choice on the command line replaces the other one
        if "method.h" in overrides:
            file_values.pop("method.level", None)
        if "method.level" in overrides:
            file_values.pop("method.h", None)
        cfg = build_config(file_values, overrides)

        out = args.out_dir
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, args.seed, args.threads, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
