"""Iterative multilevel Monte Carlo for the projected mean-field SDE.

The measure dependence of the projected SDE is frozen at the previous
Picard step through a coefficient table ``D^{m-1}`` (values of gamma_k on
a dyadic grid).  Within a Picard step the SDE is a plain time-inhomogeneous
SDE, so standard MLMC applies: level ell uses the dyadic grid with
2^ell steps, and the fine/coarse members of a pair share one Brownian
path (each coarse increment is the bit-exact sum of its two fine
children).  The next table is the telescoping estimator

    M_{k,t} = sum_ell (1/N_ell) sum_i [phi_k(Y_t^{i,ell}) - phi_k(Y_t^{i,ell-1})]

with the convention phi_k(Y^{.,-1}) = 0 at the base level.  Paths are
simulated pair by pair and discarded once their contributions are
accumulated; only the (K+1) x (2^L0 + 1) table survives a Picard step.

Off-grid evaluations (table nodes finer than a path's grid, and the
drift coefficients between table nodes) use linear interpolation in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .basis import PHI_UNIFORM_BOUND, phi_table
from .cost import CostLedger
from .model import InitialLaw, gaussian_projected_model
from .parallel import parallel_map
from .particle import SimulationError, TimeGrid, simulate
from .rng import NormalStream, StreamKey

__all__ = [
    "GammaTable",
    "LevelAllocation",
    "PairStats",
    "PicardResult",
    "PilotStats",
    "RateTable",
    "ComplexityRow",
    "allocate_levels",
    "complexity_sweep",
    "initial_gamma_table",
    "interpolate_gamma",
    "mlmc_gamma_estimate",
    "picard_run",
    "pilot_level_variances",
    "rate_test",
    "simulate_level_pair",
    "structural_parameters",
]

GAMMA_INSTABILITY_TOL = 1e-3
BENCHMARK_VALUE = 1.4951  # terminal mean of the reference model, large-N proxy


@dataclass
class GammaTable:
    """Coefficient estimates gamma_k(t) on a dyadic grid, one Picard step.

    values[k, j] estimates E[phi_k(X_{t_j})]; ``variances`` (optional)
    carries the per-entry estimator variance accumulated over levels.
    """

    values: np.ndarray
    grid: TimeGrid
    picard_step: int
    variances: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.num_steps + 1:
            raise ValueError("values must be (K+1) x (num_steps+1)")

    @property
    def K(self):
        return self.values.shape[0] - 1

    def interpolate(self, t):
        """Linear interpolation in time; exact at grid nodes."""
        if t < 0.0 or t > self.grid.horizon + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.grid.horizon}]")
        pos = min(t, self.grid.horizon) / self.grid.step
        j = min(int(math.floor(pos)), self.grid.num_steps)
        w = pos - j
        if w == 0.0:
            return self.values[:, j].copy()
        return (1.0 - w) * self.values[:, j] + w * self.values[:, j + 1]

    def interpolate_many(self, times):
        """Rows of interpolated coefficient vectors, shape (len(times), K+1)."""
        return np.stack([self.interpolate(t) for t in np.asarray(times, dtype=float)])


def interpolate_gamma(table, t):
    """Coefficient vector of ``table`` at time t (linear in time)."""
    return table.interpolate(t)


@dataclass(frozen=True)
class LevelAllocation:
    """Levels 0..max_level with N_ell samples each, M Picard steps."""

    max_level: int
    samples: tuple
    picard_steps: int
    truncation_order: Optional[int] = None

    def __post_init__(self):
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")
        if len(self.samples) != self.max_level + 1:
            raise ValueError("need one sample count per level 0..max_level")
        if any(n < 1 for n in self.samples):
            raise ValueError("all sample counts must be >= 1")
        if self.picard_steps < 1:
            raise ValueError("picard_steps must be >= 1")


@dataclass
class PairStats:
    """Per-level sums of coupled fine/coarse differences over the particles."""

    level: int
    n_samples: int
    phi_sum: Optional[np.ndarray]      # (K+1, table nodes)
    phi_sumsq: Optional[np.ndarray]
    pay_sum: Optional[np.ndarray]      # (payoff nodes,)
    pay_sumsq: Optional[np.ndarray]
    fine_increments: Optional[np.ndarray] = None
    coarse_increments: Optional[np.ndarray] = None


def _interp_positions(n_eval_steps, n_path_steps):
    """Map eval node j (on the n_eval_steps grid) into the path grid:
    step index s_j and linear weight w_j, both exact dyadic rationals."""
    j = np.arange(n_eval_steps + 1)
    num = j * n_path_steps
    s = num // n_eval_steps
    w = (num - s * n_eval_steps) / n_eval_steps
    s = np.where(j == n_eval_steps, n_path_steps - 1, s).astype(int)
    w = np.where(j == n_eval_steps, 1.0, w)
    return s, w


def _bucket_by_coarse_interval(s, w, pair_of):
    """Group eval nodes by the coarse interval (fine step // 2) they land in."""
    buckets = {}
    for node, (step, weight) in enumerate(zip(s, w)):
        buckets.setdefault(pair_of(step), []).append((node, step, weight))
    return buckets


def _state_at(node_weight, cur, nxt):
    if node_weight == 0.0:
        return cur
    if node_weight == 1.0:
        return nxt
    return (1.0 - node_weight) * cur + node_weight * nxt


def simulate_level_pair(pm, gamma_prev, level, n_samples, seed, picard_step,
                        eval_grid=None, payoff=None, payoff_grid=None,
                        ledger=None, record_increments=False):
    """Simulate one coupled fine/coarse pair of the gamma-frozen SDE.

    The fine member lives on the dyadic level-``level`` grid, the coarse
    member one level below and driven by the summed fine increments; at
    level 0 the coarse member is absent and its contributions are zero.
    Drift/diffusion at time t use ``gamma_prev`` interpolated at the last
    grid node of the member's own grid.  Returns the per-particle sums of
    phi_k differences on ``eval_grid`` and payoff differences on
    ``payoff_grid``.
    """
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if ledger is None:
        ledger = CostLedger()
    if eval_grid is None and payoff is None:
        raise ValueError("nothing to collect: give eval_grid and/or payoff")
    if payoff is not None and payoff_grid is None:
        payoff_grid = eval_grid
    horizon = pm.horizon
    K = pm.K
    fine = TimeGrid.dyadic(horizon, level)
    nf = fine.num_steps
    h = fine.step
    sqrt_h = math.sqrt(h)
    has_coarse = level > 0
    nc = nf // 2

    init = NormalStream(StreamKey(seed, "init", picard_step, level))
    inc = NormalStream(StreamKey(seed, "increment", picard_step, level))
    x_f = pm.initial.sample(n_samples, init, ledger)
    x_c = x_f.copy() if has_coarse else None

    gam_f = gamma_prev.interpolate_many(np.arange(nf) * h)
    gam_c = gamma_prev.interpolate_many(np.arange(nc) * 2.0 * h) if has_coarse else None

    pair_of = (lambda s: s // 2) if has_coarse else (lambda s: s)
    phi_nodes = {}
    pay_nodes = {}
    if eval_grid is not None:
        sF, wF = _interp_positions(eval_grid.num_steps, nf)
        phi_nodes = _bucket_by_coarse_interval(sF, wF, pair_of)
        if has_coarse:
            sC, wC = _interp_positions(eval_grid.num_steps, nc)
        phi_sum = np.zeros((K + 1, eval_grid.num_steps + 1))
        phi_sumsq = np.zeros_like(phi_sum)
    else:
        phi_sum = phi_sumsq = None
    if payoff is not None:
        sPF, wPF = _interp_positions(payoff_grid.num_steps, nf)
        pay_nodes = _bucket_by_coarse_interval(sPF, wPF, pair_of)
        if has_coarse:
            sPC, wPC = _interp_positions(payoff_grid.num_steps, nc)
        pay_sum = np.zeros(payoff_grid.num_steps + 1)
        pay_sumsq = np.zeros_like(pay_sum)
    else:
        pay_sum = pay_sumsq = None

    rec_f = np.empty((nf, n_samples)) if record_increments else None
    rec_c = np.empty((nc, n_samples)) if (record_increments and has_coarse) else None

    def _euler(x, gamma_vec, step_h, dW, tag):
        drift = pm.drift(x, gamma_vec)
        ledger.drift_evals += (K + 1) * n_samples
        new = x + drift * step_h + pm.diffusion(x, gamma_vec) * dW
        if not np.all(np.isfinite(new)):
            raise SimulationError(
                f"non-finite state in level-{level} pair at {tag} "
                f"(picard step {picard_step})"
            )
        return new

    def _collect(interval, fine_states, coarse_states):
        # fine_states / coarse_states: dict step -> (cur, nxt)
        for node, step, weight in phi_nodes.get(interval, ()):
            xf = _state_at(weight, *fine_states[step])
            val = phi_table(K, xf)
            ledger.basis_evals += (K + 1) * n_samples
            if has_coarse:
                xc = _state_at(wC[node], *coarse_states[sC[node]])
                val = val - phi_table(K, xc)
                ledger.basis_evals += (K + 1) * n_samples
            phi_sum[:, node] += val.sum(axis=1)
            phi_sumsq[:, node] += (val * val).sum(axis=1)
        for node, step, weight in pay_nodes.get(interval, ()):
            pf = np.asarray(payoff(_state_at(weight, *fine_states[step])), dtype=float)
            if has_coarse:
                pf = pf - payoff(_state_at(wPC[node], *coarse_states[sPC[node]]))
            pay_sum[node] += pf.sum()
            pay_sumsq[node] += (pf * pf).sum()

    n_intervals = nc if has_coarse else nf
    for sc in range(n_intervals):
        fine_states = {}
        if has_coarse:
            dw_pair = 0.0
            for sub in range(2):
                s = 2 * sc + sub
                dW = inc.normals(n_samples) * sqrt_h
                ledger.rng_draws += n_samples
                if record_increments:
                    rec_f[s] = dW
                x_new = _euler(x_f, gam_f[s], h, dW, f"fine step {s}")
                fine_states[s] = (x_f, x_new)
                x_f = x_new
                dw_pair = dw_pair + dW
            if record_increments:
                rec_c[sc] = dw_pair
            xc_new = _euler(x_c, gam_c[sc], 2.0 * h, dw_pair, f"coarse step {sc}")
            coarse_states = {sc: (x_c, xc_new)}
            x_c = xc_new
        else:
            dW = inc.normals(n_samples) * sqrt_h
            ledger.rng_draws += n_samples
            if record_increments:
                rec_f[sc] = dW
            x_new = _euler(x_f, gam_f[sc], h, dW, f"fine step {sc}")
            fine_states[sc] = (x_f, x_new)
            x_f = x_new
            coarse_states = None
        _collect(sc, fine_states, coarse_states)

    return PairStats(level, n_samples, phi_sum, phi_sumsq, pay_sum, pay_sumsq,
                     rec_f, rec_c)


def initial_gamma_table(pm, table_grid, seed, n_samples, law=None, ledger=None):
    """Picard-0 table: the zeroth iterate is the constant-in-time process
    distributed as ``law`` (default: the model's initial law).

    A point mass gives the exact table phi_k(x0); a Gaussian law gives the
    plain Monte Carlo average over ``n_samples`` draws (all multilevel
    corrections of a constant process vanish).
    """
    if ledger is None:
        ledger = CostLedger()
    if law is None:
        law = pm.initial
    n_nodes = table_grid.num_steps + 1
    if law.kind == "point":
        column = phi_table(pm.K, np.array([law.mean]))[:, 0]
        values = np.tile(column[:, None], (1, n_nodes))
        variances = np.zeros_like(values)
    else:
        draws = law.sample(n_samples, NormalStream(StreamKey(seed, "init", 0, 0)), ledger)
        table = phi_table(pm.K, draws)
        ledger.basis_evals += (pm.K + 1) * n_samples
        column = table.mean(axis=1)
        var = table.var(axis=1) / n_samples
        values = np.tile(column[:, None], (1, n_nodes))
        variances = np.tile(var[:, None], (1, n_nodes))
    return GammaTable(values, table_grid, 0, variances)


def _check_table_stability(values):
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if not np.isfinite(peak) or peak > PHI_UNIFORM_BOUND + GAMMA_INSTABILITY_TOL:
        raise SimulationError(
            f"gamma estimate {peak} exceeds the basis bound {PHI_UNIFORM_BOUND} "
            f"by more than {GAMMA_INSTABILITY_TOL}: unstable Picard iteration"
        )


def _gamma_estimate(gamma_prev, alloc, pm, seed, picard_step, table_grid,
                    payoff=None, payoff_grid=None, threads=1, ledger=None):
    """One multilevel estimate over levels 0..alloc.max_level; returns the
    next table, optional payoff estimate and the per-level stats."""
    if ledger is None:
        ledger = CostLedger()
    levels = range(alloc.max_level + 1)

    def _run(level):
        lev_ledger = CostLedger()
        stats = simulate_level_pair(
            pm, gamma_prev, level, alloc.samples[level], seed, picard_step,
            eval_grid=table_grid, payoff=payoff, payoff_grid=payoff_grid,
            ledger=lev_ledger,
        )
        return stats, lev_ledger

    results = parallel_map(_run, levels, threads)
    values = np.zeros((pm.K + 1, table_grid.num_steps + 1))
    variances = np.zeros_like(values)
    pay_values = pay_variances = None
    if payoff is not None:
        n_pay = (payoff_grid or table_grid).num_steps + 1
        pay_values = np.zeros(n_pay)
        pay_variances = np.zeros(n_pay)
    for stats, lev_ledger in results:
        ledger.merge(lev_ledger)
        n = stats.n_samples
        mean = stats.phi_sum / n
        values += mean
        variances += (stats.phi_sumsq / n - mean ** 2) / n
        if payoff is not None:
            pmean = stats.pay_sum / n
            pay_values += pmean
            pay_variances += (stats.pay_sumsq / n - pmean ** 2) / n
    _check_table_stability(values)
    table = GammaTable(values, table_grid, picard_step, variances)
    return table, pay_values, pay_variances, [r[0] for r in results]


def mlmc_gamma_estimate(gamma_prev, alloc, pm, seed, table_grid=None,
                        picard_step=1, threads=1, ledger=None):
    """Next Picard table from a full multilevel pass conditioned on
    ``gamma_prev``."""
    if table_grid is None:
        table_grid = gamma_prev.grid
    table, _, _, _ = _gamma_estimate(
        gamma_prev, alloc, pm, seed, picard_step, table_grid,
        threads=threads, ledger=ledger,
    )
    return table


@dataclass
class PicardResult:
    tables: List[GammaTable]        # D^0 .. D^M
    final_values: np.ndarray        # payoff estimates on the final grid
    final_variances: np.ndarray
    final_grid: TimeGrid
    value: float                    # M_T(P)
    ledger: CostLedger
    step_ledgers: List[CostLedger]  # per Picard step (index 0 = initial table)


def picard_run(pm, alloc, seed, payoff=None, picard0=None, table_level=None,
               final_level=None, threads=1):
    """Iterative MLMC with M Picard steps (the full fixed-point loop).

    Step 0 freezes the initial law into D^0; steps 1..M-1 re-estimate the
    table conditioned on the previous one; step M runs the same coupled
    simulation once more, evaluating the payoff P on the final grid (with
    interpolation at off-grid nodes) alongside the step-M table.  Returns
    all tables, the final payoff vector and M_T(P).
    """
    if payoff is None:
        payoff = lambda x: x
    M = alloc.picard_steps
    if table_level is None:
        table_level = alloc.max_level
    if final_level is None:
        final_level = alloc.max_level
    table_grid = TimeGrid.dyadic(pm.horizon, table_level)
    final_grid = TimeGrid.dyadic(pm.horizon, final_level)

    ledger = CostLedger()
    step_ledgers = []

    lg = CostLedger()
    table = initial_gamma_table(pm, table_grid, seed, alloc.samples[0],
                                law=picard0, ledger=lg)
    step_ledgers.append(lg)
    ledger.merge(lg)
    tables = [table]

    for m in range(1, M):
        lg = CostLedger()
        table, _, _, _ = _gamma_estimate(
            tables[-1], alloc, pm, seed, m, table_grid, threads=threads, ledger=lg,
        )
        step_ledgers.append(lg)
        ledger.merge(lg)
        tables.append(table)

    lg = CostLedger()
    table, pay_values, pay_variances, _ = _gamma_estimate(
        tables[-1], alloc, pm, seed, M, table_grid,
        payoff=payoff, payoff_grid=final_grid, threads=threads, ledger=lg,
    )
    step_ledgers.append(lg)
    ledger.merge(lg)
    tables.append(table)

    return PicardResult(
        tables=tables,
        final_values=pay_values,
        final_variances=pay_variances,
        final_grid=final_grid,
        value=float(pay_values[-1]),
        ledger=ledger,
        step_ledgers=step_ledgers,
    )


@dataclass(frozen=True)
class PilotStats:
    """Pilot estimates feeding the sample allocation."""

    level_variances: tuple          # V_ell of the coupled differences
    gamma_rate: Optional[float] = None
    gamma_fit_r2: Optional[float] = None


def pilot_level_variances(pm, max_level, seed, n_pilot=1000, picard0=None,
                          payoff=None, table_level=None, ledger=None, threads=1):
    """Variances of the coupled level differences for the step-1 SDE.

    Simulates ``n_pilot`` pairs per level conditioned on the frozen
    initial table and takes, per level, the worst terminal-time
    per-particle variance over the basis orders and the payoff (the
    quantity-of-interest statistic of the standard allocation rule).
    """
    if payoff is None:
        payoff = lambda x: x
    if ledger is None:
        ledger = CostLedger()
    if table_level is None:
        table_level = max_level
    table_grid = TimeGrid.dyadic(pm.horizon, table_level)
    d0 = initial_gamma_table(pm, table_grid, seed, n_pilot, law=picard0, ledger=ledger)

    def _run(level):
        lg = CostLedger()
        stats = simulate_level_pair(
            pm, d0, level, n_pilot, seed, -1,
            eval_grid=table_grid, payoff=payoff, payoff_grid=table_grid,
            ledger=lg,
        )
        return stats, lg

    variances = []
    for stats, lg in parallel_map(_run, range(max_level + 1), threads):
        ledger.merge(lg)
        n = stats.n_samples
        v_phi = np.max(stats.phi_sumsq[:, -1] / n - (stats.phi_sum[:, -1] / n) ** 2)
        v_pay = stats.pay_sumsq[-1] / n - (stats.pay_sum[-1] / n) ** 2
        variances.append(float(max(v_phi, v_pay, 0.0)))
    return PilotStats(tuple(variances))


def structural_parameters(epsilon, horizon=1.0, truncation_rate=1.0,
                          c_m=1.0, c_h=1.0):
    """Truncation order, Picard count and finest level for accuracy eps:
    K = ceil(log(1/eps)/rate), M = ceil(c_m log(1/eps)), h_L <= eps/c_h."""
    if epsilon >= math.exp(-1.0):
        raise ValueError(f"epsilon must be < 1/e, got {epsilon}")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    log_inv = math.log(1.0 / epsilon)
    K = max(1, math.ceil(log_inv / truncation_rate))
    M = max(2, math.ceil(c_m * log_inv))
    L = max(2, math.ceil(math.log2(horizon * c_h / epsilon)))
    return K, M, L


def allocate_levels(epsilon, pilot, horizon=1.0, picard_steps=None,
                    truncation_rate=None, c_m=1.0, c_h=1.0, min_samples=2):
    """Parameters for a target RMS accuracy ``epsilon`` (< 1/e).

    K = ceil(log(1/eps) / rate) with the rate taken from the pilot's
    fitted gamma decay when that fit is trustworthy (R^2 >= 0.5), else 1;
    M = ceil(c_m log(1/eps)); L makes h_L <= eps / c_h; the per-level
    samples follow the standard variance-weighted rule
    N_ell = ceil(2 eps^-2 sqrt(V_ell h_ell) sum_l sqrt(V_l / h_l)).
    Pilot variances short of level L are extrapolated at the strong rate
    V ~ h^2.
    """
    rate = truncation_rate
    if rate is None:
        rate = 1.0
        if pilot is not None and pilot.gamma_rate is not None and pilot.gamma_rate > 0.0:
            if pilot.gamma_fit_r2 is None or pilot.gamma_fit_r2 >= 0.5:
                rate = pilot.gamma_rate
    K, M, L = structural_parameters(epsilon, horizon, rate, c_m, c_h)
    if picard_steps is not None:
        M = picard_steps

    V = list(pilot.level_variances) if pilot is not None else [1.0]
    while len(V) < L + 1:
        V.append(V[-1] / 4.0)
    V = np.maximum(np.asarray(V[: L + 1], dtype=float), 1e-30)
    h = horizon * 2.0 ** -np.arange(L + 1)
    weight_sum = float(np.sum(np.sqrt(V / h)))
    n = np.ceil(2.0 * epsilon ** -2 * np.sqrt(V * h) * weight_sum)
    n = np.maximum(n, min_samples).astype(int)
    return LevelAllocation(L, tuple(int(v) for v in n), M, truncation_order=K)


@dataclass
class RateTable:
    """Per-level weak/strong decay of the coupled differences of phi_0."""

    picard_step: int
    levels: np.ndarray
    a: np.ndarray                  # |mean phi_0 difference| at t = T
    b: np.ndarray                  # mean squared phi_0 difference at t = T
    weak_slope: float              # alpha-hat: -slope of log2 a vs level
    strong_slope: float            # beta-hat: -slope of log2 b vs level
    weak_r2: float
    strong_r2: float


def rate_test(pm, n_samples, max_level, picard_steps, seed, picard0=None,
              table_level=None, threads=1, ledger=None):
    """Weak/strong convergence rates across levels for every Picard step.

    Runs the iterative procedure with ``n_samples`` pairs at every level,
    recording per level ell >= 1 the terminal statistics

        a_ell = |(1/N) sum_i (phi_0(Y_T^{i,ell}) - phi_0(Y_T^{i,ell-1}))|
        b_ell = (1/N) sum_i (phi_0(Y_T^{i,ell}) - phi_0(Y_T^{i,ell-1}))^2

    and the least-squares slopes of log2 a and log2 b against ell.
    """
    from .fitting import linear_fit

    if max_level < 3:
        raise ValueError("need at least levels 1..3 to fit rates")
    if ledger is None:
        ledger = CostLedger()
    alloc = LevelAllocation(max_level, (n_samples,) * (max_level + 1), picard_steps)
    if table_level is None:
        table_level = max_level
    table_grid = TimeGrid.dyadic(pm.horizon, table_level)

    table = initial_gamma_table(pm, table_grid, seed, n_samples, law=picard0,
                                ledger=ledger)
    out = []
    for m in range(1, picard_steps + 1):
        table, _, _, level_stats = _gamma_estimate(
            table, alloc, pm, seed, m, table_grid, threads=threads, ledger=ledger,
        )
        levels = np.arange(1, max_level + 1)
        a = np.array([abs(level_stats[l].phi_sum[0, -1]) / n_samples for l in levels])
        b = np.array([level_stats[l].phi_sumsq[0, -1] / n_samples for l in levels])
        fit_a = linear_fit(levels, np.log2(a))
        fit_b = linear_fit(levels, np.log2(b))
        out.append(RateTable(
            picard_step=m, levels=levels, a=a, b=b,
            weak_slope=-fit_a.slope, strong_slope=-fit_b.slope,
            weak_r2=fit_a.r_squared, strong_r2=fit_b.r_squared,
        ))
    return out


@dataclass
class ComplexityRow:
    method: str
    epsilon: float
    rng_draws: int
    drift_evals: int
    basis_evals: int
    mse_est: float
    mean_est: float


def _variance_pilot(sigma, x0, horizon, initial, seed):
    """Crude payoff variance of the model, for sizing single-level runs."""
    pm = gaussian_projected_model(8, sigma, x0, horizon, initial)
    res = simulate("ppm", pm, TimeGrid.dyadic(horizon, 6), 2000, seed,
                   record_gamma=False)
    return float(np.var(res.states))


def complexity_sweep(eps_list, seeds, methods=("chaos", "ppm", "mlmc"),
                     model_factory=None, pm_factory=None, sigma=0.1, x0=0.5,
                     horizon=1.0, initial=None, benchmark=BENCHMARK_VALUE,
                     threads=1, pilot_seed=90210):
    """Ledger cost and replicated-run MSE against the benchmark value,
    per method and accuracy target.

    Single-level methods use N = max(4 Var(P)/eps^2, 2/eps) particles and
    h <= eps; the truncation order is K(eps) = ceil(log(1/eps)); the
    multilevel method is allocated from a pilot at a fixed seed so the
    operation counts are identical across replicate seeds.
    """
    from .model import gaussian_kernel_model

    if initial is None:
        initial = InitialLaw("point", x0)
    var_p = _variance_pilot(sigma, x0, horizon, initial, pilot_seed)

    # One shared allocation pilot at the deepest level any eps needs;
    # calibration is a one-off overhead and stays out of the reported cost.
    pilot = None
    if "mlmc" in methods:
        deepest = max(2, math.ceil(math.log2(horizon / min(eps_list))))
        pilot_pm = gaussian_projected_model(
            max(1, math.ceil(math.log(1.0 / min(eps_list)))),
            sigma, x0, horizon, initial) if pm_factory is None \
            else pm_factory(max(1, math.ceil(math.log(1.0 / min(eps_list)))))
        pilot = pilot_level_variances(pilot_pm, deepest, pilot_seed)

    tasks = []
    for eps in eps_list:
        K = max(1, math.ceil(math.log(1.0 / eps)))
        n_single = max(math.ceil(4.0 * var_p / eps ** 2), math.ceil(2.0 / eps))
        grid = TimeGrid(horizon, math.ceil(horizon / eps))
        pm = gaussian_projected_model(K, sigma, x0, horizon, initial) \
            if pm_factory is None else pm_factory(K)
        model = gaussian_kernel_model(sigma, x0, horizon, initial) \
            if model_factory is None else model_factory()
        alloc = allocate_levels(eps, pilot, horizon=horizon) if pilot else None
        for method in methods:
            for seed in seeds:
                tasks.append((method, eps, seed, pm, model, grid, n_single, alloc))

    def _run(task):
        method, eps, seed, pm, model, grid, n_single, alloc = task
        if method == "chaos":
            res = simulate("chaos", model, grid, n_single, seed, record_gamma=False)
            return float(np.mean(res.states)), res.ledger
        if method == "ppm":
            res = simulate("ppm", pm, grid, n_single, seed, record_gamma=False)
            return float(np.mean(res.states)), res.ledger
        if method == "mlmc":
            res = picard_run(pm, alloc, seed)
            return res.value, res.ledger
        raise ValueError(f"unknown method {method!r}")

    results = parallel_map(_run, tasks, threads)

    rows = []
    for eps in eps_list:
        for method in methods:
            idx = [i for i, t in enumerate(tasks) if t[0] == method and t[1] == eps]
            ests = np.array([results[i][0] for i in idx])
            ledger = CostLedger().merge(results[idx[0]][1])
            rows.append(ComplexityRow(
                method=method,
                epsilon=eps,
                rng_draws=ledger.rng_draws,
                drift_evals=ledger.drift_evals,
                basis_evals=ledger.basis_evals,
                mse_est=float(np.mean((ests - benchmark) ** 2)),
                mean_est=float(np.mean(ests)),
            ))
    return rows
