"""Particle-system time steppers for mean-field SDEs.

Two Euler engines over the same time grids:

* ``chaos_step`` — the interacting system: each particle's drift/diffusion
  averages the kernel over all N particles, O(N^2) kernel evaluations per
  step.
* ``ppm_step`` — the projected system: the measure dependence is replaced
  by the K+1 empirical coefficients gamma_k = mean phi_k(states), O(KN)
  work per step.

Both use the pre-step states for every empirical mean (synchronous
update) and draw increments from keyed streams, so runs with the same
seed are coupled: chaos and the projected runs at every truncation order
consume identical Wiener increments.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .basis import PHI_UNIFORM_BOUND, phi_table
from .cost import CostLedger
from .rng import NormalStream, StreamKey

__all__ = [
    "GammaSnapshot",
    "ParticleEnsemble",
    "SimResult",
    "SimulationError",
    "StrongErrorResult",
    "TimeGrid",
    "chaos_step",
    "ppm_step",
    "simulate",
    "strong_error",
]

GAMMA_BOUND_TOL = 1e-6


class SimulationError(RuntimeError):
    """Numerical failure during a simulation (non-finite states, unstable
    coefficient estimates)."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with num_steps steps.

    Dyadic grids (``level`` set) have step T * 2^-level; then
    step * num_steps == T exactly in floating point.
    """

    horizon: float
    num_steps: int
    level: Optional[int] = None

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        if self.level is not None and self.num_steps != 2 ** self.level:
            raise ValueError("dyadic grid needs num_steps == 2**level")

    @classmethod
    def dyadic(cls, horizon, level):
        if level < 0:
            raise ValueError(f"level must be >= 0, got {level}")
        return cls(horizon, 2 ** level, level)

    @classmethod
    def from_step(cls, horizon, step):
        n = round(horizon / step)
        if n < 1 or abs(n * step - horizon) > 1e-12 * horizon:
            raise ValueError(f"step {step} does not divide horizon {horizon}")
        lvl = round(math.log2(n))
        return cls(horizon, n, lvl if 2 ** lvl == n else None)

    @property
    def step(self):
        return self.horizon / self.num_steps

    @property
    def times(self):
        return np.linspace(0.0, self.horizon, self.num_steps + 1)


@dataclass(frozen=True)
class ParticleEnsemble:
    """N particle states at one node of a time grid."""

    states: np.ndarray
    time_index: int
    grid: TimeGrid
    stream_key: Optional[StreamKey] = None

    @property
    def n_particles(self):
        return self.states.size


@dataclass(frozen=True)
class GammaSnapshot:
    """Empirical basis coefficients gamma_k = mean phi_k(states) at one node."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if not np.all(np.isfinite(vals)):
            raise SimulationError("non-finite empirical basis coefficients")
        peak = float(np.max(np.abs(vals)))
        if peak > PHI_UNIFORM_BOUND + GAMMA_BOUND_TOL:
            raise SimulationError(
                f"empirical coefficient {peak} exceeds the basis bound "
                f"{PHI_UNIFORM_BOUND}"
            )


def _check_finite(states, step_index):
    bad = ~np.isfinite(states)
    if bad.any():
        i = int(np.argmax(bad))
        raise SimulationError(
            f"non-finite state for particle {i} after step {step_index}"
        )


def chaos_step(ens, model, dW, ledger=None, block=4096):
    """One Euler step of the interacting particle system.

    Drift and diffusion for particle i are kernel means over all pre-step
    states; costs N^2 drift-kernel evaluations.  dW must hold N increments
    of variance h.
    """
    x = ens.states
    n = x.size
    if np.shape(dW) != (n,):
        raise ValueError(f"dW must have shape ({n},)")
    if ledger is None:
        ledger = CostLedger()
    h = ens.grid.step

    drift = np.empty(n)
    for start in range(0, n, block):
        xb = x[start:start + block]
        drift[start:start + block] = model.drift_kernel(xb[:, None], x[None, :]).mean(axis=1)
    ledger.drift_evals += n * n

    if model.constant_diffusion is not None:
        diff_term = model.constant_diffusion * dW
    else:
        diff = np.empty(n)
        for start in range(0, n, block):
            xb = x[start:start + block]
            diff[start:start + block] = model.diffusion_kernel(xb[:, None], x[None, :]).mean(axis=1)
        diff_term = diff * dW

    new = x + drift * h + diff_term
    _check_finite(new, ens.time_index)
    return replace(ens, states=new, time_index=ens.time_index + 1)


def ppm_step(ens, pm, dW, ledger=None):
    """One Euler step of the projected particle system.

    Computes gamma_k from the pre-step states, then moves every particle
    with drift sum_k alpha_k(x) gamma_k; costs (K+1)*N drift-coefficient
    evaluations plus (K+1)*N basis evaluations.
    """
    x = ens.states
    n = x.size
    if np.shape(dW) != (n,):
        raise ValueError(f"dW must have shape ({n},)")
    if ledger is None:
        ledger = CostLedger()
    h = ens.grid.step

    gamma = phi_table(pm.K, x).mean(axis=1)
    ledger.basis_evals += (pm.K + 1) * n
    snap = GammaSnapshot(gamma)

    drift = pm.drift(x, gamma)
    ledger.drift_evals += (pm.K + 1) * n
    diff = pm.diffusion(x, gamma)

    new = x + drift * h + diff * dW
    _check_finite(new, ens.time_index)
    return replace(ens, states=new, time_index=ens.time_index + 1), snap


@dataclass
class SimResult:
    states: np.ndarray            # terminal particle states
    gamma: Optional[np.ndarray]   # (K+1, num_steps+1) coefficients per node
    grid: TimeGrid
    ledger: CostLedger
    seconds: float
    node_means: Optional[np.ndarray] = None   # ensemble mean per grid node
    node_sds: Optional[np.ndarray] = None


def simulate(engine, model, grid, n_particles, seed, gamma_order=None,
             record_gamma=True, ledger=None):
    """Full trajectory simulation on ``grid``; deterministic in (args, seed).

    engine: "chaos" (expects a KernelModel) or "ppm" (a ProjectedModel).
    For ppm the per-node coefficients are the gamma_k the stepper itself
    uses; for chaos they are computed post hoc from the states up to order
    ``gamma_order`` (required when record_gamma).
    """
    if engine not in ("chaos", "ppm"):
        raise ValueError(f"unknown engine {engine!r}")
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if ledger is None:
        ledger = CostLedger()
    if engine == "ppm":
        gamma_order = model.K
    elif record_gamma and gamma_order is None:
        raise ValueError("chaos simulation needs gamma_order to record coefficients")

    t_start = time.perf_counter()
    key_init = StreamKey(seed, "init")
    key_inc = StreamKey(seed, "increment")
    states = model.initial.sample(n_particles, NormalStream(key_init), ledger)
    ens = ParticleEnsemble(states, 0, grid, key_inc)
    inc = NormalStream(key_inc)
    sqrt_h = math.sqrt(grid.step)

    gamma = None
    if record_gamma:
        gamma = np.empty((gamma_order + 1, grid.num_steps + 1))
    node_means = np.empty(grid.num_steps + 1)
    node_sds = np.empty(grid.num_steps + 1)
    node_means[0] = ens.states.mean()
    node_sds[0] = ens.states.std()

    def _post_hoc(node):
        table = phi_table(gamma_order, ens.states)
        ledger.basis_evals += (gamma_order + 1) * n_particles
        gamma[:, node] = table.mean(axis=1)

    if engine == "chaos" and record_gamma:
        _post_hoc(0)
    for s in range(grid.num_steps):
        dW = inc.normals(n_particles) * sqrt_h
        ledger.rng_draws += n_particles
        if engine == "chaos":
            ens = chaos_step(ens, model, dW, ledger)
            if record_gamma:
                _post_hoc(s + 1)
        else:
            ens, snap = ppm_step(ens, model, dW, ledger)
            if record_gamma:
                gamma[:, s] = snap.values
        node_means[s + 1] = ens.states.mean()
        node_sds[s + 1] = ens.states.std()
    if engine == "ppm" and record_gamma:
        _post_hoc(grid.num_steps)

    return SimResult(ens.states, gamma, grid, ledger, time.perf_counter() - t_start,
                     node_means, node_sds)


@dataclass(frozen=True)
class StrongErrorResult:
    K: int
    error: float            # sqrt(mean (X_ppm - X_chaos)^2) at t = T
    time_gain: float        # chaos seconds - ppm seconds
    cost_gain: int          # chaos ledger total - ppm ledger total
    chaos_cost: int
    ppm_cost: int


def strong_error(n_particles, K, model, pm, grid, seed, chaos_result=None):
    """Coupled strong error between the interacting and projected systems.

    Both runs consume identical Wiener increments (same seed and stream
    keys), so the difference isolates the projection error.  Pass a cached
    ``chaos_result`` to amortize the O(N^2) run over a sweep in K.
    """
    if pm.K != K:
        raise ValueError(f"projected model order {pm.K} != K = {K}")
    if chaos_result is None:
        chaos_result = simulate("chaos", model, grid, n_particles, seed,
                                record_gamma=False)
    ppm_result = simulate("ppm", pm, grid, n_particles, seed, record_gamma=False)
    err = float(np.sqrt(np.mean((ppm_result.states - chaos_result.states) ** 2)))
    return StrongErrorResult(
        K=K,
        error=err,
        time_gain=chaos_result.seconds - ppm_result.seconds,
        cost_gain=chaos_result.ledger.total - ppm_result.ledger.total,
        chaos_cost=chaos_result.ledger.total,
        ppm_cost=ppm_result.ledger.total,
    )
