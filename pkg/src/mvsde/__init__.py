"""Mean-field (McKean-Vlasov) SDE simulation via Hermite-function
projections: interacting particles, the projected particle method, and
iterative multilevel Monte Carlo with Picard iteration, plus
orthogonal-series density estimation."""

from .basis import (
    PHI_UNIFORM_BOUND,
    HermiteBasis,
    QuadratureRule,
    gauss_hermite,
    hermite_normalized,
    phi,
    phi_bounds,
    phi_table,
)
from .cost import CostLedger
from .density import (
    DensityEstimate,
    density_epsilon,
    grid_l2_distance,
    nonneg_fix,
    parseval_mse,
    reconstruct,
)
from .fitting import linear_fit
from .mlmc import (
    BENCHMARK_VALUE,
    GammaTable,
    LevelAllocation,
    PicardResult,
    PilotStats,
    allocate_levels,
    complexity_sweep,
    initial_gamma_table,
    interpolate_gamma,
    mlmc_gamma_estimate,
    picard_run,
    pilot_level_variances,
    rate_test,
    simulate_level_pair,
    structural_parameters,
)
from .model import (
    InitialLaw,
    KernelModel,
    ProjectedModel,
    assumption_diagnostics,
    gaussian_alpha_closed_form,
    gaussian_kernel_model,
    gaussian_projected_model,
    project_kernel,
)
from .particle import (
    GammaSnapshot,
    ParticleEnsemble,
    SimulationError,
    TimeGrid,
    chaos_step,
    ppm_step,
    simulate,
    strong_error,
)
from .rng import NormalStream, StreamKey, coarsen, normal_increments

__version__ = "0.1.0"
