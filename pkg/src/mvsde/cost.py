"""Platform-independent cost accounting for the complexity experiments.

The cost of a run is measured in operation counts, not wall time: random
number generations and drift-coefficient evaluations (the measure used by
the cost-vs-accuracy comparisons), plus basis-function evaluations kept as
a separate counter.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["CostLedger"]


@dataclass
class CostLedger:
    rng_draws: int = 0
    drift_evals: int = 0
    basis_evals: int = 0

    def merge(self, other):
        self.rng_draws += other.rng_draws
        self.drift_evals += other.drift_evals
        self.basis_evals += other.basis_evals
        return self

    @property
    def total(self):
        """The headline cost measure: random draws + drift evaluations."""
        return self.rng_draws + self.drift_evals
