"""Normalized Hermite polynomials, Hermite functions and Gauss-Hermite rules.

Conventions used throughout the package:

* ``Hbar_n`` is the Hermite polynomial orthonormal with respect to the
  weight ``exp(-x^2)``, i.e. ``integral Hbar_j Hbar_l exp(-x^2) dx = delta_jl``.
  It equals ``c_n H_n`` with the physicists' polynomial ``H_n`` and
  ``c_n = (2^n n! sqrt(pi))^(-1/2)``.
* The Hermite functions ``phi_k(x) = Hbar_k(x) exp(-x^2/2)`` form an
  orthonormal basis of plain (unweighted) L2(R).  All series expansions in
  this package are written against ``phi_k``.

Evaluation uses the normalized three-term recurrence

    Hbar_{n+1}(x) = x sqrt(2/(n+1)) Hbar_n(x) - sqrt(n/(n+1)) Hbar_{n-1}(x)

which avoids the overflow of ``2^n n!`` that the Rodrigues form hits
around n = 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "PHI_UNIFORM_BOUND",
    "HermiteBasis",
    "QuadratureRule",
    "gauss_hermite",
    "hermite_normalized",
    "hermite_normalized_table",
    "phi",
    "phi_bounds",
    "phi_table",
]

# Uniform bound on |phi_k| for every k (Cramer's inequality gives
# pi^(-1/4) <= ... <= 1.086435; the constant is used as a runtime sanity
# bound on empirical basis means).
PHI_UNIFORM_BOUND = 1.086435

_H0 = math.pi ** -0.25  # Hbar_0 = pi^(-1/4)


def hermite_normalized_table(n_max, x):
    """Evaluate Hbar_0 .. Hbar_{n_max} at ``x``.

    Returns an array of shape ``(n_max + 1,) + shape(x)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _H0
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = x * math.sqrt(2.0 / (n + 1)) * out[n] \
            - math.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def hermite_normalized(n, x):
    """Normalized Hermite polynomial Hbar_n(x)."""
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    return hermite_normalized_table(n, x)[n]


def phi_table(k_max, x):
    """Evaluate the Hermite functions phi_0 .. phi_{k_max} at ``x``."""
    x = np.asarray(x, dtype=float)
    return hermite_normalized_table(k_max, x) * np.exp(-0.5 * x * x)


def phi(k, x):
    """Hermite function phi_k(x) = Hbar_k(x) exp(-x^2/2)."""
    if k < 0:
        raise ValueError(f"order must be non-negative, got {k}")
    return phi_table(k, x)[k]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes/weights for ``integral f(x) exp(-x^2) dx``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(weights <= 0.0):
            raise ValueError("Gauss-Hermite weights must be positive")
        if not np.allclose(nodes, -nodes[::-1], atol=1e-13):
            raise ValueError("Gauss-Hermite nodes must be symmetric about 0")
        total = weights.sum()
        if abs(total - math.sqrt(math.pi)) > 1e-12 * math.sqrt(math.pi):
            raise ValueError(
                f"weights sum to {total!r}, expected sqrt(pi) within 1e-12"
            )

    @cached_property
    def scaled_weights(self):
        """Weights w_q * exp(x_q^2), for integrands given without the weight."""
        return np.exp(np.log(self.weights) + self.nodes ** 2)

    def __len__(self):
        return self.nodes.size


def gauss_hermite(order):
    """Gauss-Hermite rule with ``order`` nodes (weight exp(-x^2)).

    Nodes come from the symmetric-tridiagonal Jacobi matrix (Golub-Welsch)
    and are polished by Newton iteration on Hbar_order; weights use
    w_q = 1 / (order * Hbar_{order-1}(x_q)^2).  Exact for polynomials of
    degree <= 2*order - 1.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if order == 1:
        return QuadratureRule(np.zeros(1), np.array([math.sqrt(math.pi)]))

    off = np.sqrt(np.arange(1, order) / 2.0)
    nodes = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)

    # Newton polish: x <- x - Hbar_n(x) / Hbar_n'(x), Hbar_n' = sqrt(2n) Hbar_{n-1}
    converged = False
    for _ in range(50):
        table = hermite_normalized_table(order, nodes)
        step = table[order] / (math.sqrt(2.0 * order) * table[order - 1])
        nodes = nodes - step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, np.max(np.abs(nodes))):
            converged = True
            break
    if not converged:
        raise RuntimeError(f"Newton polish for {order}-point Gauss-Hermite did not converge")

    nodes = 0.5 * (nodes - nodes[::-1])  # enforce exact symmetry
    nodes.sort()
    weights = 1.0 / (order * hermite_normalized(order - 1, nodes) ** 2)
    return QuadratureRule(nodes, weights)


@dataclass(frozen=True)
class HermiteBasis:
    """Hermite-function basis of maximal order K with its quadrature rule.

    ``quadrature_order`` defaults to ``2 * max_order + 2`` so that products
    Hbar_j * Hbar_l with j, l <= K are integrated exactly against exp(-x^2).
    """

    max_order: int
    quadrature_order: int = 0

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError(f"max_order must be >= 0, got {self.max_order}")
        if self.quadrature_order == 0:
            object.__setattr__(self, "quadrature_order", 2 * self.max_order + 2)
        if self.quadrature_order < 2 * self.max_order + 2:
            raise ValueError(
                f"quadrature_order {self.quadrature_order} < 2*max_order + 2 "
                f"= {2 * self.max_order + 2}: products of basis polynomials "
                "would not be integrated exactly"
            )

    @cached_property
    def rule(self):
        return gauss_hermite(self.quadrature_order)

    def hermite(self, x):
        """Table of Hbar_0 .. Hbar_K at x, shape (K+1,) + shape(x)."""
        return hermite_normalized_table(self.max_order, x)

    def phi(self, x):
        """Table of phi_0 .. phi_K at x, shape (K+1,) + shape(x)."""
        return phi_table(self.max_order, x)


def phi_bounds(k_max, grid=None):
    """Sup-norm and Lipschitz estimates for phi_0 .. phi_{k_max}.

    A diagnostic for the bounded/Lipschitz basis assumption: returns a list
    of ``(D_k, L_k)`` with ``D_k = max |phi_k|`` and ``L_k = max |phi_k'|``
    estimated on ``grid`` (default: 4001 uniform points on [-10, 10]).
    The derivative uses the identity
    phi_k' = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}.
    """
    if grid is None:
        grid = np.linspace(-10.0, 10.0, 4001)
    grid = np.asarray(grid, dtype=float)
    table = phi_table(k_max + 1, grid)
    out = []
    for k in range(k_max + 1):
        d_k = float(np.max(np.abs(table[k])))
        lower = math.sqrt(k / 2.0) * table[k - 1] if k >= 1 else 0.0
        deriv = lower - math.sqrt((k + 1) / 2.0) * table[k + 1]
        out.append((d_k, float(np.max(np.abs(deriv)))))
    return out
