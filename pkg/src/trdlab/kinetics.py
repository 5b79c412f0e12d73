"""Rate laws, the Lipschitz regularization, and scalar entropy kernels.

All evaluators accept either a single state vector of shape (m,) or a
batch of cell states of shape (m, ...); the species axis is always the
first one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TriangularSystem

__all__ = [
    "RegularizedRates",
    "phi_n",
    "raw_rate",
    "entropy_kernel",
    "log_inequality_slack",
]


def _reactant_product(system: TriangularSystem, state: np.ndarray) -> np.ndarray:
    """prod_{j<m} a_j^{alpha_j} with the 0^0 = 1 convention (spectator
    species with alpha_j = 0 contribute a unit factor)."""
    a = np.asarray(state, dtype=float)
    alpha = system.reactant_alpha
    shape = (system.m - 1,) + (1,) * (a.ndim - 1)
    return np.prod(np.power(a[: system.m - 1], alpha.reshape(shape)), axis=0)


def phi_n(system: TriangularSystem, n: float, state: np.ndarray) -> np.ndarray | float:
    """phi^n = 1 + (1/n) (sum_i a_i)^{Q+2}; identically 1 for n = +inf."""
    a = np.asarray(state, dtype=float)
    if math.isinf(n):
        return np.ones(a.shape[1:]) if a.ndim > 1 else 1.0
    if n <= 0:
        raise ValueError("regularization index n must be positive")
    total = a.sum(axis=0)
    val = 1.0 + total ** (system.Q + 2.0) / n
    return val


def raw_rate(system: TriangularSystem, state: np.ndarray) -> np.ndarray:
    """f_i = a_m - prod_{j<m} a_j^{alpha_j} for i < m, f_m = -f_1."""
    a = np.asarray(state, dtype=float)
    prod = _reactant_product(system, a)
    f1 = a[-1] - prod
    out = np.broadcast_to(f1, (system.m,) + np.shape(f1)).copy()
    out[-1] = -f1
    return out


@dataclass(frozen=True)
class RegularizedRates:
    """Rates of the approximate system: raw rates divided by phi^n."""

    system: TriangularSystem
    n: float  # positive real; +inf selects the limit system phi == 1

    def __post_init__(self):
        if not (self.n > 0):
            raise ValueError("n must be positive (or +inf)")

    def phi(self, state) -> np.ndarray | float:
        return phi_n(self.system, self.n, state)

    def g(self, state) -> np.ndarray | float:
        """Scalar regularized production g^n = (a_m - prod a_j^alpha_j)/phi^n."""
        a = np.asarray(state, dtype=float)
        return (a[-1] - _reactant_product(self.system, a)) / self.phi(a)

    def rate(self, state) -> np.ndarray:
        return raw_rate(self.system, state) / self.phi(state)

    def reactant_product(self, state) -> np.ndarray | float:
        return _reactant_product(self.system, state)


def entropy_kernel(a) -> np.ndarray | float:
    """a (ln a - 1) + 1 with 0 ln 0 = 0 (value 1 at a = 0); nonnegative,
    vanishing only at a = 1."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(a > 0.0, a * (np.log(np.where(a > 0.0, a, 1.0)) - 1.0) + 1.0, 1.0)
    if val.ndim == 0:
        return float(val)
    return val


def log_inequality_slack(x: float, y: float, kappa: float) -> float:
    """Slack of x <= kappa*y + (1/ln kappa)(y - x) ln(y/x); nonnegative
    for all x, y > 0 and kappa > 1."""
    if x <= 0 or y <= 0:
        raise ValueError("x and y must be positive")
    if kappa <= 1:
        raise ValueError("kappa must exceed 1")
    return kappa * y + (y - x) * math.log(y / x) / math.log(kappa) - x
