"""Problem data for the weighted one-dimensional functional on ``[0, T]``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from chexpand.errors import ConfigurationError
from chexpand.potential import DoubleWell

# grid nodes per unit of eps; h <= eps / CELLS_PER_EPS
CELLS_PER_EPS = 32


@dataclass(frozen=True)
class Weight:
    """Positive C1 weight ``omega`` on ``[0, length]``.

    Build with :meth:`affine`, :meth:`polynomial` or directly from two
    callables.  Extremes are sampled on a dense grid (exact for the affine
    and monotone cases since the endpoints are included).
    """

    length: float
    value_fn: Callable
    derivative_fn: Callable
    omega0: float = field(init=False)
    omega1: float = field(init=False)
    label: str = "custom"

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("weight length must be positive")
        t = np.linspace(0.0, self.length, 4097)
        vals = np.asarray(self.value_fn(t), float)
        if not np.all(np.isfinite(vals)) or np.min(vals) <= 0:
            raise ConfigurationError(
                f"weight must stay positive on [0, {self.length}]; min sampled value {np.min(vals):.3g}")
        object.__setattr__(self, "omega0", float(np.min(vals)))
        object.__setattr__(self, "omega1", float(np.max(vals)))

    @classmethod
    def affine(cls, length: float, slope: float, value0: float = 1.0) -> "Weight":
        return cls.polynomial(length, [value0, slope])

    @classmethod
    def constant(cls, length: float, value: float = 1.0) -> "Weight":
        return cls.polynomial(length, [value])

    @classmethod
    def polynomial(cls, length: float, coeffs) -> "Weight":
        """``omega(t) = sum coeffs[k] * t**k``."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, float))
        dp = p.deriv()
        return cls(length, p, dp, label="poly:" + ",".join(f"{c:g}" for c in p.coef))

    def __call__(self, t):
        return np.asarray(self.value_fn(np.asarray(t, float)), float)

    def value(self, t):
        return self(t)

    def derivative(self, t):
        out = np.asarray(self.derivative_fn(np.asarray(t, float)), float)
        return np.broadcast_to(out, np.shape(t)).copy() if np.ndim(t) else float(out)

    @property
    def at0(self) -> float:
        return float(self(0.0))

    @property
    def slope0(self) -> float:
        return float(self.derivative(0.0))

    def remainder(self, t):
        """Taylor remainder ``omega(t) - omega(0) - omega'(0) t``."""
        t = np.asarray(t, float)
        return self(t) - self.at0 - self.slope0 * t

    @property
    def spread(self) -> float:
        return self.omega1 - self.omega0


def smallness_threshold(well: DoubleWell, alpha_minus: float) -> float:
    """Bound on ``omega1 - omega0`` under which constant b is the first-order minimizer."""
    return 0.05 * well.c_w / float(well.dist_to_b(alpha_minus))


@dataclass(frozen=True)
class BoundaryData1D:
    """Dirichlet values and the admissibility parameters of the 1-D problem."""

    alpha_eps: float
    beta_eps: float
    alpha_limit: float
    kappa0: float = -1.0
    alpha_minus: float = 0.1

    def __post_init__(self):
        if not self.kappa0 < 0:
            raise ConfigurationError("kappa0 must be negative")

    def check_range(self, well: DoubleWell):
        for name in ("alpha_eps", "beta_eps", "alpha_limit"):
            v = getattr(self, name)
            if not well.a <= v <= well.b:
                raise ConfigurationError(f"{name}={v} outside [{well.a}, {well.b}]")
        if not well.a < self.alpha_minus < well.b:
            raise ConfigurationError("alpha_minus must lie strictly between the wells")

    def admissible_case(self, weight: Weight) -> int:
        """1 if ``alpha_eps >= alpha_minus``, 2 if ``omega'(0) >= -kappa0``, else 0."""
        if self.alpha_eps >= self.alpha_minus:
            return 1
        if weight.slope0 >= -self.kappa0:
            return 2
        return 0

    def check(self, well: DoubleWell, weight: Weight) -> int:
        self.check_range(well)
        case = self.admissible_case(weight)
        if case == 0:
            raise ConfigurationError(
                f"inadmissible data: alpha_eps={self.alpha_eps} < alpha_minus={self.alpha_minus} "
                f"and omega'(0)={weight.slope0} < -kappa0={-self.kappa0}")
        return case

    def small_weight_variation(self, well: DoubleWell, weight: Weight) -> bool:
        return weight.spread < smallness_threshold(well, self.alpha_minus)

    def with_eps_values(self, alpha_eps: float, beta_eps: float) -> "BoundaryData1D":
        return BoundaryData1D(alpha_eps, beta_eps, self.alpha_limit, self.kappa0, self.alpha_minus)


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[0, length]`` resolving the eps layer."""

    eps: float
    n_cells: int
    length: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigurationError("n_cells must be an integer >= 2")
        if self.h > self.eps / CELLS_PER_EPS * (1 + 1e-12):
            raise ConfigurationError(
                f"mesh size {self.h:.3g} exceeds eps/{CELLS_PER_EPS} = {self.eps / CELLS_PER_EPS:.3g}")

    @classmethod
    def for_eps(cls, eps: float, length: float, cells_per_eps: int = CELLS_PER_EPS) -> "Grid":
        if cells_per_eps < CELLS_PER_EPS:
            raise ConfigurationError(f"cells_per_eps must be at least {CELLS_PER_EPS}")
        return cls(eps, int(math.ceil(cells_per_eps * length / eps - 1e-9)), length)

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_cells + 1)

    def refined(self) -> "Grid":
        return Grid(self.eps, 2 * self.n_cells, self.length)
