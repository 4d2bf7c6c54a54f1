"""Explicit recovery sequence and its energy decomposition.

The profile follows ``z_{alpha_eps}(t/eps)`` out of the left boundary, sits at
b in the middle and enters the right boundary along ``z_{beta_eps}((T-t)/eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from chexpand.errors import ConfigurationError
from chexpand.potential import DoubleWell
from chexpand.profile import TransitionProfile, build_profile
from chexpand.quadrature import composite_gl
from chexpand.setup1d import BoundaryData1D, Grid, Weight


@lru_cache(maxsize=256)
def cached_profile(well: DoubleWell, alpha: float) -> TransitionProfile:
    return build_profile(well, alpha)


@dataclass(frozen=True)
class RecoveryProfile:
    eps: float
    t_eps: float
    s_eps_right: float
    grid: Grid
    v: np.ndarray
    left: TransitionProfile
    right: TransitionProfile


def _three_piece(left, right, eps, length, t):
    v = np.full(t.shape, left.well.b)
    # the two pieces never overlap because t_eps + s_right < length
    v = np.where(t <= eps * left.hitting_time, left.z(t / eps), v)
    v = np.where(length - t <= eps * right.hitting_time, right.z((length - t) / eps), v)
    return v


def build_recovery(well: DoubleWell, data: BoundaryData1D, grid: Grid,
                   eps: float | None = None) -> RecoveryProfile:
    eps = grid.eps if eps is None else eps
    left = cached_profile(well, float(data.alpha_eps))
    right = cached_profile(well, float(data.beta_eps))
    t_eps, s_right = eps * left.hitting_time, eps * right.hitting_time
    if not t_eps + s_right < grid.length:
        raise ConfigurationError(
            f"eps too large: t_eps + s_eps_right = {t_eps + s_right:.4g} "
            f"is not below T = {grid.length:.4g}")
    v = _three_piece(left, right, eps, grid.length, grid.nodes)
    return RecoveryProfile(eps, t_eps, s_right, grid, v, left, right)


def squeezed_guess(well: DoubleWell, data: BoundaryData1D, grid: Grid) -> np.ndarray:
    """Recovery-shaped guess compressed to fit when eps is too large for the real one."""
    left = cached_profile(well, float(data.alpha_eps))
    right = cached_profile(well, float(data.beta_eps))
    span = left.hitting_time + right.hitting_time
    eps_fit = 0.9 * grid.length / span if span > 0 else grid.eps
    return _three_piece(left, right, min(grid.eps, eps_fit), grid.length, grid.nodes)


@dataclass(frozen=True)
class EnergyDecomposition:
    """Terms of the regrouped second-order energy on the discrete grid.

    ``a, b, c, d`` use the same quadrature as the discrete energy, so their
    sum reproduces it to round-off.  ``b_time`` and ``b_rescaled`` are the
    continuum values of the ``b`` term along two changes of variables.
    """

    eps: float
    a: float
    b: float
    c: float
    d: float
    b_time: float
    b_rescaled: float

    @property
    def total(self) -> float:
        return self.a + self.b + self.c + self.d


def _cell_densities(well, v, eps, h):
    # node potential and cell gradient parts of W/eps + eps v'^2
    return well.w(v) / eps, eps * (np.diff(v) / h) ** 2


def decompose_energy(recovery: RecoveryProfile, well: DoubleWell, weight: Weight,
                     eps: float, alpha_limit: float) -> EnergyDecomposition:
    grid, v = recovery.grid, recovery.v
    h, t = grid.h, grid.nodes
    tm = 0.5 * (t[1:] + t[:-1])
    pot, grad = _cell_densities(well, v, eps, h)
    c_node = np.full(t.shape, h)
    c_node[[0, -1]] = 0.5 * h
    split = grid.length - recovery.s_eps_right
    in_node = t <= split
    in_cell = tm <= split

    def part(fn_node, fn_cell, mask_node, mask_cell):
        return (np.sum((c_node * pot * fn_node)[mask_node])
                + np.sum((h * grad * fn_cell)[mask_cell]))

    w0, w1 = weight.at0, weight.slope0
    one_n, one_c = np.ones_like(t), np.ones_like(tm)
    dist = float(well.dist_to_b(alpha_limit))
    a_term = w0 / eps * (part(one_n, one_c, in_node, in_cell) - dist)
    b_term = w1 / eps * part(t, tm, in_node, in_cell)
    c_term = part(weight.remainder(t), weight.remainder(tm), in_node, in_cell) / eps
    d_term = part(weight(t), weight(tm), ~in_node, ~in_cell) / eps

    left = recovery.left
    b_time = b_rescaled = 0.0
    if left.hitting_time > 0 and w1 != 0.0:
        # 2 w'(0) int_0^{T_eps} W(z(t/eps)) t / eps^2 dt
        t_end = recovery.t_eps
        b_time = 2 * w1 * float(composite_gl(
            lambda tt: well.w(left.z(tt / eps)) * tt / eps ** 2, 0.0, t_end, 64))
        b_rescaled = 2 * w1 * float(composite_gl(
            lambda s: well.w(left.z(s)) * s, 0.0, left.hitting_time, 64))
    return EnergyDecomposition(eps, float(a_term), float(b_term), float(c_term),
                               float(d_term), b_time, b_rescaled)
