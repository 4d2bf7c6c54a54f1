"""Weighted 1-D functional: discrete energies, minimizer and diagnostics.

Discrete energy on a uniform grid (nodes ``t_i``, spacing ``h``)::

    E_h(v) = sum_i c_i h W(v_i) w(t_i) + eps^2 sum_i w(t_{i+1/2}) (v_{i+1} - v_i)^2 / h

with trapezoid factors ``c_i``.  Its gradient divided by ``2 h w(t_i)`` is
the centred-difference form of ``W'(v)/2 - eps^2 (w v')' / w``, which is the
residual reported as ``el_residual``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import LinAlgError, solveh_banded

from chexpand.errors import ConfigurationError, DiagnosticError, SolverError, UsageError
from chexpand.potential import DoubleWell
from chexpand.recovery import build_recovery, cached_profile, squeezed_guess
from chexpand.setup1d import BoundaryData1D, Grid, Weight, smallness_threshold

EL_TOL = 1e-9


@dataclass
class MinimizerResult:
    grid: Grid
    v: np.ndarray
    energy_g0: float
    energy_g2: float
    el_residual: float
    newton_iterations: int
    data: BoundaryData1D
    eps: float
    # offsets b - v at full precision next to b
    x: np.ndarray | None = None
    # fine-grid companion solve used for h-extrapolated values
    x_fine: np.ndarray | None = None
    energy_g0_raw: float = float("nan")
    energy_g2_raw: float = float("nan")
    delta_profile: np.ndarray | None = None
    theta_eps: float = float("nan")
    s_eps: float = float("nan")
    min_value: float = float("nan")
    sup_deriv_times_eps: float = float("nan")
    recovery_energy_g0: float = float("nan")
    warnings: list[str] = field(default_factory=list)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes


def _grid_of(weight: Weight, v: np.ndarray, grid: Grid | None) -> float:
    v = np.asarray(v)
    if v.ndim != 1 or v.size < 3:
        raise UsageError("v must be a 1-D nodal array with at least 3 entries")
    if grid is not None and v.size != grid.n_cells + 1:
        raise UsageError(f"v has {v.size} nodes, grid has {grid.n_cells + 1}")
    return weight.length / (v.size - 1)


def _weights_on(weight: Weight, n_nodes: int):
    t = np.linspace(0.0, weight.length, n_nodes)
    tm = 0.5 * (t[1:] + t[:-1])
    return t, weight(t), weight(tm)


def energy_g0(well: DoubleWell, weight: Weight, v, eps: float, grid: Grid | None = None) -> float:
    """``int (W(v) + eps^2 v'^2) w dt`` by trapezoid/midpoint rules."""
    v = np.asarray(v, float)
    h = _grid_of(weight, v, grid)
    _, w_node, w_mid = _weights_on(weight, v.size)
    return float(_energy(well, well.b - v, eps, h, w_node, w_mid))


def energy_g2(well: DoubleWell, weight: Weight, v, eps: float, alpha_limit: float,
              grid: Grid | None = None) -> float:
    """``G0 / eps^2 - w(0) d_W(b, alpha) / eps``."""
    g0 = energy_g0(well, weight, v, eps, grid)
    return g2_from_g0(well, weight, g0, eps, alpha_limit)


def g2_from_g0(well, weight, g0, eps, alpha_limit):
    return g0 / eps ** 2 - weight.at0 * float(well.dist_to_b(alpha_limit)) / eps


def el_residual(well: DoubleWell, weight: Weight, v, eps: float) -> np.ndarray:
    """Normalized discrete Euler-Lagrange residual at interior nodes."""
    return el_residual_offsets(well, weight, well.b - np.asarray(v, float), eps)


def el_residual_offsets(well: DoubleWell, weight: Weight, x, eps: float) -> np.ndarray:
    """Same residual with the field given as offsets ``x = b - v``."""
    x = np.asarray(x, float)
    h = weight.length / (x.size - 1)
    _, w_node, w_mid = _weights_on(weight, x.size)
    return _gradient(well, x, eps, h, w_node, w_mid) / (2 * h * w_node[1:-1])


# The solver works with offsets x = b - v so that values next to b keep
# full relative precision; with W' ~ dist**q a field stored as v would leave
# a residual floor of order W'(b - ulp).

def _energy(well, x, eps, h, w_node, w_mid):
    c = np.ones_like(x)
    c[[0, -1]] = 0.5
    pot = well.w_offsets(well.length - x, x)
    return h * np.sum(c * pot * w_node) + eps ** 2 * np.sum(w_mid * np.diff(x) ** 2) / h


def _gradient(well, x, eps, h, w_node, w_mid):
    """Gradient of the discrete energy with respect to v at interior nodes."""
    xi = x[1:-1]
    flux = w_mid * np.diff(x)
    return h * w_node[1:-1] * well.dw_offsets(well.length - xi, xi) + 2 * eps ** 2 / h * np.diff(flux)


class _WellCurvature:
    """Hessian surrogate for W'' that stays finite at the wells.

    For a node at distance d from a well, W'' is evaluated at
    ``max(d, d_expected)`` where ``d_expected`` is the distance at which
    ``|W'|`` would balance the current gradient entry.  As the gradient
    vanishes this reduces to the exact second derivative.
    """

    def __init__(self, well: DoubleWell):
        self.well = well
        L, d0 = well.length, 1e-6 * well.length
        self.k_a = abs(float(well.dw_offsets(d0, L - d0))) / d0 ** well.q
        self.k_b = abs(float(well.dw_offsets(L - d0, d0))) / d0 ** well.q

    def __call__(self, x, g_scaled):
        L, q = self.well.length, self.well.q
        xa = L - x
        near_b = x < xa
        d = np.where(near_b, x, xa)
        k = np.where(near_b, self.k_b, self.k_a)
        d_eff = np.maximum(d, (np.abs(g_scaled) / k) ** (1.0 / q))
        xb = np.where(near_b, d_eff, L - d_eff)
        return self.well.d2w_offsets(L - xb, xb)


def _newton(well, weight, x0, eps, h, w_node, w_mid, max_iter=200, tol=EL_TOL):
    """Projected damped Newton with a Levenberg shift on offsets ``x = b - v``.

    Returns ``(x, residual, iterations)``.
    """
    L = well.length
    curv = _WellCurvature(well)
    x = np.clip(np.asarray(x0, float).copy(), 0.0, L)
    norm = 2 * h * w_node[1:-1]
    off = -2 * eps ** 2 / h * w_mid[1:-1]
    e = _energy(well, x, eps, h, w_node, w_mid)
    g = _gradient(well, x, eps, h, w_node, w_mid)
    res = np.max(np.abs(g / norm))
    for it in range(1, max_iter + 1):
        if res <= tol:
            return x, res, it - 1
        diag = h * w_node[1:-1] * curv(x[1:-1], g / (h * w_node[1:-1])) \
            + 2 * eps ** 2 / h * (w_mid[:-1] + w_mid[1:])
        # nodes held at a bound by the gradient drop out of the Newton system
        xi = x[1:-1]
        active = ((xi <= 0.0) & (g < 0)) | ((xi >= L) & (g > 0))
        rhs = np.where(active, 0.0, g)
        diag = np.where(active, 1.0, diag)
        upper = off * ~(active[1:] | active[:-1])
        shift = 0.0
        # diffusion part of the diagonal; W'' is unbounded at the wells
        scale = 4 * eps ** 2 / h * np.max(w_mid)
        while True:
            ab = np.zeros((2, diag.size))
            ab[0, 1:] = upper
            ab[1] = diag + shift
            try:
                # Newton step in v is -H^{-1} g, hence +H^{-1} g in x
                step = solveh_banded(ab, rhs, lower=False, check_finite=False)
                break
            except (LinAlgError, ValueError):
                shift = max(8 * shift, 1e-8 * scale)
                if shift > 1e8 * scale:
                    raise SolverError("Hessian shift failed", well.b - x, res)
        t = 1.0
        accepted = False
        for _ in range(40):
            trial = x.copy()
            trial[1:-1] = np.clip(x[1:-1] + t * step, 0.0, L)
            e_new = _energy(well, trial, eps, h, w_node, w_mid)
            g_new = _gradient(well, trial, eps, h, w_node, w_mid)
            res_new = np.max(np.abs(g_new / norm))
            if e_new < e - 1e-4 * t * abs(np.dot(g, step)) or (
                    e_new <= e * (1 + 4e-16) and res_new < res):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return x, res, it
        x, e, g, res = trial, e_new, g_new, res_new
    return x, res, max_iter


def solve_on_grid(well: DoubleWell, weight: Weight, data: BoundaryData1D, grid: Grid,
                  v0=None, x0=None, continuation: int = 4):
    """Discrete minimizer on one grid as offsets; returns ``(x, residual, iterations)``."""
    eps, h, n = grid.eps, grid.h, grid.n_cells + 1
    _, w_node, w_mid = _weights_on(weight, n)
    if x0 is None:
        if v0 is None:
            try:
                v0 = build_recovery(well, data, grid).v
            except ConfigurationError:
                v0 = squeezed_guess(well, data, grid)
        x0 = well.b - np.asarray(v0, float)
    x0 = np.asarray(x0, float).copy()
    x0[0], x0[-1] = well.b - data.alpha_eps, well.b - data.beta_eps
    x, res, its = _newton(well, weight, x0, eps, h, w_node, w_mid)
    if res <= EL_TOL:
        return x, res, its
    # continuation: solve at 2^k eps on the same grid, then walk back down
    for k in range(1, continuation + 1):
        guess, total = x0, its
        for e_k in [eps * 2.0 ** j for j in range(k, 0, -1)]:
            guess, _, i_k = _newton(well, weight, guess, e_k, h, w_node, w_mid)
            total += i_k
        x, res, i_k = _newton(well, weight, guess, eps, h, w_node, w_mid)
        its = total + i_k
        if res <= EL_TOL:
            return x, res, its
    raise SolverError(f"Newton did not reach EL residual {EL_TOL:g} (last {res:.3g})",
                      well.b - x, res, {"eps": eps, "n_cells": grid.n_cells})


def _interpolate_to(v, n_fine):
    coarse = np.linspace(0.0, 1.0, v.size)
    return np.interp(np.linspace(0.0, 1.0, n_fine), coarse, v)


def minimize(well: DoubleWell, weight: Weight, data: BoundaryData1D, grid: Grid,
             refine: bool = True) -> MinimizerResult:
    """Minimize the discrete energy and populate the diagnostics.

    With ``refine`` the problem is solved again on the halved grid and the
    reported energies are Richardson-combined in ``h`` (the discrete energy
    has an ``h**2`` error expansion); the raw base-grid values are kept.
    """
    if abs(grid.length - weight.length) > 1e-14 * weight.length:
        raise UsageError("grid and weight lengths differ")
    data.check(well, weight)
    eps = grid.eps
    warnings = []
    if not data.small_weight_variation(well, weight):
        warnings.append(
            f"weight spread {weight.spread:.4g} above smallness threshold "
            f"{smallness_threshold(well, data.alpha_minus):.4g}")
    x, res, its = solve_on_grid(well, weight, data, grid)
    v = well.b - x
    v[0], v[-1] = data.alpha_eps, data.beta_eps
    _, w_node, w_mid = _weights_on(weight, x.size)
    g0 = float(_energy(well, x, eps, grid.h, w_node, w_mid))
    result = MinimizerResult(grid, v, g0, g2_from_g0(well, weight, g0, eps, data.alpha_limit),
                             float(res), its, data, eps, x=x, warnings=warnings)
    result.energy_g0_raw, result.energy_g2_raw = result.energy_g0, result.energy_g2
    try:
        rec = build_recovery(well, data, grid)
        result.recovery_energy_g0 = energy_g0(well, weight, rec.v, eps)
    except ConfigurationError as exc:
        warnings.append(f"no recovery profile: {exc}")
    if refine:
        fine = grid.refined()
        x_f, res_f, its_f = solve_on_grid(well, weight, data, fine,
                                          x0=_interpolate_to(x, fine.n_cells + 1))
        _, wf_node, wf_mid = _weights_on(weight, x_f.size)
        g0_f = float(_energy(well, x_f, eps, fine.h, wf_node, wf_mid))
        result.x_fine = x_f
        result.el_residual = max(result.el_residual, float(res_f))
        result.newton_iterations += its_f
        result.energy_g0 = (4 * g0_f - g0) / 3
        result.energy_g2 = g2_from_g0(well, weight, result.energy_g0, eps, data.alpha_limit)
    result.min_value = float(np.min(v))
    result.sup_deriv_times_eps = float(eps * np.max(np.abs(np.diff(v))) / grid.h)
    result.delta_profile = delta_diagnostic(result, well, weight, eps)
    try:
        result.theta_eps, result.s_eps = transition_time(result, well, eps, data.beta_eps)
    except DiagnosticError as exc:
        warnings.append(str(exc))
    return result


# -- diagnostics -----------------------------------------------------------

def _fd_weights(offsets, order):
    """Finite-difference weights on integer offsets for the given derivative."""
    offsets = np.asarray(offsets, float)
    n = offsets.size
    mat = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(mat, rhs)


def nodal_derivative(v, h, width: int = 3):
    """Derivative at every node by ``2*width``-th order differences (one-sided at ends)."""
    v = np.asarray(v, float)
    n, m = v.size, 2 * width + 1
    if n < m:
        raise UsageError(f"need at least {m} nodes")
    out = np.empty(n)
    centre = _fd_weights(np.arange(-width, width + 1), 1)
    out[width:n - width] = np.correlate(v, centre, mode="valid")
    for i in list(range(width)) + list(range(n - width, n)):
        lo = min(max(i - width, 0), n - m)
        out[i] = np.dot(_fd_weights(np.arange(lo, lo + m) - i, 1), v[lo:lo + m])
    return out / h


def extrapolated_offsets(result: MinimizerResult) -> np.ndarray:
    """Offsets ``b - v`` with the ``h**2`` error removed when a fine solve exists."""
    if result.x is None:
        raise UsageError("result carries no offset field")
    if result.x_fine is None:
        return result.x
    return np.maximum((4 * result.x_fine[::2] - result.x) / 3, 0.0)


def _densities(result, well, eps):
    x = extrapolated_offsets(result)
    dx = nodal_derivative(x, result.grid.h)
    return well.w_offsets(well.length - x, x), eps ** 2 * dx ** 2


def delta_pointwise(result: MinimizerResult, well: DoubleWell, eps: float) -> np.ndarray:
    """``eps^2 v'^2 - W(v)`` at the nodes."""
    pot, kin = _densities(result, well, eps)
    return kin - pot


def delta_diagnostic(result: MinimizerResult, well: DoubleWell, weight: Weight,
                     eps: float) -> np.ndarray:
    """Defect in the first integral from its integrated form.

    ``delta(t) = (w(0) delta(0) - int_0^t (W + eps^2 v'^2) w' ds) / w(t)``
    with the running integral by cumulative Simpson on the nodal densities.
    """
    pot, kin = _densities(result, well, eps)
    t = result.grid.nodes
    dens = (pot + kin) * weight.derivative(t)
    running = np.concatenate([[0.0], cumulative_simpson(dens, dx=result.grid.h)])
    return (weight.at0 * (kin[0] - pot[0]) - running) / weight(t)


def theta_constant(well: DoubleWell, eps: float, beta_eps: float) -> tuple[float, float]:
    """Smallest power of two ``C`` with ``W(b - C m) >= 2 (W(beta) + eps)``."""
    m = max(well.b - beta_eps, eps ** (1.0 / (1.0 + well.q)))
    target = 2.0 * (float(well.w(beta_eps)) + eps)
    c = 1.0
    while c * m < well.length:
        theta = well.b - c * m
        if float(well.w(theta)) >= target:
            return c, theta
        c *= 2.0
    raise DiagnosticError(f"no theta constant for eps={eps}: W never reaches {target:.3g}")


def transition_time(result: MinimizerResult, well: DoubleWell, eps: float,
                    beta_eps: float) -> tuple[float, float]:
    """``(theta_eps, S_eps)``: first time v reaches theta, linearly interpolated."""
    v, t = result.v, result.grid.nodes
    if v[0] >= well.b:
        return float(well.b), 0.0
    _, theta = theta_constant(well, eps, beta_eps)
    if v[0] >= theta:
        return theta, 0.0
    above = np.nonzero(v >= theta)[0]
    if above.size == 0:
        raise DiagnosticError(f"v never reaches theta_eps={theta:.6g}")
    i = above[0]
    s = t[i - 1] + (theta - v[i - 1]) / (v[i] - v[i - 1]) * (t[i] - t[i - 1])
    if result.data.alpha_eps >= result.data.alpha_minus:
        dips = np.diff(v[: i + 1])
        if np.any(dips < -1e-10):
            raise DiagnosticError("v is not nondecreasing before reaching theta_eps")
    return float(theta), float(s)


@dataclass(frozen=True)
class RescaledView:
    s: np.ndarray
    w: np.ndarray
    sup_distance: dict


def rescaled_view(result: MinimizerResult, eps: float, well: DoubleWell | None = None,
                  alpha: float | None = None, windows=(1.0, 2.0, 4.0)) -> RescaledView:
    """``w(s) = v(eps s)`` on ``[0, T/eps]`` and its sup-distance to the limit profile."""
    s = result.grid.nodes / eps
    w = result.v.copy()
    dist = {}
    if well is not None:
        prof = cached_profile(well, float(result.data.alpha_limit if alpha is None else alpha))
        z = prof.z(s)
        for n in windows:
            mask = s <= n
            dist[n] = float(np.max(np.abs(w[mask] - z[mask])))
    return RescaledView(s, w, dist)


def energy_g1_sharp(well: DoubleWell, weight: Weight, jumps, start_phase: float,
                    boundary: tuple[float, float]) -> float:
    """First-order energy of an ``{a, b}``-valued step function.

    ``jumps`` are the switching positions inside ``(0, T)``; the function
    starts at ``start_phase``.  ``boundary = (v0, vT)`` are the Dirichlet
    targets entering the two boundary penalties.
    """
    jumps = np.sort(np.atleast_1d(np.asarray(jumps, float)))
    if jumps.size and (jumps[0] <= 0 or jumps[-1] >= weight.length):
        raise UsageError("jump positions must lie strictly inside (0, T)")
    if start_phase not in (well.a, well.b):
        raise UsageError("start_phase must be one of the wells")
    end_phase = start_phase
    if jumps.size % 2:
        end_phase = well.b if start_phase == well.a else well.a
    interior = well.c_w * float(np.sum(weight(jumps))) if jumps.size else 0.0
    v0, vt = boundary

    def dist(x, y):
        lo, hi = sorted((x, y))
        return abs(float(well.dist_to_b(lo)) - float(well.dist_to_b(hi)))

    return (interior + dist(start_phase, v0) * weight.at0
            + dist(end_phase, vt) * float(weight(weight.length)))
