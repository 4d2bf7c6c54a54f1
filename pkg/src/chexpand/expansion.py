"""Boundary assembly of the second-order limit, its slice-wise numerical
counterpart, extrapolation in eps and the expansion of minimum values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from chexpand.errors import ConfigurationError, SolverError
from chexpand.functional1d import MinimizerResult, energy_g0, g2_from_g0, minimize
from chexpand.geometry2d import (BoundaryDatum, Domain, TubeChart, check_admissibility,
                                 curvature, slice_weight)
from chexpand.potential import DoubleWell
from chexpand.profile import tail_integral
from chexpand.recovery import build_recovery
from chexpand.setup1d import CELLS_PER_EPS, BoundaryData1D, Grid

# cache keys quantize boundary values and curvatures to this step
KEY_STEP = 1e-6


def _key(x: float) -> int:
    return int(round(x / KEY_STEP))


class TailCache:
    """``tail_integral`` memoized on quantized boundary values."""

    def __init__(self, well: DoubleWell):
        self.well = well
        self._store: dict[int, float] = {}

    def __call__(self, g: float) -> float:
        k = _key(g)
        if k not in self._store:
            value = min(max(k * KEY_STEP, self.well.a), self.well.b)
            self._store[k] = tail_integral(self.well, value)
        return self._store[k]


def _require_admissible(domain, datum, well, report):
    if report is None:
        report = check_admissibility(domain, datum, well=well)
    if not report.passed:
        raise ConfigurationError(report.summary())
    return report


def predicted_limit(domain: Domain, datum: BoundaryDatum, well: DoubleWell,
                    boundary_resolution: int = 256, report=None,
                    cache: TailCache | None = None) -> float:
    """``int_boundary -kappa(y) tail(g(y)) dH1`` by the periodic trapezoid rule."""
    _require_admissible(domain, datum, well, report)
    cache = cache or TailCache(well)
    total = 0.0
    for k, curve in enumerate(domain.components):
        theta, wts = curve.boundary_nodes(boundary_resolution)
        kap = curvature(curve, theta)
        g = datum.g(k, theta)
        tails = np.array([cache(float(gi)) for gi in g])
        total += float(np.sum(-kap * tails * wts))
    return total


def first_order_value(domain: Domain, datum: BoundaryDatum, well: DoubleWell,
                      boundary_resolution: int = 256) -> float:
    """``int_boundary d_W(g, b) dH1``, the first-order minimum."""
    total = 0.0
    for k, curve in enumerate(domain.components):
        theta, wts = curve.boundary_nodes(boundary_resolution)
        total += float(np.sum(np.atleast_1d(well.dist_to_b(datum.g(k, theta))) * wts))
    return total


@dataclass(frozen=True)
class BetaSchedule:
    """Right boundary value of every slice: ``b - C exp(-mu T / eps)`` or ``b``."""

    kind: str = "exponential"
    constant: float = 1.0
    rate: float = 2.0

    def __post_init__(self):
        if self.kind not in ("exponential", "well"):
            raise ConfigurationError(f"unknown beta schedule {self.kind!r}")

    def __call__(self, well: DoubleWell, eps: float, t_slice: float) -> float:
        if self.kind == "well":
            return well.b
        return max(well.a, well.b - self.constant * math.exp(-self.rate * t_slice / eps))


@dataclass
class SliceRecord:
    component: str
    theta: float
    kappa: float
    g: float
    g_eps: float
    eps: float
    slice_g2: float
    slice_g0: float
    recovery_g2: float
    s_eps_over_eps: float
    result: MinimizerResult = field(repr=False)


@dataclass
class SecondOrderSample:
    eps: float
    numeric_f2: float
    recovery_f2: float
    m_eps: float
    slices: list


class SliceSolver:
    """Per-slice minimizations memoized on ``(kappa, g_eps, g, T, beta, eps)``."""

    def __init__(self, well: DoubleWell, cells_per_eps: int = CELLS_PER_EPS, refine: bool = True):
        self.well = well
        self.cells_per_eps = cells_per_eps
        self.refine = refine
        self._store: dict = {}

    def solve(self, chart: TubeChart, theta: float, t_slice: float, data: BoundaryData1D,
              eps: float):
        kappa = float(curvature(chart.curve, theta))
        key = (_key(kappa), _key(data.alpha_eps), _key(data.alpha_limit), _key(t_slice),
               float(data.beta_eps), float(eps))
        if key not in self._store:
            weight = slice_weight(chart, theta, t_slice)
            grid = Grid.for_eps(eps, t_slice, self.cells_per_eps)
            res = minimize(self.well, weight, data, grid, refine=self.refine)
            self._store[key] = (res, self._recovery_g2(weight, data, grid))
        return self._store[key]

    def _recovery_g2(self, weight, data, grid):
        try:
            g0 = energy_g0(self.well, weight, build_recovery(self.well, data, grid).v, grid.eps)
            if self.refine:
                fine = grid.refined()
                g0_f = energy_g0(self.well, weight, build_recovery(self.well, data, fine).v, grid.eps)
                g0 = (4 * g0_f - g0) / 3
        except ConfigurationError:
            return float("nan")
        return g2_from_g0(self.well, weight, g0, grid.eps, data.alpha_limit)


def numeric_second_order(domain: Domain, datum: BoundaryDatum, well: DoubleWell, eps: float,
                         slice_resolution: int = CELLS_PER_EPS, boundary_resolution: int = 64,
                         beta: BetaSchedule = BetaSchedule(), tube_factor: float = 0.25,
                         solver: SliceSolver | None = None, report=None) -> SecondOrderSample:
    """Boundary quadrature of per-slice second-order energies of the minimizers."""
    _require_admissible(domain, datum, well, report)
    solver = solver or SliceSolver(well, slice_resolution)
    t_slice = domain.tube_width(tube_factor)
    beta_eps = beta(well, eps, t_slice)
    f2 = rec = m_eps = 0.0
    records, failures = [], []
    for k, (curve, name) in enumerate(zip(domain.components, domain.names)):
        chart = TubeChart(curve, t_slice)
        theta, wts = curve.boundary_nodes(boundary_resolution)
        g = datum.g(k, theta)
        g_eps = np.clip(datum.g_eps(k, theta, eps), well.a, well.b)
        for j in range(theta.size):
            data = BoundaryData1D(float(g_eps[j]), beta_eps, float(g[j]),
                                  datum.kappa0, datum.alpha_minus)
            try:
                res, rec_g2 = solver.solve(chart, float(theta[j]), t_slice, data, eps)
            except SolverError as exc:
                failures.append(f"{name} theta={theta[j]:.6f} g={g[j]:.6g}: {exc}")
                continue
            f2 += wts[j] * res.energy_g2
            rec += wts[j] * rec_g2
            m_eps += wts[j] * res.energy_g0
            records.append(SliceRecord(name, float(theta[j]), float(curvature(curve, theta[j])),
                                       float(g[j]), float(g_eps[j]), eps, res.energy_g2,
                                       res.energy_g0, rec_g2, res.s_eps / eps, res))
    if failures:
        raise SolverError(f"{len(failures)} slice solve(s) failed at eps={eps}: "
                          + "; ".join(failures[:5]), None, float("nan"), {"failures": failures})
    return SecondOrderSample(eps, f2, rec, m_eps, records)


# -- extrapolation ---------------------------------------------------------

@dataclass(frozen=True)
class Extrapolation:
    limit: float
    order_used: float
    fitted_order: float
    warning: str = ""


def fitted_order(eps, values) -> float:
    """Convergence order from the three smallest eps (nan if not monotone)."""
    order = np.argsort(eps)[::-1]
    e = np.asarray(eps, float)[order][-3:]
    v = np.asarray(values, float)[order][-3:]
    if e.size < 3:
        return float("nan")
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if d1 == 0 or d2 == 0 or np.sign(d1) != np.sign(d2) or abs(d2) >= abs(d1):
        return float("nan")
    target = d1 / d2

    def gap(p):
        return (e[0] ** p - e[1] ** p) / (e[1] ** p - e[2] ** p) - target

    try:
        return float(brentq(gap, 1e-3, 20.0, xtol=1e-12))
    except ValueError:
        return float("nan")


def richardson(eps, values, assumed_order: float = 1.0, order_tol: float = 0.2,
               scale: float | None = None) -> Extrapolation:
    """Extrapolate to eps -> 0 from the two smallest eps.

    The assumed order is replaced by the fitted one when they differ by more
    than ``order_tol`` relative.  Differences below ``1e-12 * scale``, or
    values all below ``1e-6 * scale``, count as converged.
    """
    eps = np.asarray(eps, float)
    values = np.asarray(values, float)
    if eps.size < 2:
        raise ConfigurationError("extrapolation needs at least two eps values")
    order = np.argsort(eps)[::-1]
    e, v = eps[order], values[order]
    scale = scale if scale is not None else max(1.0, float(np.max(np.abs(v))))
    if np.all(np.abs(np.diff(v)) <= 1e-12 * scale) or np.all(np.abs(v) <= 1e-6 * scale):
        return Extrapolation(float(v[-1]), assumed_order, float("nan"))
    p_fit = fitted_order(e, v)
    warning = ""
    p = assumed_order
    if math.isnan(p_fit):
        if e.size >= 3:
            warning = "non-monotone tail: fitted order unavailable, assumed order used"
    elif abs(p_fit - assumed_order) > order_tol * assumed_order:
        p = p_fit
    r = e[-2] / e[-1]
    limit = v[-1] + (v[-1] - v[-2]) / (r ** p - 1.0)
    return Extrapolation(float(limit), float(p), p_fit, warning)


# -- interior closeness ------------------------------------------------------

@dataclass
class ClosenessFit:
    passed: bool
    slope: float
    intercept: float
    r_squared: float
    gaps: list
    reason: str = ""


def interior_gap(result: MinimizerResult, probe: float) -> float:
    """``b - v(probe)`` from the offset field, linearly interpolated."""
    if result.x is None:
        raise ConfigurationError("slice result carries no offset field")
    return float(np.interp(probe, result.grid.nodes, result.x))


def interior_closeness(slice_results, probe: float, eps_list) -> ClosenessFit:
    """Fit ``log(b - v_eps(probe))`` against ``1/eps``; needs slope < 0 and R^2 > 0.99."""
    gaps = [interior_gap(r, probe) for r in slice_results]
    eps = np.asarray(eps_list, float)
    for e, gp in zip(eps, gaps):
        if not gp > 0:
            return ClosenessFit(False, float("nan"), float("nan"), float("nan"), gaps,
                                f"gap vanished at eps={e:g}: dead core (v = b exactly)")
    order = np.argsort(eps)[::-1]
    if np.any(np.diff(np.asarray(gaps)[order]) > 0):
        reason = "gaps not decreasing along the sweep"
    else:
        reason = ""
    x, y = 1.0 / eps, np.log(gaps)
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    passed = slope < 0 and r2 > 0.99 and not reason
    if not passed and not reason:
        reason = f"fit quality: slope={slope:.4g}, R^2={r2:.4g}"
    return ClosenessFit(passed, float(slope), float(intercept), float(r2), gaps, reason)


# -- expansion of minima -----------------------------------------------------

@dataclass
class ExpansionReport:
    predicted_f2: float
    per_eps_numeric_f2: list
    per_eps_recovery_f2: list
    extrapolated_f2: float
    extrapolated_recovery_f2: float
    m0: float
    m1: float
    m2: float
    m_eps: list
    residuals: list
    residual_order: float
    extrapolation: Extrapolation
    samples: list = field(repr=False, default_factory=list)
    warnings: list = field(default_factory=list)

    def relative_error(self) -> float:
        if self.predicted_f2 == 0:
            return abs(self.extrapolated_f2)
        return abs(self.extrapolated_f2 - self.predicted_f2) / abs(self.predicted_f2)


def _residual_order(eps, residuals, floor):
    e = np.asarray(eps, float)
    r = np.abs(np.asarray(residuals, float))
    keep = r > floor
    if np.count_nonzero(keep) < 2:
        return float("nan")
    return float(np.polyfit(np.log(e[keep]), np.log(r[keep]), 1)[0])


def expected_order(domain: Domain, datum: BoundaryDatum, well: DoubleWell,
                   n: int = 256) -> float:
    """Convergence order in eps of the slice second-order energies.

    Data strictly above ``a`` converge at first order.  Where ``g = a`` the
    profile leaves the well with vanishing speed; compressing that slow start
    over a length ``x`` costs ``x**((3+q)/2) / eps`` and gains ``x**((1-q)/2)``,
    so the optimum ``x ~ eps**(1/(1+q))`` leaves an error of order
    ``eps**((1-q)/(2(1+q)))``.
    """
    for k, curve in enumerate(domain.components):
        theta, _ = curve.boundary_nodes(n)
        if np.any(datum.g(k, theta) <= well.a + KEY_STEP):
            return (1 - well.q) / (2 * (1 + well.q))
    return 1.0


def expansion_table(domain: Domain, datum: BoundaryDatum, well: DoubleWell, eps_list,
                    slice_resolution: int = CELLS_PER_EPS, boundary_resolution: int = 64,
                    beta: BetaSchedule = BetaSchedule(), assumed_order: float | None = None,
                    refine: bool = True) -> ExpansionReport:
    """Sweep eps, extrapolate the second-order value and report the minima expansion."""
    if assumed_order is None:
        assumed_order = expected_order(domain, datum, well)
    report = _require_admissible(domain, datum, well, None)
    solver = SliceSolver(well, slice_resolution, refine)
    samples = [numeric_second_order(domain, datum, well, float(e), slice_resolution,
                                    boundary_resolution, beta, solver=solver, report=report)
               for e in eps_list]
    eps = [s.eps for s in samples]
    num = [s.numeric_f2 for s in samples]
    rec = [s.recovery_f2 for s in samples]
    predicted = predicted_limit(domain, datum, well, boundary_resolution, report)
    scale = max(1.0, abs(predicted))
    ext = richardson(eps, num, assumed_order, scale=scale)
    warnings = [ext.warning] if ext.warning else []
    finite_rec = [(e, r) for e, r in zip(eps, rec) if np.isfinite(r)]
    rec_ext = float("nan")
    if len(finite_rec) >= 2:
        rec_ext = richardson(*zip(*finite_rec), assumed_order, scale=scale).limit
    m1 = first_order_value(domain, datum, well, boundary_resolution)
    m2 = ext.limit
    m_eps = [s.m_eps for s in samples]
    residuals = [m - (e * m1 + e ** 2 * m2) for e, m in zip(eps, m_eps)]
    floor = 1e-9 * max(e ** 2 for e in eps) * scale
    order = _residual_order(eps, residuals, floor)
    if math.isnan(order):
        warnings.append("residuals at solver tolerance: decay order not fitted")
    return ExpansionReport(predicted, list(zip(eps, num)), list(zip(eps, rec)), ext.limit,
                           rec_ext, 0.0, m1, m2, m_eps, residuals, order, ext, samples, warnings)


def rescaled_second_order(eps, g2_values, normalization) -> list:
    """Second-order values under another normalization: ``eps * G2 / delta_eps``."""
    return [e * g / normalization(e) for e, g in zip(eps, g2_values)]


def liminf_constant(g2: float, eps: float, well: DoubleWell, alpha_eps: float, alpha: float,
                    beta_eps: float) -> float:
    """Smallest ``M'`` with ``G2 >= -M' (1 + (d(alpha_eps, alpha) + d(beta_eps, b)) / eps)``."""
    d_alpha = abs(float(well.dist_to_b(alpha_eps)) - float(well.dist_to_b(alpha)))
    d_beta = float(well.dist_to_b(beta_eps))
    return max(0.0, -g2) / (1.0 + (d_alpha + d_beta) / eps)
