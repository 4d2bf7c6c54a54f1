"""Closed planar boundary curves, signed curvature and the normal tube chart.

Orientation: the inward normal is the tangent rotated by +90 degrees, so
outer boundaries run counter-clockwise and holes run clockwise.  With
``kappa = (x'y'' - y'x'') / |gamma'|**3`` the unit circle has ``kappa = 1``
and the rim of a hole of radius r has ``kappa = -1/r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from chexpand.errors import ConfigurationError, GeometryError
from chexpand.potential import DoubleWell
from chexpand.setup1d import Weight

TWO_PI = 2.0 * np.pi


class BoundaryCurve:
    """Smooth closed curve parametrized over ``[0, 2 pi)``."""

    name = "curve"

    def position(self, theta):
        raise NotImplementedError

    def d1(self, theta):
        raise NotImplementedError

    def d2(self, theta):
        raise NotImplementedError

    def speed(self, theta):
        d = self.d1(theta)
        return np.hypot(d[0], d[1])

    def tangent(self, theta):
        d = self.d1(theta)
        s = np.hypot(d[0], d[1])
        return d / s

    def normal(self, theta):
        """Inward unit normal (tangent turned left)."""
        tx, ty = self.tangent(theta)
        return np.array([-ty, tx])

    def length(self, n: int = 512) -> float:
        theta = TWO_PI * np.arange(n) / n
        return float(np.sum(self.speed(theta)) * TWO_PI / n)

    def arclength_table(self, n: int = 512):
        """Cumulative arclength at ``theta_k = 2 pi k / n`` (trapezoid in theta)."""
        theta = TWO_PI * np.arange(n + 1) / n
        sp = self.speed(theta)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (sp[1:] + sp[:-1]) * TWO_PI / n)])
        return theta, cum

    def boundary_nodes(self, n: int):
        """Equispaced theta nodes and arclength weights (spectral for periodic data)."""
        theta = TWO_PI * np.arange(n) / n
        return theta, self.speed(theta) * TWO_PI / n


@dataclass(frozen=True)
class Circle(BoundaryCurve):
    radius: float
    center: tuple = (0.0, 0.0)
    clockwise: bool = False
    name: str = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("radius must be positive")

    @property
    def _sgn(self):
        return -1.0 if self.clockwise else 1.0

    def position(self, theta):
        th = self._sgn * np.asarray(theta, float)
        return np.array([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)])

    def d1(self, theta):
        th = self._sgn * np.asarray(theta, float)
        return self._sgn * self.radius * np.array([-np.sin(th), np.cos(th)])

    def d2(self, theta):
        th = self._sgn * np.asarray(theta, float)
        return -self.radius * np.array([np.cos(th), np.sin(th)])


@dataclass(frozen=True)
class FourierStar(BoundaryCurve):
    """Star-shaped curve ``r(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta)``."""

    c0: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    name: str = "star"

    def __post_init__(self):
        theta = TWO_PI * np.arange(1024) / 1024
        if np.min(self._radius(theta)[0]) <= 0:
            raise ConfigurationError("Fourier radius must stay positive")

    def _radius(self, theta):
        theta = np.asarray(theta, float)
        r, dr, ddr = np.full(theta.shape, self.c0), np.zeros(theta.shape), np.zeros(theta.shape)
        for k, c in enumerate(self.cos_coeffs, start=1):
            r = r + c * np.cos(k * theta)
            dr = dr - k * c * np.sin(k * theta)
            ddr = ddr - k * k * c * np.cos(k * theta)
        for k, s in enumerate(self.sin_coeffs, start=1):
            r = r + s * np.sin(k * theta)
            dr = dr + k * s * np.cos(k * theta)
            ddr = ddr - k * k * s * np.sin(k * theta)
        return r, dr, ddr

    def position(self, theta):
        r, _, _ = self._radius(theta)
        return np.array([r * np.cos(theta), r * np.sin(theta)])

    def d1(self, theta):
        r, dr, _ = self._radius(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.array([dr * c - r * s, dr * s + r * c])

    def d2(self, theta):
        r, dr, ddr = self._radius(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.array([ddr * c - 2 * dr * s - r * c, ddr * s + 2 * dr * c - r * s])


def curvature(curve: BoundaryCurve, theta):
    """Signed curvature with the inward-normal convention (unit circle: +1)."""
    d1, d2 = curve.d1(theta), curve.d2(theta)
    sp = np.hypot(d1[0], d1[1])
    if np.any(sp < 1e-12):
        raise GeometryError("degenerate parametrization: vanishing tangent")
    return (d1[0] * d2[1] - d1[1] * d2[0]) / sp ** 3


@dataclass(frozen=True)
class Domain:
    """Planar domain given by its boundary components."""

    components: tuple
    names: tuple
    kind: str = "custom"

    @classmethod
    def disk(cls, radius: float = 1.0) -> "Domain":
        return cls((Circle(radius),), ("boundary",), "disk")

    @classmethod
    def annulus(cls, r0: float, r1: float) -> "Domain":
        if not 0 < r0 < r1:
            raise ConfigurationError("annulus needs 0 < r0 < r1")
        return cls((Circle(r1), Circle(r0, clockwise=True)), ("outer", "inner"), "annulus")

    @classmethod
    def star(cls, c0: float, cos_coeffs=(), sin_coeffs=()) -> "Domain":
        return cls((FourierStar(c0, tuple(cos_coeffs), tuple(sin_coeffs)),), ("boundary",), "star")

    def max_abs_curvature(self, n: int = 2048) -> float:
        theta = TWO_PI * np.arange(n) / n
        return max(float(np.max(np.abs(curvature(c, theta)))) for c in self.components)

    def tube_width(self, factor: float = 0.25) -> float:
        return factor / self.max_abs_curvature()


@dataclass(frozen=True)
class TubeChart:
    """Normal coordinates ``(theta, t) -> gamma(theta) + t nu(theta)``."""

    curve: BoundaryCurve
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("tube width must be positive")
        theta = TWO_PI * np.arange(2048) / 2048
        k = curvature(self.curve, theta)
        if np.any(1 - np.maximum(k, 0) * self.delta <= 0):
            raise GeometryError("tube width reaches a focal point of the curve")

    def phi(self, theta, t):
        return self.curve.position(theta) + np.asarray(t, float) * self.curve.normal(theta)

    def jacobian(self, theta, t):
        """Area factor ``1 - kappa(theta) t`` of the chart in arclength units."""
        return 1.0 - curvature(self.curve, theta) * np.asarray(t, float)

    def invert(self, point, n_seed: int = 256, tol: float = 1e-13):
        """Recover ``(theta, t)`` for a point of the tube by closest-point Newton."""
        p = np.asarray(point, float)
        seeds = TWO_PI * np.arange(n_seed) / n_seed
        gap = self.curve.position(seeds) - p[:, None]
        th = seeds[np.argmin(np.hypot(gap[0], gap[1]))]
        for _ in range(50):
            r = self.curve.position(th) - p
            d1, d2 = self.curve.d1(th), self.curve.d2(th)
            f = np.dot(r, d1)
            df = np.dot(d1, d1) + np.dot(r, d2)
            step = f / df
            th -= step
            if abs(step) < tol:
                break
        th = float(np.mod(th, TWO_PI))
        t = float(np.dot(p - self.curve.position(th), self.curve.normal(th)))
        return th, t


def slice_weight(chart: TubeChart, theta: float, t_slice: float) -> Weight:
    """Weight ``1 - kappa t`` on the normal fibre ``[0, t_slice]``."""
    if t_slice > chart.delta * (1 + 1e-12):
        raise ConfigurationError(f"slice length {t_slice} exceeds tube width {chart.delta}")
    kappa = float(curvature(chart.curve, theta))
    if 1 - kappa * t_slice <= 0:
        raise GeometryError(f"weight vanishes inside the slice at theta={theta}")
    return Weight.affine(t_slice, -kappa)


# -- boundary data -------------------------------------------------------

@dataclass(frozen=True)
class ComponentDatum:
    """Boundary values on one component as a function of theta."""

    value_fn: Callable
    derivative_fn: Callable
    label: str = "custom"

    def __call__(self, theta):
        return np.asarray(self.value_fn(np.asarray(theta, float)), float)

    def dtheta(self, theta):
        out = self.derivative_fn(np.asarray(theta, float))
        return np.broadcast_to(np.asarray(out, float), np.shape(theta)).copy()

    @classmethod
    def constant(cls, value: float) -> "ComponentDatum":
        return cls(lambda th: np.full(np.shape(th), float(value)),
                   lambda th: np.zeros(np.shape(th)), f"constant:{value:g}")

    @classmethod
    def fourier(cls, c0: float, cos_coeffs=(), sin_coeffs=()) -> "ComponentDatum":
        cc, ss = tuple(cos_coeffs), tuple(sin_coeffs)

        def val(th):
            out = np.full(np.shape(th), float(c0))
            for k, c in enumerate(cc, start=1):
                out = out + c * np.cos(k * th)
            for k, s in enumerate(ss, start=1):
                out = out + s * np.sin(k * th)
            return out

        def der(th):
            out = np.zeros(np.shape(th))
            for k, c in enumerate(cc, start=1):
                out = out - k * c * np.sin(k * th)
            for k, s in enumerate(ss, start=1):
                out = out + k * s * np.cos(k * th)
            return out

        return cls(val, der, "fourier")

    @classmethod
    def arc(cls, inside: float, outside: float, start: float, stop: float) -> "ComponentDatum":
        """``inside`` on the theta-arc ``[start, stop]``, ``outside`` elsewhere (piecewise)."""

        def on_arc(th):
            th = np.mod(th, TWO_PI)
            lo, hi = np.mod(start, TWO_PI), np.mod(stop, TWO_PI)
            return (th >= lo) & (th <= hi) if lo <= hi else (th >= lo) | (th <= hi)

        return cls(lambda th: np.where(on_arc(th), float(inside), float(outside)),
                   lambda th: np.zeros(np.shape(th)), f"arc:{inside:g}/{outside:g}")


@dataclass(frozen=True)
class BoundaryDatum:
    """Dirichlet data ``g`` on every boundary component plus the admissibility levels.

    ``g_eps`` defaults to ``g``; ``mollify_width`` switches to a periodic
    Gaussian smoothing in theta of width ``mollify_width(eps)``.
    """

    parts: tuple
    alpha_minus: float = 0.1
    kappa0: float = -1.0
    mollify_width: Callable | None = None

    def g(self, k: int, theta):
        return self.parts[k](theta)

    def g_eps(self, k: int, theta, eps: float):
        if self.mollify_width is None:
            return self.g(k, theta)
        return _mollified(self.parts[k], np.asarray(theta, float), self.mollify_width(eps))

    def g_eps_dtheta(self, k: int, theta, eps: float, h: float = 1e-5):
        if self.mollify_width is None:
            return self.parts[k].dtheta(theta)
        return (self.g_eps(k, np.asarray(theta) + h, eps) - self.g_eps(k, np.asarray(theta) - h, eps)) / (2 * h)


def _mollified(part, theta, width, n: int = 129):
    if width <= 0:
        return part(theta)
    s = np.linspace(-4 * width, 4 * width, n)
    ker = np.exp(-0.5 * (s / width) ** 2)
    ker /= ker.sum()
    return np.sum(part(theta[..., None] - s) * ker, axis=-1)


@dataclass
class AdmissibilityReport:
    passed: bool
    n_samples: int
    violations: list = field(default_factory=list)
    arcs: list = field(default_factory=list)

    def summary(self) -> str:
        if self.passed:
            return f"admissible ({self.n_samples} samples per component)"
        parts = [f"{c}: theta in [{lo:.4f}, {hi:.4f}]" for c, lo, hi in self.arcs]
        return "inadmissible boundary data; violating arcs: " + "; ".join(parts)


def check_admissibility(domain: Domain, datum: BoundaryDatum, n_samples: int = 256,
                        well: DoubleWell | None = None) -> AdmissibilityReport:
    """Sample ``{g <= alpha_-} subset {kappa < kappa0}`` and ``{g = a} subset {kappa <= 0}``."""
    if n_samples < 64:
        raise ConfigurationError("n_samples must be at least 64")
    if len(datum.parts) != len(domain.components):
        raise ConfigurationError("one boundary datum per component is required")
    a = well.a if well is not None else 0.0
    theta = TWO_PI * np.arange(n_samples) / n_samples
    report = AdmissibilityReport(True, n_samples)
    for k, (curve, name) in enumerate(zip(domain.components, domain.names)):
        g = datum.g(k, theta)
        kap = curvature(curve, theta)
        bad = ((g <= datum.alpha_minus) & ~(kap < datum.kappa0)) | ((g <= a) & (kap > 0))
        for i in np.nonzero(bad)[0]:
            report.violations.append((name, float(theta[i]), float(g[i]), float(kap[i])))
        if np.any(bad):
            report.passed = False
            report.arcs.extend((name, lo, hi) for lo, hi in _runs(theta, bad))
    return report


def _runs(theta, mask):
    """Contiguous runs of a periodic boolean mask as (theta_start, theta_stop)."""
    n = mask.size
    if np.all(mask):
        return [(0.0, float(theta[-1]))]
    start = int(np.argmin(mask))  # a False entry, so runs do not wrap past it
    rolled = np.roll(mask, -start)
    out, i = [], 0
    while i < n:
        if rolled[i]:
            j = i
            while j + 1 < n and rolled[j + 1]:
                j += 1
            out.append((float(theta[(i + start) % n]), float(theta[(j + start) % n])))
            i = j + 1
        else:
            i += 1
    return out


def datum_convergence(domain: Domain, datum: BoundaryDatum, well: DoubleWell,
                      eps_list, n: int = 256) -> dict:
    """The two approximation quantities for ``g_eps`` along a sweep.

    ``fidelity = int d_W(g_eps, g) / eps`` and
    ``tangential = eps int |d_tau g_eps|^2 / W(g_eps)``; both must tend to 0.
    Points where ``W(g_eps) = 0`` and the tangential derivative vanishes
    contribute nothing.
    """
    fid, tan = [], []
    for eps in eps_list:
        f_tot = t_tot = 0.0
        for k, curve in enumerate(domain.components):
            theta, wts = curve.boundary_nodes(n)
            g = datum.g(k, theta)
            ge = np.clip(datum.g_eps(k, theta, eps), well.a, well.b)
            dist = np.abs(well.dist_to_b(ge) - well.dist_to_b(g))
            dtau = datum.g_eps_dtheta(k, theta, eps) / curve.speed(theta)
            wg = well.w(ge)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(dtau == 0, 0.0, dtau ** 2 / wg)
            f_tot += float(np.sum(dist * wts)) / eps
            t_tot += eps * float(np.sum(ratio * wts))
        fid.append(f_tot)
        tan.append(t_tot)
    return {"eps": list(map(float, eps_list)), "fidelity": fid, "tangential": tan}
