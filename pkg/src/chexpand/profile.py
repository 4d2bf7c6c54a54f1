"""Heteroclinic profile ``z' = sqrt(W(z))`` from a start value to the well b.

With ``Psi(x) = int_alpha^x W**-0.5`` the profile is ``z = Psi^{-1}`` on
``[0, T]`` where ``T = Psi(b)`` is finite for subquadratic wells, and
``z = b`` afterwards.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from chexpand.errors import ConfigurationError
from chexpand.potential import DoubleWell, _check_domain
from chexpand.quadrature import composite_gl


MIN_RESOLUTION = 8


def _inv_sqrt_w(well: DoubleWell):
    def f(xa, xb):
        return well.w_offsets(xa, xb) ** -0.5
    return f


def psi(well: DoubleWell, alpha: float, x):
    """Travel time ``int_alpha^x W**-0.5`` (signed, finite up to the wells)."""
    _check_domain(well, alpha, x)
    return well.integrate(_inv_sqrt_w(well), alpha, x)


def hitting_time(well: DoubleWell, alpha: float) -> float:
    """``T = Psi_alpha(b)``, the finite time at which the profile reaches b."""
    return float(psi(well, alpha, well.b))


@dataclass
class TransitionProfile:
    """Profile leaving ``alpha`` at ``t = 0`` and arriving at b at ``t = T``."""

    well: DoubleWell
    alpha: float
    hitting_time: float
    knots_t: np.ndarray
    knots_z: np.ndarray
    _spline: PchipInterpolator | None = field(repr=False)

    def z(self, t):
        """Exact evaluation: Newton on ``Psi(z) = t`` bracketed by the knot table."""
        t = np.asarray(t, float)
        out = np.empty(t.shape)
        flat_t = t.ravel()
        flat = out.ravel()
        flat[flat_t <= 0] = self.alpha
        flat[flat_t >= self.hitting_time] = self.well.b
        inner = (flat_t > 0) & (flat_t < self.hitting_time)
        if np.any(inner):
            flat[inner] = self._invert(flat_t[inner])
        out = flat.reshape(t.shape)
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self.z(t)

    def dz(self, t):
        """``z'(t) = sqrt(W(z(t)))`` (zero after arrival)."""
        return np.sqrt(self.well.w(self.z(t)))

    def _invert(self, t):
        # Newton in u = (z - a)**(1/m), where the travel time is nearly linear
        # next to a, so tiny times resolve to full relative precision
        well, a = self.well, self.well.a
        m = 2.0 / (1.0 - well.q)
        k = np.clip(np.searchsorted(self.knots_t, t, side="right") - 1, 0, len(self.knots_t) - 2)
        lo_u = (self.knots_z[k] - a) ** (1 / m)
        hi_u = (self.knots_z[k + 1] - a) ** (1 / m)
        t0 = self.knots_t[k]
        u = np.clip(np.maximum(self._spline(t) - a, 0.0) ** (1 / m), lo_u, hi_u)
        f = _inv_sqrt_w(well)
        for _ in range(100):
            z = a + u ** m
            # offsets measured from b keep precision next to the right well
            xb = well.b - z
            xa = np.where(xb < 0.25 * well.length, well.length - xb, u ** m)
            g = t0 + well.integrate_offsets(f, self.knots_z[k] - a, xa) - t
            lo_u = np.where(g < 0, u, lo_u)
            hi_u = np.where(g > 0, u, hi_u)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = g * np.sqrt(well.w(z)) / (m * u ** (m - 1))
            u_new = u - step
            bad = ~((u_new > lo_u) & (u_new < hi_u)) | ~np.isfinite(u_new)
            u_new = np.where(bad, 0.5 * (lo_u + hi_u), u_new)
            done = np.abs(u_new - u) <= 2e-16 * np.maximum(u, 1e-300)
            u = u_new
            if np.all(done):
                break
        return a + u ** m

    def tail_integral(self) -> float:
        return tail_integral(self.well, self.alpha)

    def to_csv(self, path: str | Path, n: int = 401) -> Path:
        path = Path(path)
        # a profile that starts at b has no transition: header only
        t = np.linspace(0.0, self.hitting_time, n) if self.hitting_time > 0 else np.zeros(0)
        z = self.z(t)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "z", "dz", "dist_to_b"])
            for ti, zi, di, gi in zip(t, z, self.dz(t), self.well.dist_to_b(z)):
                wr.writerow([f"{ti:.12e}", f"{zi:.15e}", f"{di:.12e}", f"{gi:.12e}"])
        return path


def build_profile(well: DoubleWell, alpha: float, resolution: int = 64) -> TransitionProfile:
    """Tabulate ``Psi`` on a graded grid and wrap it for exact inversion."""
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ConfigurationError(f"resolution must be an integer >= {MIN_RESOLUTION}")
    _check_domain(well, alpha)
    if alpha == well.b:
        # already at the well: constant profile, zero hitting time
        return TransitionProfile(well, float(alpha), 0.0, np.zeros(1), np.full(1, well.b), None)
    span = well.b - alpha
    uniform = alpha + span * np.linspace(0.0, 1.0, resolution + 1)
    # geometric refinement toward b where z approaches the well
    graded = well.b - span * np.geomspace(2.0 ** -40, 1.0 / resolution, 40)
    zk = np.unique(np.concatenate([uniform, graded]))
    zk[0], zk[-1] = alpha, well.b
    tk = np.concatenate([[0.0], np.atleast_1d(psi(well, alpha, zk[1:]))])
    keep = np.concatenate([[True], np.diff(tk) > 0])
    tk, zk = tk[keep], zk[keep]
    return TransitionProfile(well, float(alpha), float(tk[-1]), tk, zk, PchipInterpolator(tk, zk))


def tail_integral(well: DoubleWell, alpha: float) -> float:
    """``int_alpha^b d_W(z, b) / sqrt(W(z)) dz``, the time-integrated distance to b."""
    _check_domain(well, alpha)
    if alpha == well.b:
        return 0.0

    def f(xa, xb):
        return well.dist_to_b_offsets(xa, xb) * well.w_offsets(xa, xb) ** -0.5

    return float(well.integrate(f, alpha, well.b))


def tail_integral_time(profile: TransitionProfile, rtol: float = 1e-11,
                       max_panels: int = 512) -> float:
    """Same quantity in the time variable: ``2 int_0^T s W(z(s)) ds``.

    Follows from integrating ``d_W(z(s), b) = 2 int_s^T W(z)`` by parts; it
    only uses the inverted profile, not the distance function.
    """
    well, T = profile.well, profile.hitting_time
    if T == 0.0:
        return 0.0

    def g(s):
        return 2.0 * s * well.w(profile.z(s))

    n, prev = 2, composite_gl(g, 0.0, T, 2)
    while True:
        n *= 2
        cur = composite_gl(g, 0.0, T, n)
        if abs(cur - prev) <= rtol * abs(cur) or n >= max_panels:
            return float(cur)
        prev = cur
