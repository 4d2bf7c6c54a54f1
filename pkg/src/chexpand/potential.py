"""Subquadratic double-well potentials and the geodesic distance d_W."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from chexpand.errors import CertificationError, DomainError
from chexpand.quadrature import WellIntegrator

# distances below this are treated as the well itself when evaluating W''
_D2W_FLOOR = 1e-280


@dataclass(frozen=True)
class DoubleWell:
    """Canonical family ``W(s) = scale * |s-a|**(1+q) * |s-b|**(1+q)``.

    Subclasses may override :meth:`w`, :meth:`dw` and :meth:`d2w` to supply a
    different potential with the same wells and growth exponent ``q``.
    """

    a: float = 0.0
    b: float = 1.0
    q: float = 0.5
    scale: float = 1.0
    _integrator: WellIntegrator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"exponent q must lie in (0, 1), got {self.q}")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "_integrator", WellIntegrator(self.a, self.b, self.q))

    @property
    def length(self) -> float:
        return self.b - self.a

    def w(self, s):
        s = np.asarray(s, float)
        e = 1.0 + self.q
        return self.scale * np.abs(s - self.a) ** e * np.abs(s - self.b) ** e

    def dw(self, s):
        s = np.asarray(s, float)
        e = 1.0 + self.q
        xa, xb = s - self.a, s - self.b
        return self.scale * e * (np.sign(xa) * np.abs(xa) ** self.q * np.abs(xb) ** e
                                 + np.abs(xa) ** e * np.sign(xb) * np.abs(xb) ** self.q)

    def d2w(self, s):
        s = np.asarray(s, float)
        q, e = self.q, 1.0 + self.q
        xa = np.maximum(np.abs(s - self.a), _D2W_FLOOR)
        xb = np.maximum(np.abs(s - self.b), _D2W_FLOOR)
        sab = np.sign(s - self.a) * np.sign(s - self.b)
        return self.scale * e * (q * xa ** (q - 1) * xb ** e
                                 + 2 * e * sab * xa ** q * xb ** q
                                 + q * xa ** e * xb ** (q - 1))

    def w_offsets(self, xa, xb):
        """W evaluated at the point with offsets ``xa = s-a`` and ``xb = b-s``."""
        if type(self).w is DoubleWell.w:
            e = 1.0 + self.q
            return self.scale * (np.abs(xa) * np.abs(xb)) ** e
        return self.w(self._point_from_offsets(xa, xb))

    def _point_from_offsets(self, xa, xb):
        xa = np.asarray(xa, float)
        xb = np.asarray(xb, float)
        return np.where(xa <= xb, self.a + xa, self.b - xb)

    def dw_offsets(self, xa, xb):
        """W' at the point with offsets ``xa = s-a >= 0`` and ``xb = b-s >= 0``."""
        if type(self).dw is DoubleWell.dw:
            xa, xb = np.abs(xa), np.abs(xb)
            return self.scale * (1 + self.q) * (xa * xb) ** self.q * (xb - xa)
        return self.dw(self._point_from_offsets(xa, xb))

    def d2w_offsets(self, xa, xb):
        """W'' from offsets; distances are floored so the value stays finite."""
        if type(self).d2w is DoubleWell.d2w:
            q, e = self.q, 1.0 + self.q
            xa = np.maximum(np.abs(xa), _D2W_FLOOR)
            xb = np.maximum(np.abs(xb), _D2W_FLOOR)
            return self.scale * e * (q * xa ** (q - 1) * xb ** e - 2 * e * xa ** q * xb ** q
                                     + q * xa ** e * xb ** (q - 1))
        return self.d2w(self._point_from_offsets(xa, xb))

    # -- integrals -------------------------------------------------------

    def integrate(self, f: Callable, lo, hi):
        """Signed ``int_lo^hi f`` with ``f(xa, xb)`` given in well offsets."""
        return self._integrator.integrate(f, lo, hi)

    def integrate_offsets(self, f: Callable, xa_lo, xa_hi):
        return self._integrator.integrate_offsets(f, xa_lo, xa_hi)

    def _sqrt_w2(self, xa, xb):
        return 2.0 * np.sqrt(self.w_offsets(xa, xb))

    @cached_property
    def c_w(self) -> float:
        """Transition cost ``C_W = d_W(a, b)``."""
        return float(self.integrate_offsets(self._sqrt_w2, 0.0, self.length))

    def dist_to_b(self, s):
        """``d_W(s, b)`` for ``s`` in ``[a, b]``, accurate next to either well."""
        xa = np.asarray(s, float) - self.a
        return self.dist_to_b_offsets(xa, self.length - xa)

    def dist_to_b_offsets(self, xa, xb):
        xa = np.asarray(xa, float)
        xb = np.asarray(xb, float)
        near_a = xa < xb
        out = np.empty(np.broadcast(xa, xb).shape)
        if np.any(near_a):
            out[near_a] = self.c_w - np.atleast_1d(
                self.integrate_offsets(self._sqrt_w2, 0.0, np.broadcast_to(xa, out.shape)[near_a]))
        if np.any(~near_a):
            xb_far = np.broadcast_to(xb, out.shape)[~near_a]
            out[~near_a] = np.atleast_1d(
                self.integrate_offsets(self._sqrt_w2, self.length - xb_far, self.length))
        return out if out.ndim else float(out)


def eval_w(well: DoubleWell, s):
    """Potential value ``W(s)``; zero exactly at the wells."""
    return well.w(s)


def _check_domain(well: DoubleWell, *values):
    for v in values:
        v = np.asarray(v, float)
        if np.any(v < well.a) or np.any(v > well.b) or np.any(np.isnan(v)):
            raise DomainError(f"arguments must lie in [{well.a}, {well.b}]")


def geodesic_distance(well: DoubleWell, r, s):
    """``d_W(r, s) = |int_r^s 2 sqrt(W)|`` by graded Gauss-Legendre panels."""
    _check_domain(well, r, s)
    return np.abs(well.integrate(well._sqrt_w2, r, s))


@dataclass(frozen=True)
class GrowthCertificate:
    sigma: float
    delta: float
    rho: float

    def as_dict(self) -> dict:
        return {"sigma": self.sigma, "delta": self.delta, "rho": self.rho}


def well_inverse(well: DoubleWell, t: float, cert: GrowthCertificate | None = None) -> float:
    """The unique ``s`` in ``[b - delta, b]`` with ``W(s) = t``."""
    if cert is None:
        cert = certify_growth(well)
    if t < 0 or t > cert.rho:
        raise DomainError(f"t={t} outside [0, rho={cert.rho}]")
    if t == 0:
        return well.b
    lo = well.b - cert.delta
    f = lambda x: float(well.w_offsets(well.length - x, x)) - t
    # solve in the offset x = b - s so the tolerance is absolute in s
    x = brentq(f, 0.0, cert.delta, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return max(lo, well.b - x)


def _ratio_slope(dist, ratio, n_inner):
    ld, lr = np.log(dist[:n_inner]), np.log(ratio[:n_inner])
    return np.polyfit(ld, lr, 1)[0]


def certify_growth(well: DoubleWell, n_samples: int = 400,
                   slope_tol: float = 0.05) -> GrowthCertificate:
    """Empirical constants ``(sigma, delta, rho)`` for the growth lemma.

    Samples are spaced geometrically from ``1e-8 * delta`` up to ``delta``
    so that the asymptotic exponent is probed.  A systematic drift of the
    ratio ``W / dist**(1+q)`` across the innermost decades (log-log slope
    above ``slope_tol``) means the potential is not in the subquadratic
    class with the declared ``q``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    q, L = well.q, well.length
    best = None
    for delta in (L / 4, L / 8, L / 16):
        dist = np.geomspace(1e-8 * delta, delta, n_samples)
        ratios = []
        for side in ("a", "b"):
            xa, xb = (dist, L - dist) if side == "a" else (L - dist, dist)
            w_ratio = well.w_offsets(xa, xb) / dist ** (1 + q)
            if abs(_ratio_slope(dist, w_ratio, n_samples // 2)) > slope_tol:
                raise CertificationError(
                    f"W near well {side} does not scale like dist**{1 + q:g}")
            if side == "a":
                dw = well.integrate_offsets(well._sqrt_w2, 0.0, dist)
            else:
                dw = well.integrate_offsets(well._sqrt_w2, L - dist, L)
            ratios += [w_ratio, dw / dist ** ((3 + q) / 2)]
        # W must decrease strictly on [b - delta, b] for the local inverse
        wb = well.w_offsets(L - dist, dist)
        if np.any(np.diff(wb) <= 0):
            continue
        rho = float(wb[-1])
        tt = np.geomspace(1e-12 * rho, rho, n_samples // 4)
        inv = np.array([well_inverse(well, t, GrowthCertificate(1.0, delta, rho)) for t in tt])
        ratios.append((well.b - inv) / tt ** (1 / (1 + q)))
        allr = np.concatenate(ratios)
        if not np.all(np.isfinite(allr)) or np.any(allr <= 0):
            continue
        sigma = min(1.0, float(np.min(allr)), float(1.0 / np.max(allr)))
        # keep strictly inside (0, 1) so every sampled inequality holds
        sigma = math.nextafter(sigma, 0.0) if sigma < 1.0 else 0.999
        if best is None or sigma > best.sigma:
            best = GrowthCertificate(sigma, delta, rho)
        if best.sigma > 0.5:
            break
    if best is None or best.sigma <= 0:
        raise CertificationError("no valid sigma found")
    return best
