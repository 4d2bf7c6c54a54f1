"""Composite Gauss-Legendre rules for integrands with power-law behaviour at
the two wells of a double-well potential.

Near a well the integrands used in this package behave like
``dist**p * smooth`` with ``p = +-(1+q)/2``.  The substitution
``dist = u**m`` with ``m = 2/(1-q)`` turns the leading factor into a
non-negative integer power of ``u`` (exactly so for ``p = -(1+q)/2``), after
which plain Gauss-Legendre panels converge geometrically.

Integrands are called as ``f(xa, xb)`` with ``xa = rho - a`` and
``xb = b - rho`` so that evaluations next to a well never lose the offset to
cancellation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

GL_ORDER = 20


@lru_cache(maxsize=16)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def _panel_rule(n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ref = edges[:-1, None] + half * (x[None, :] + 1.0)
    return ref.ravel(), (half * w[None, :]).ravel()


def composite_gl(f, lo, hi, n_panels: int, order: int = GL_ORDER) -> np.ndarray:
    """Integrate ``f`` over each ``[lo[k], hi[k]]`` with uniform panels.

    ``lo`` and ``hi`` broadcast against each other; ``f`` receives an array
    with one trailing quadrature axis.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    ref, ref_w = _panel_rule(n_panels, order)
    pts = lo[..., None] + (hi - lo)[..., None] * ref
    return np.sum(f(pts) * ref_w, axis=-1) * (hi - lo)


class WellIntegrator:
    """Signed integrals ``int_lo^hi f`` over sub-intervals of ``[a, b]``.

    The interval is cut into ``[a, a+L/4]``, ``[a+L/4, b-L/4]`` and
    ``[b-L/4, b]``; the outer pieces use the well substitution.  Panel counts
    double until every entry changes by less than ``rtol`` (relative).
    """

    def __init__(self, a: float, b: float, q: float, rtol: float = 1e-13,
                 max_panels: int = 256):
        self.a = float(a)
        self.b = float(b)
        self.length = self.b - self.a
        self.m = 2.0 / (1.0 - q)
        self.rtol = rtol
        self.max_panels = max_panels

    def _pieces(self, f, xa_lo, xa_hi, n_panels):
        # work in xa = rho - a coordinates; cuts at L/4 and 3L/4
        L, m = self.length, self.m
        cut_lo, cut_hi = 0.25 * L, 0.75 * L
        total = np.zeros(np.broadcast(xa_lo, xa_hi).shape)

        x0 = np.clip(xa_lo, 0.0, cut_lo)
        x1 = np.clip(xa_hi, 0.0, cut_lo)
        mask = x1 > x0
        if np.any(mask):
            def g(u):
                xa = u ** m
                return f(xa, L - xa) * m * u ** (m - 1.0)
            total += np.where(mask, composite_gl(g, x0 ** (1 / m), x1 ** (1 / m), n_panels), 0.0)

        x0 = np.clip(xa_lo, cut_lo, cut_hi)
        x1 = np.clip(xa_hi, cut_lo, cut_hi)
        mask = x1 > x0
        if np.any(mask):
            total += np.where(mask, composite_gl(lambda xa: f(xa, L - xa), x0, x1, n_panels), 0.0)

        # right piece in xb = b - rho; orientation flips
        y0 = L - np.clip(xa_hi, cut_hi, L)
        y1 = L - np.clip(xa_lo, cut_hi, L)
        mask = y1 > y0
        if np.any(mask):
            def g(u):
                xb = u ** m
                return f(L - xb, xb) * m * u ** (m - 1.0)
            total += np.where(mask, composite_gl(g, y0 ** (1 / m), y1 ** (1 / m), n_panels), 0.0)
        return total

    def integrate_offsets(self, f, xa_lo, xa_hi):
        """Signed integral between two points given by their offsets from ``a``."""
        xa_lo = np.asarray(xa_lo, float)
        xa_hi = np.asarray(xa_hi, float)
        sign = np.where(xa_hi < xa_lo, -1.0, 1.0)
        left = np.clip(np.minimum(xa_lo, xa_hi), 0.0, self.length)
        right = np.clip(np.maximum(xa_lo, xa_hi), 0.0, self.length)
        n = 1
        prev = self._pieces(f, left, right, n)
        while True:
            n *= 2
            cur = self._pieces(f, left, right, n)
            scale = np.maximum(np.abs(cur), 1e-15 * np.max(np.abs(cur), initial=1e-300))
            if np.all(np.abs(cur - prev) <= self.rtol * scale) or n >= self.max_panels:
                break
            prev = cur
        out = sign * cur
        return out if out.ndim else float(out)

    def integrate(self, f, lo, hi):
        """Signed integral between points ``lo`` and ``hi`` of ``[a, b]``."""
        return self.integrate_offsets(f, np.asarray(lo, float) - self.a,
                                      np.asarray(hi, float) - self.a)
