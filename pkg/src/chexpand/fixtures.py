"""Reference values for the canonical well from high-precision Beta-function forms.

For ``W = (s (1-s))**(1+q)`` with ``q = 1/2``:

* ``d_W(0, 1) = 2 B(7/4, 7/4)``
* ``T(alpha) = int_alpha^1 (s (1-s))**(-3/4) ds``, an incomplete ``B(1/4, 1/4)``
* ``tail(alpha) = int_alpha^1 d_W(z, 1) / sqrt(W(z)) dz`` with
  ``d_W(z, 1) = 2 int_z^1 (s (1-s))**(3/4) ds``.

The tail integrand has ``z**(-3/4)`` and ``(1-z)**(1)`` end behaviour; the
substitutions ``z = u**4`` and ``1 - z = u**4`` make it smooth on each half.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

FIXTURE_VERSION = 1
CANONICAL = {"a": 0.0, "b": 1.0, "q": 0.5, "scale": 1.0}
ALPHAS_TIME = ("0.0", "0.2", "0.5")
ALPHAS_TAIL = ("0.0", "0.2", "0.5")


def _oracle_values(dps: int) -> dict:
    import mpmath as mp

    mp.mp.dps = dps
    e = mp.mpf(7) / 4
    half = mp.mpf(1) / 2

    def upper(z):
        # int_z^1 (s(1-s))^(3/4) ds
        return mp.betainc(e, e, z, 1)

    def hitting(alpha):
        return mp.betainc(mp.mpf(1) / 4, mp.mpf(1) / 4, alpha, 1)

    def tail(alpha):
        alpha = mp.mpf(alpha)
        total = mp.mpf(0)
        if alpha < half:
            # z = u^4 on [alpha, 1/2]
            g = lambda u: 8 * upper(u ** 4) / (1 - u ** 4) ** (mp.mpf(3) / 4)
            total += mp.quad(g, [alpha ** (mp.mpf(1) / 4), half ** (mp.mpf(1) / 4)])
            top = half
        else:
            top = alpha
        # 1 - z = u^4 on [top, 1]
        h = lambda u: 8 * upper(1 - u ** 4) / (1 - u ** 4) ** (mp.mpf(3) / 4)
        total += mp.quad(h, [0, (1 - top) ** (mp.mpf(1) / 4)])
        return total

    vals = {
        "geodesic_distance_a_b": 2 * mp.beta(e, e),
        "hitting_time": {a: hitting(mp.mpf(a)) for a in ALPHAS_TIME},
        "tail_integral": {a: tail(a) for a in ALPHAS_TAIL},
    }
    return vals


def _flatten(vals: dict) -> dict:
    out = {}
    for k, v in vals.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                out[f"{k}[{kk}]"] = vv
        else:
            out[k] = v
    return out


def regenerate(dps: int = 30, agree: float = 1e-20) -> dict:
    """Oracle values at ``dps`` digits, confirmed by a second pass at ``2 dps``."""
    import mpmath as mp

    first, second = _oracle_values(dps), _oracle_values(2 * dps)
    for key, v1 in _flatten(first).items():
        v2 = _flatten(second)[key]
        if abs(v1 - v2) > agree * max(1, abs(v2)):
            raise ArithmeticError(f"oracle passes disagree for {key}: {v1} vs {v2}")

    def to_float(v):
        return {k: to_float(x) for k, x in v.items()} if isinstance(v, dict) else float(mp.mpf(v))

    return {"version": FIXTURE_VERSION, "well": dict(CANONICAL), "dps": dps,
            "values": to_float(second)}


def load_fixtures(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("chexpand").joinpath("data/fixtures.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    if data.get("version") != FIXTURE_VERSION:
        raise ValueError(f"fixture version {data.get('version')} != {FIXTURE_VERSION}")
    return data


def write_fixtures(data: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def is_canonical(well) -> bool:
    return (well.a, well.b, well.q, well.scale) == tuple(CANONICAL.values())
