"""Run configuration: YAML file, schema validation, defaults and builders."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import yaml

from chexpand.errors import ConfigurationError
from chexpand.expansion import BetaSchedule
from chexpand.geometry2d import BoundaryDatum, ComponentDatum, Domain
from chexpand.potential import DoubleWell
from chexpand.setup1d import CELLS_PER_EPS, Weight
from chexpand.sweep import Scenario1D, Schedule

OUTPUT_ENV = "CHEXPAND_OUTPUT_DIR"

DEFAULTS = {
    "potential": {"a": 0.0, "b": 1.0, "q": 0.5, "scale": 1.0},
    "profile": {"alpha": 0.0, "resolution": 64, "points": 401, "fixture_tolerance": 1e-9},
    "weight": {"length": 0.5, "coeffs": [1.0, 0.3]},
    "boundary": {"alpha": 0.2, "alpha_eps": {"coeff": 0.0, "power": 1.0},
                 "beta_eps": {"coeff": 0.0, "power": 1.0},
                 "alpha_minus": 0.1, "kappa0": -1.0, "min_bound": 0.05},
    "domain": {"kind": "annulus", "r0": 0.5, "r1": 1.5},
    "datum": {"outer": {"kind": "constant", "value": 1.0},
              "inner": {"kind": "constant", "value": 0.0}},
    "expansion": {"boundary_resolution": 64, "tube_factor": 0.25, "assumed_order": None,
                  "tolerance": 0.03, "beta": {"kind": "exponential", "constant": 1.0, "rate": 2.0},
                  "mollify": None},
    "sweep": {"eps": [0.04, 0.02, 0.01, 0.005], "cells_per_eps": CELLS_PER_EPS, "refine": True},
    "output": {"dir": "chexpand-out"},
    "seed": 0,
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_schedule = {"type": "object", "additionalProperties": False,
             "properties": {"coeff": _num, "power": _pos}}
_component = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "fourier", "arc"]},
        "value": _num, "c0": _num,
        "cos": {"type": "array", "items": _num}, "sin": {"type": "array", "items": _num},
        "inside": _num, "outside": _num, "start": _num, "stop": _num,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "potential": {"type": "object", "additionalProperties": False,
                      "properties": {"a": _num, "b": _num, "q": _pos, "scale": _pos}},
        "profile": {"type": "object", "additionalProperties": False,
                    "properties": {"alpha": _num, "resolution": {"type": "integer", "minimum": 8},
                                   "points": {"type": "integer", "minimum": 2},
                                   "fixture_tolerance": _pos}},
        "weight": {"type": "object", "additionalProperties": False,
                   "properties": {"length": _pos,
                                  "coeffs": {"type": "array", "items": _num, "minItems": 1}}},
        "boundary": {"type": "object", "additionalProperties": False,
                     "properties": {"alpha": _num, "alpha_eps": _schedule, "beta_eps": _schedule,
                                    "alpha_minus": _num, "kappa0": _num, "min_bound": _num}},
        "domain": {"type": "object", "required": ["kind"], "additionalProperties": False,
                   "properties": {"kind": {"enum": ["disk", "annulus", "star"]},
                                  "radius": _pos, "r0": _pos, "r1": _pos, "c0": _pos,
                                  "cos": {"type": "array", "items": _num},
                                  "sin": {"type": "array", "items": _num}}},
        "datum": {"type": "object", "additionalProperties": _component},
        "expansion": {"type": "object", "additionalProperties": False,
                      "properties": {
                          "boundary_resolution": {"type": "integer", "minimum": 4},
                          "tube_factor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                          "assumed_order": {"type": ["number", "null"], "exclusiveMinimum": 0},
                          "tolerance": _pos,
                          "beta": {"type": "object", "additionalProperties": False,
                                   "properties": {"kind": {"enum": ["exponential", "well"]},
                                                  "constant": _num, "rate": _pos}},
                          "mollify": {"type": ["object", "null"], "additionalProperties": False,
                                      "properties": {"coeff": _pos, "power": _pos}}}},
        "sweep": {"type": "object", "additionalProperties": False,
                  "properties": {"eps": {"type": "array", "items": _pos, "minItems": 2},
                                 "cells_per_eps": {"type": "integer", "minimum": CELLS_PER_EPS},
                                 "refine": {"type": "boolean"}}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"dir": {"type": "string"}}},
        "seed": {"type": "integer"},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "datum":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, raw: dict | None) -> "RunConfig":
        raw = raw or {}
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigurationError(f"config error at {where}: {exc.message}") from None
        merged = _merge(DEFAULTS, raw)
        if "datum" not in raw and merged["domain"]["kind"] != "annulus":
            merged["datum"] = {"boundary": {"kind": "constant", "value": merged["potential"]["b"]}}
        cfg = cls(merged)
        cfg.well()  # surface potential errors at load time
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike | None) -> "RunConfig":
        if path is None:
            return cls.from_dict({})
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"malformed YAML in {path}: {exc}") from None
        if raw is not None and not isinstance(raw, dict):
            raise ConfigurationError("config root must be a mapping")
        return cls.from_dict(raw)

    def section(self, name: str):
        return self.data[name]

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=False)

    def output_dir(self, command: str) -> Path:
        root = os.environ.get(OUTPUT_ENV) or self.data["output"]["dir"]
        return Path(root) / command

    # -- builders ----------------------------------------------------------

    def well(self) -> DoubleWell:
        p = self.data["potential"]
        try:
            return DoubleWell(float(p["a"]), float(p["b"]), float(p["q"]), float(p["scale"]))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    def eps_list(self) -> tuple:
        return tuple(sorted((float(e) for e in self.data["sweep"]["eps"]), reverse=True))

    def weight(self) -> Weight:
        w = self.data["weight"]
        return Weight.polynomial(float(w["length"]), w["coeffs"])

    def scenario1d(self) -> Scenario1D:
        b = self.data["boundary"]
        well = self.well()
        alpha = float(b["alpha"])
        sa, sb = b["alpha_eps"], b["beta_eps"]
        return Scenario1D(
            well, self.weight(), alpha, self.eps_list(),
            alpha_schedule=Schedule(alpha, float(sa.get("coeff", 0.0)), float(sa.get("power", 1.0))),
            beta_schedule=Schedule(well.b, float(sb.get("coeff", 0.0)), float(sb.get("power", 1.0))),
            alpha_minus=float(b["alpha_minus"]), kappa0=float(b["kappa0"]),
            cells_per_eps=int(self.data["sweep"]["cells_per_eps"]),
            refine=bool(self.data["sweep"]["refine"]), min_bound=float(b["min_bound"]))

    def domain(self) -> Domain:
        d = self.data["domain"]
        if d["kind"] == "disk":
            return Domain.disk(float(d.get("radius", 1.0)))
        if d["kind"] == "annulus":
            return Domain.annulus(float(d.get("r0", 0.5)), float(d.get("r1", 1.5)))
        if "c0" not in d:
            raise ConfigurationError("star domain needs c0")
        return Domain.star(float(d["c0"]), d.get("cos", ()), d.get("sin", ()))

    def datum(self, domain: Domain | None = None) -> BoundaryDatum:
        domain = domain or self.domain()
        entry = self.data["datum"]
        missing = [n for n in domain.names if n not in entry]
        extra = [n for n in entry if n not in domain.names]
        if missing or extra:
            raise ConfigurationError(
                f"datum must name exactly the components {list(domain.names)}; "
                f"missing {missing}, unknown {extra}")
        parts = tuple(_component_datum(entry[n], n) for n in domain.names)
        b = self.data["boundary"]
        moll = self.data["expansion"].get("mollify")
        width = None
        if moll:
            c, p = float(moll.get("coeff", 1.0)), float(moll.get("power", 1.0))
            width = lambda eps: c * eps ** p
        return BoundaryDatum(parts, float(b["alpha_minus"]), float(b["kappa0"]), width)

    def beta(self) -> BetaSchedule:
        b = self.data["expansion"]["beta"]
        return BetaSchedule(b.get("kind", "exponential"), float(b.get("constant", 1.0)),
                            float(b.get("rate", 2.0)))


def _component_datum(entry: dict, name: str) -> ComponentDatum:
    kind = entry["kind"]
    need = {"constant": ["value"], "fourier": ["c0"], "arc": ["inside", "outside", "start", "stop"]}
    lack = [k for k in need[kind] if k not in entry]
    if lack:
        raise ConfigurationError(f"datum {name}: {kind} needs {lack}")
    if kind == "constant":
        return ComponentDatum.constant(float(entry["value"]))
    if kind == "fourier":
        return ComponentDatum.fourier(float(entry["c0"]), entry.get("cos", ()), entry.get("sin", ()))
    return ComponentDatum.arc(float(entry["inside"]), float(entry["outside"]),
                              float(entry["start"]), float(entry["stop"]))
