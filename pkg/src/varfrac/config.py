"""Run configuration: JSON schema, validation and typed views."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .order_field import GsVariant, OrderField, WeightSpec

__all__ = ["CONFIG_SCHEMA", "TASKS", "ConfigError", "DomainConfig", "SolverConfig", "FunctionSpec",
           "RunConfig", "load_config", "config_hash"]

TASKS = ("solve", "apply", "extend", "penalty_study", "oracle_compare", "poincare",
         "inequality_suite", "convergence_study")

SUITES = ("trace", "improved_trace", "hardy_weighted", "hardy_classical", "seminorm_reduction", "all")

_FUNCTION = {
    "type": "object",
    "properties": {
        "name": {"enum": ["zero", "one", "sin_mode", "bump", "nodal_csv"]},
        "k": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 1, "maxItems": 2}]},
        "amplitude": {"type": "number"},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "path": {"type": "string"},
    },
    "required": ["name"],
    "additionalProperties": False,
}

_BOX = {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                   "minItems": 2, "maxItems": 2},
        "minItems": 1, "maxItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "varfrac run configuration",
    "type": "object",
    "properties": {
        "task": {"enum": list(TASKS)},
        "domain": {
            "type": "object",
            "properties": {
                "N": {"enum": [1, 2]},
                "tau": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "auto"}]},
                "n_x": {"type": "integer", "minimum": 2},
                "n_y": {"type": "integer", "minimum": 2},
                "gamma": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "auto"}]},
                "decay_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "required": ["N", "n_x", "n_y"],
            "additionalProperties": False,
        },
        "order": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["constant", "step", "distance"]},
                "value": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "cells": {"type": "array", "minItems": 1, "items": {
                    "type": "object",
                    "properties": {"box": _BOX, "value": {"type": "number"}},
                    "required": ["box", "value"],
                    "additionalProperties": False}},
                "sigma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "anchors": {"type": "array", "minItems": 1,
                            "items": {"type": "array", "items": {"type": "number"},
                                      "minItems": 1, "maxItems": 2}},
                "power": {"type": "number", "exclusiveMinimum": 0},
                "s_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "s_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "g_variant": {"enum": [g.value for g in GsVariant]},
        "p": {"type": "number", "minimum": 2},
        "rhs": _FUNCTION,
        "data": _FUNCTION,
        "compare": {"enum": ["none", "spectral"]},
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "eig_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "penalty": {
            "type": "object",
            "properties": {"mus": {"type": "array", "minItems": 1,
                                   "items": {"type": "number", "exclusiveMinimum": 0}}},
            "additionalProperties": False,
        },
        "ladder": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
        "taus": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "suite": {"enum": list(SUITES)},
        "n_samples": {"type": "integer", "minimum": 1},
        "sigma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seminorm": {
            "type": "object",
            "properties": {
                "levels": {"type": "integer", "minimum": 4},
                "n_gauss": {"type": "integer", "minimum": 2},
                "outer": {"enum": ["gauss5", "full"]},
            },
            "additionalProperties": False,
        },
        "spectral": {
            "type": "object",
            "properties": {
                "K": {"type": "integer", "minimum": 1},
                "quad_pts": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {"vtk": {"type": "boolean"}, "trace": {"type": "boolean"},
                           "report": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["task", "domain", "order"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """The configuration is unreadable, fails the schema, or is inconsistent."""


@dataclass(frozen=True)
class DomainConfig:
    """Cylinder geometry; ``n_x`` and ``n_y`` count cells, so a mesh has ``n + 1`` nodes per axis."""

    N: int
    n_x: int
    n_y: int
    tau: float | str = "auto"
    gamma: float | str = "auto"
    decay_tol: float = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int | None = None
    eig_tol: float = 1e-10


@dataclass(frozen=True)
class FunctionSpec:
    """Named analytic function on the base (or nodal values from a CSV file)."""

    name: str = "sin_mode"
    k: tuple[int, ...] = (1,)
    amplitude: float = 1.0
    center: tuple[float, ...] | None = None
    radius: float = 0.3
    path: str | None = None

    @classmethod
    def from_dict(cls, d: dict | None, default: str = "sin_mode") -> "FunctionSpec":
        if d is None:
            return cls(name=default)
        k = d.get("k", 1)
        k = (k,) if isinstance(k, int) else tuple(k)
        center = tuple(d["center"]) if "center" in d else None
        return cls(d["name"], k, float(d.get("amplitude", 1.0)), center,
                   float(d.get("radius", 0.3)), d.get("path"))


@dataclass(frozen=True)
class RunConfig:
    task: str
    domain: DomainConfig
    order: OrderField
    g_variant: GsVariant = GsVariant.POINTWISE
    p: float = 2.0
    rhs: FunctionSpec = field(default_factory=FunctionSpec)
    data: FunctionSpec = field(default_factory=FunctionSpec)
    compare: str = "none"
    solver: SolverConfig = field(default_factory=SolverConfig)
    mus: tuple[float, ...] = (1e2, 1e3, 1e4, 1e5, 1e6)
    ladder: tuple[int, ...] = ()
    taus: tuple[float, ...] = ()
    suite: str = "all"
    n_samples: int | None = None
    sigma: float = 0.5
    seminorm: dict = field(default_factory=dict)
    spectral_K: int = 64
    spectral_quad_pts: int = 128
    outputs: dict = field(default_factory=lambda: {"vtk": True, "trace": True, "report": True})
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def spec(self) -> WeightSpec:
        return WeightSpec(self.order, self.g_variant, self.p)


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def parse_config(raw: dict) -> RunConfig:
    """Validate against :data:`CONFIG_SCHEMA` and build a :class:`RunConfig`."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    d = raw["domain"]
    domain = DomainConfig(d["N"], d["n_x"], d["n_y"], d.get("tau", "auto"),
                          d.get("gamma", "auto"), d.get("decay_tol", 1e-8))
    try:
        order = OrderField.from_dict(raw["order"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"order: {exc}") from None
    if order.dim is not None and order.dim != domain.N:
        raise ConfigError(f"order: field dimension {order.dim} does not match domain N={domain.N}")
    s = raw.get("solver", {})
    solver = SolverConfig(s.get("tol", 1e-10), s.get("max_iter"), s.get("eig_tol", 1e-10))
    spectral = raw.get("spectral", {})
    outputs = {"vtk": True, "trace": True, "report": True, **raw.get("outputs", {})}
    cfg = RunConfig(
        task=raw["task"], domain=domain, order=order,
        g_variant=GsVariant(raw.get("g_variant", "pointwise")),
        p=float(raw.get("p", 2.0)),
        rhs=FunctionSpec.from_dict(raw.get("rhs")),
        data=FunctionSpec.from_dict(raw.get("data")),
        compare=raw.get("compare", "none"),
        solver=solver,
        mus=tuple(float(m) for m in raw.get("penalty", {}).get("mus", (1e2, 1e3, 1e4, 1e5, 1e6))),
        ladder=tuple(raw.get("ladder", ())),
        taus=tuple(float(t) for t in raw.get("taus", ())),
        suite=raw.get("suite", "all"),
        n_samples=raw.get("n_samples"),
        sigma=float(raw.get("sigma", 0.5)),
        seminorm=dict(raw.get("seminorm", {})),
        spectral_K=int(spectral.get("K", 64)),
        spectral_quad_pts=int(spectral.get("quad_pts", 128)),
        outputs=outputs,
        seed=int(raw.get("seed", 0)),
        raw=raw,
    )
    if cfg.p != 2.0 and cfg.task not in ("inequality_suite",):
        raise ConfigError("the extension solver supports p = 2 only")
    if (cfg.compare == "spectral" or cfg.task == "oracle_compare") and order.kind.value != "constant":
        raise ConfigError("the spectral oracle needs a constant order")
    if cfg.task == "inequality_suite" and cfg.suite == "improved_trace" and domain.N != 1:
        raise ConfigError("the improved trace suite runs with N = 1 only")
    if cfg.task == "convergence_study" and len(cfg.ladder) < 2:
        raise ConfigError("convergence_study needs a ladder with at least two meshes")
    for fs in (cfg.rhs, cfg.data):
        if fs.name == "nodal_csv" and not fs.path:
            raise ConfigError("nodal_csv functions need a 'path'")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    return parse_config(raw)
