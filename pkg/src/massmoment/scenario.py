"""Scenario documents: JSON schema, validation and construction of model objects."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any

import jsonschema
import numpy as np

from .body import (
    AffineDensity, Ball, Box, ConstantDensity, Cylinder, GridMidpoint, HalfBall, MonteCarlo,
    RadialDensity, ReferenceBody,
)
from .errors import MassMomentError, ScenarioError
from .evolution import Explicit, Frozen, MassConsistent
from .geometry import Axis, Plane, Point, entity_from_dict
from .moments import (
    SEPTET_IDS, ConstantOne, CoordinateSquare, MomentParameter, Polynomial, SquaredDistance,
)
from .motion import (
    Composite, Custom, Identity, IncompressibleVortex, RigidRotation, SimpleShear, Translation,
    UniformDilation,
)

SCHEMA_ID = "massmoment.scenario/1"
CHECK_TYPES = ("drift", "material_law", "spatial_law", "two_param", "sphere", "plane",
               "cylinder", "equilibrium", "identities")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec3 = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_axis = {
    "type": "object",
    "properties": {"direction": _vec3, "point": _vec3},
    "required": ["direction"],
    "additionalProperties": False,
}
_tol = {"oneOf": [_pos, {"const": "auto"}]}


def _tagged(tag: str, variants: dict[str, tuple[dict, list[str]]]) -> dict:
    """Object schema dispatching on ``tag`` with per-variant closed property sets."""
    branches = []
    for name, (props, required) in variants.items():
        branches.append({
            "if": {"properties": {tag: {"const": name}}, "required": [tag]},
            "then": {
                "properties": {tag: {"const": name}, **props},
                "required": [tag, *required],
                "additionalProperties": False,
            },
        })
    return {
        "type": "object",
        "properties": {tag: {"enum": list(variants)}},
        "required": [tag],
        "allOf": branches,
    }


MOTION_SCHEMA = _tagged("kind", {
    "identity": ({}, []),
    "translation": ({"direction": _vec3, "speed": _num}, ["direction", "speed"]),
    "rigid_rotation": ({"axis": _axis, "angular_speed": _num}, ["axis", "angular_speed"]),
    "uniform_dilation": ({"rate": _num, "center": _vec3}, ["rate"]),
    "simple_shear": ({"rate": _num, "axes": {"type": "array", "items": {"enum": [1, 2, 3]},
                                            "minItems": 2, "maxItems": 2}}, ["rate"]),
    "incompressible_vortex": ({"axis": _axis, "profile_coefficient": _num, "angular_speed": _num},
                              ["axis", "profile_coefficient"]),
    "composite": ({"motions": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/motion"}}},
                  ["motions"]),
    "custom": ({"expressions": {"type": "array", "items": {"type": "string"},
                                "minItems": 3, "maxItems": 3}}, ["expressions"]),
})

ENTITY_SCHEMA = _tagged("kind", {
    "point": ({"position": _vec3}, ["position"]),
    "plane": ({"normal": _vec3, "offset": _num}, ["normal"]),
    "axis": ({"direction": _vec3, "point": _vec3}, ["direction"]),
})

PARAMETER_SCHEMA = _tagged("kind", {
    "constant_one": ({}, []),
    "squared_distance": ({"entity": {"type": "string"}}, ["entity"]),
    "coordinate_square": ({"index": {"enum": [1, 2, 3]}}, ["index"]),
    "polynomial": ({"terms": {"type": "array", "items": {
        "type": "object",
        "properties": {
            "powers": {"type": "array", "items": {"type": "integer", "minimum": 0},
                       "minItems": 3, "maxItems": 3},
            "coefficient": _num,
        },
        "required": ["powers", "coefficient"],
        "additionalProperties": False,
    }}}, ["terms"]),
})

_common = {"id": {"type": "string"}, "expect": {"type": "boolean"}}
_param_ref = {"type": "string"}
CHECK_SCHEMA = _tagged("type", {
    "drift": ({**_common, "parameter": _param_ref}, ["parameter"]),
    "material_law": ({**_common, "parameter": _param_ref}, ["parameter"]),
    "spatial_law": ({**_common, "parameter": _param_ref}, ["parameter"]),
    "two_param": ({**_common, "parameters": {"type": "array", "items": _param_ref,
                                             "minItems": 2, "maxItems": 2}}, ["parameters"]),
    "sphere": ({**_common, "entity": {"type": "string"}}, ["entity"]),
    "plane": ({**_common, "entity": {"type": "string"}}, ["entity"]),
    "cylinder": ({**_common, "entity": {"type": "string"}}, ["entity"]),
    "equilibrium": ({**_common, "triple": {"type": "array", "items": {"enum": list(SEPTET_IDS)},
                                           "minItems": 3, "maxItems": 3},
                     "origin": {"type": "string"}}, ["triple"]),
    "identities": ({**_common, "origin": {"type": "string"}}, []),
})

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"motion": MOTION_SCHEMA},
    "type": "object",
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "body": _tagged("shape", {
            "box": ({"min": _vec3, "max": _vec3}, ["min", "max"]),
            "ball": ({"center": _vec3, "radius": _num}, ["center", "radius"]),
            "half_ball": ({"center": _vec3, "radius": _num, "normal": _vec3},
                          ["center", "radius", "normal"]),
            "cylinder": ({"axis": _axis, "radius": _num, "half_height": _num},
                         ["axis", "radius", "half_height"]),
        }),
        "density": _tagged("kind", {
            "constant": ({"value": _pos}, ["value"]),
            "affine": ({"c0": _num, "gradient": _vec3}, ["c0", "gradient"]),
            "radial": ({"center": _vec3, "coefficients": {"type": "array", "items": _num,
                                                          "minItems": 1}}, ["coefficients"]),
        }),
        "motion": {"$ref": "#/$defs/motion"},
        "evolved_density": _tagged("kind", {
            "mass_consistent": ({}, []),
            "frozen": ({}, []),
            "explicit": ({"expression": {"type": "string"}}, ["expression"]),
        }),
        "entities": {"type": "object", "additionalProperties": ENTITY_SCHEMA},
        "parameters": {"type": "object", "additionalProperties": PARAMETER_SCHEMA},
        "checks": {"type": "array", "items": CHECK_SCHEMA},
        "time": {
            "type": "object",
            "properties": {"horizon": _pos, "steps": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "cloud": _tagged("generator", {
            "grid_midpoint": ({"resolution": {"type": "integer", "minimum": 1}}, []),
            "monte_carlo": ({"count": {"type": "integer", "minimum": 1}}, ["count"]),
        }),
        "subparts": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "properties": {
                "drift": _tol, "constraint": _tol, "pointwise": _pos, "spatial": _pos,
                "identities": _pos, "fd_step": _pos,
            },
            "additionalProperties": False,
        },
    },
    "required": ["schema", "body", "motion"],
    "additionalProperties": False,
}

DEFAULTS: dict[str, Any] = {
    "name": "",
    "density": {"kind": "constant", "value": 1.0},
    "evolved_density": {"kind": "mass_consistent"},
    "entities": {},
    "parameters": {},
    "checks": [],
    "time": {"horizon": 1.0, "steps": 9},
    "cloud": {"generator": "grid_midpoint", "resolution": 48},
    "subparts": 16,
    "seed": 0,
    "tolerances": {"drift": "auto", "constraint": "auto", "pointwise": 1e-10, "spatial": 1e-6,
                   "identities": 1e-12, "fd_step": 1e-4},
}

_VALIDATOR = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)


# expression compilation for custom motions and explicit densities

def _compile(expressions: list[str], names: str, path: str):
    import sympy

    syms = sympy.symbols(names)
    local = {str(s): s for s in syms}
    try:
        exprs = [sympy.sympify(e, locals=local) for e in expressions]
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ScenarioError(f"cannot parse expression: {exc}", path) from None
    free = set().union(*(e.free_symbols for e in exprs)) - set(syms)
    if free:
        raise ScenarioError(f"unknown symbols {sorted(map(str, free))}; allowed: {names}", path)
    return sympy.lambdify(syms, exprs, "numpy")


def _custom_motion(d: dict, path: str, domain) -> Custom:
    fn = _compile(d["expressions"], "X1 X2 X3 t", path)

    def mapping(X, t):
        X = np.asarray(X, dtype=float)
        cols = fn(X[..., 0], X[..., 1], X[..., 2], t)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), X.shape[:-1]) for c in cols],
                        axis=-1)

    return Custom(mapping=mapping, descriptor=list(d["expressions"]), time_domain=domain)


def build_motion(d: dict, domain=(0.0, math.inf), path: str = "/motion"):
    kind = d["kind"]
    kw = {"time_domain": domain}
    if kind == "identity":
        return Identity(**kw)
    if kind == "translation":
        return Translation(d["direction"], d["speed"], **kw)
    if kind == "rigid_rotation":
        return RigidRotation(Axis(**d["axis"]), d["angular_speed"], **kw)
    if kind == "uniform_dilation":
        return UniformDilation(d["rate"], d.get("center", (0.0, 0.0, 0.0)), **kw)
    if kind == "simple_shear":
        return SimpleShear(d["rate"], tuple(d.get("axes", (1, 2))), **kw)
    if kind == "incompressible_vortex":
        return IncompressibleVortex(Axis(**d["axis"]), d["profile_coefficient"],
                                    d.get("angular_speed", 0.0), **kw)
    if kind == "composite":
        return Composite(tuple(build_motion(m, domain, f"{path}/motions/{i}")
                               for i, m in enumerate(d["motions"])), **kw)
    if kind == "custom":
        return _custom_motion(d, path, domain)
    raise ScenarioError(f"unknown motion kind {kind!r}", path)


def _build_body(doc: dict) -> ReferenceBody:
    b = doc["body"]
    shape = b["shape"]
    if shape == "box":
        s = Box(b["min"], b["max"])
    elif shape == "ball":
        s = Ball(b["center"], b["radius"])
    elif shape == "half_ball":
        s = HalfBall(b["center"], b["radius"], b["normal"])
    else:
        s = Cylinder(Axis(**b["axis"]), b["radius"], b["half_height"])
    d = doc["density"]
    if d["kind"] == "constant":
        rho = ConstantDensity(d["value"])
    elif d["kind"] == "affine":
        rho = AffineDensity(d["c0"], d["gradient"])
    else:
        rho = RadialDensity(d.get("center", (0.0, 0.0, 0.0)), d["coefficients"])
    return ReferenceBody(s, rho)


def _build_evolved(d: dict):
    if d["kind"] == "mass_consistent":
        return MassConsistent()
    if d["kind"] == "frozen":
        return Frozen()
    fn = _compile([d["expression"]], "x1 x2 x3 t", "/evolved_density/expression")

    def rho(x, t):
        return np.asarray(fn(x[..., 0], x[..., 1], x[..., 2], t)[0], dtype=float)

    return Explicit(rho, d["expression"])


def _build_parameter(name: str, d: dict, entities: dict) -> MomentParameter:
    kind = d["kind"]
    if kind == "constant_one":
        return MomentParameter(name, ConstantOne())
    if kind == "squared_distance":
        ref = d["entity"]
        if ref not in entities:
            raise ScenarioError(f"undefined entity {ref!r}", f"/parameters/{name}/entity")
        return MomentParameter(name, SquaredDistance(entities[ref]))
    if kind == "coordinate_square":
        return MomentParameter(name, CoordinateSquare(d["index"]))
    try:
        return MomentParameter(name, Polynomial(tuple((t["powers"], t["coefficient"]) for t in d["terms"])))
    except ValueError as exc:
        raise ScenarioError(str(exc), f"/parameters/{name}/terms") from None


_ENTITY_FOR_CHECK = {"sphere": Point, "plane": Plane, "cylinder": Axis}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario: the resolved document plus the objects built from it."""

    document: dict
    body: ReferenceBody
    generator: GridMidpoint | MonteCarlo
    motion: object
    evolved_density: object
    entities: dict
    parameters: dict
    times: np.ndarray

    @property
    def checks(self) -> list[dict]:
        return self.document["checks"]

    @property
    def tolerances(self) -> dict:
        return self.document["tolerances"]

    @property
    def seed(self) -> int:
        return self.document["seed"]

    def echo(self) -> dict:
        return copy.deepcopy(self.document)

    def with_overrides(self, seed=None, particles=None, tol=None, fd_step=None, times=None) -> Scenario:
        doc = self.echo()
        if seed is not None:
            doc["seed"] = int(seed)
        if particles is not None:
            if doc["cloud"]["generator"] == "monte_carlo":
                doc["cloud"]["count"] = int(particles)
            else:
                doc["cloud"]["resolution"] = max(1, round(int(particles) ** (1.0 / 3.0)))
        if tol is not None:
            doc["tolerances"]["drift"] = float(tol)
            doc["tolerances"]["constraint"] = float(tol)
        if fd_step is not None:
            doc["tolerances"]["fd_step"] = float(fd_step)
        if times is not None:
            doc["time"]["steps"] = int(times)
        return from_dict(doc)


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ScenarioError(f"key {k!r} defined more than once")
        out[k] = v
    return out


def _resolve(doc: dict) -> dict:
    doc = copy.deepcopy(doc)
    for key, default in DEFAULTS.items():
        if key not in doc:
            doc[key] = copy.deepcopy(default)
        elif isinstance(default, dict) and key in ("time", "tolerances"):
            doc[key] = {**default, **doc[key]}
    cloud = doc["cloud"]
    if cloud["generator"] == "grid_midpoint":
        cloud.setdefault("resolution", 48)
    m = doc["motion"]
    doc["motion"] = _resolve_motion(m)
    for i, chk in enumerate(doc["checks"]):
        chk.setdefault("id", f"check{i + 1}")
        chk.setdefault("expect", True)
    return doc


def _resolve_motion(m: dict) -> dict:
    m = dict(m)
    kind = m["kind"]
    if kind in ("rigid_rotation", "incompressible_vortex"):
        m["axis"] = {"point": [0.0, 0.0, 0.0], **m["axis"]}
    if kind == "uniform_dilation":
        m.setdefault("center", [0.0, 0.0, 0.0])
    if kind == "simple_shear":
        m.setdefault("axes", [1, 2])
    if kind == "incompressible_vortex":
        m.setdefault("angular_speed", 0.0)
    if kind == "composite":
        m["motions"] = [_resolve_motion(x) for x in m["motions"]]
    return m


def from_dict(raw: dict) -> Scenario:
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ScenarioError(f"schema violation: {err.message}", path)
    doc = _resolve(raw)

    if doc["cloud"]["generator"] == "monte_carlo" and "seed" not in raw:
        raise ScenarioError("monte_carlo cloud requires an explicit seed", "/seed")
    try:
        body = _build_body(doc)
        entities = {name: entity_from_dict(e) for name, e in doc["entities"].items()}
        parameters = {name: _build_parameter(name, p, entities) for name, p in doc["parameters"].items()}
        horizon = float(doc["time"]["horizon"])
        motion = build_motion(doc["motion"], (0.0, horizon))
        evolved = _build_evolved(doc["evolved_density"])
    except ScenarioError:
        raise
    except (MassMomentError, ValueError) as exc:
        raise ScenarioError(f"semantic error: {exc}") from None

    c = doc["cloud"]
    generator = (GridMidpoint(c["resolution"]) if c["generator"] == "grid_midpoint"
                 else MonteCarlo(c["count"], doc["seed"]))

    seen = set()
    for i, chk in enumerate(doc["checks"]):
        path = f"/checks/{i}"
        if chk["id"] in seen:
            raise ScenarioError(f"duplicate check id {chk['id']!r}", path + "/id")
        seen.add(chk["id"])
        refs = [chk["parameter"]] if "parameter" in chk else list(chk.get("parameters", []))
        for r in refs:
            if r not in parameters:
                raise ScenarioError(f"undefined parameter {r!r}", path)
        for key in ("entity", "origin"):
            if key in chk:
                ref = chk[key]
                if ref not in entities:
                    raise ScenarioError(f"undefined entity {ref!r}", f"{path}/{key}")
                want = _ENTITY_FOR_CHECK.get(chk["type"], Point)
                if not isinstance(entities[ref], want):
                    raise ScenarioError(f"entity {ref!r} must be a {want.__name__.lower()}",
                                        f"{path}/{key}")
        if chk["type"] == "equilibrium" and len(set(chk["triple"])) != 3:
            raise ScenarioError("equilibrium triple must name three distinct moments", path + "/triple")

    from .laws import time_grid

    return Scenario(doc, body, generator, motion, evolved, entities, parameters,
                    time_grid(horizon, int(doc["time"]["steps"])))


def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    return from_dict(raw)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
