"""Fixed spatial entities: points, planes and axes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


def _vec3(v, name: str) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise GeometryError(f"{name} must be a finite 3-vector, got {v!r}")
    a.setflags(write=False)
    return a


def _unit(v, name: str) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise GeometryError(f"{name} must be a finite 3-vector, got {v!r}")
    n = np.linalg.norm(a)
    if n == 0.0:
        raise GeometryError(f"{name} must be nonzero")
    a = a / n
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Point:
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))

    def squared_distance(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.position
        return np.einsum("...i,...i->...", d, d)

    def to_dict(self) -> dict:
        return {"kind": "point", "position": self.position.tolist()}


@dataclass(frozen=True, eq=False)
class Plane:
    """The plane ``{x : normal . x = offset}``; ``normal`` is normalised on construction."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        raw = np.array(self.normal, dtype=float).reshape(-1)
        n = _unit(raw, "normal")
        # keep the plane itself fixed when rescaling the normal
        scale = float(np.linalg.norm(raw))
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset) / scale)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def squared_distance(self, x: np.ndarray) -> np.ndarray:
        s = self.signed_distance(x)
        return s * s

    def to_dict(self) -> dict:
        return {"kind": "plane", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Axis:
    """A line through ``point`` with unit ``direction``."""

    direction: np.ndarray
    point: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit(self.direction, "direction"))
        object.__setattr__(self, "point", _vec3(self.point, "point"))

    def perpendicular(self, x: np.ndarray) -> np.ndarray:
        """Component of ``x - point`` orthogonal to the axis."""
        d = np.asarray(x, dtype=float) - self.point
        along = d @ self.direction
        return d - along[..., None] * self.direction

    def squared_distance(self, x: np.ndarray) -> np.ndarray:
        p = self.perpendicular(x)
        return np.einsum("...i,...i->...", p, p)

    def frame(self) -> tuple[np.ndarray, np.ndarray]:
        """Two unit vectors completing ``direction`` to a right-handed basis."""
        n = self.direction
        helper = np.eye(3)[int(np.argmin(np.abs(n)))]
        e1 = np.cross(n, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return e1, e2

    def to_dict(self) -> dict:
        return {"kind": "axis", "direction": self.direction.tolist(), "point": self.point.tolist()}


GeometricEntity = Point | Plane | Axis

COORDINATE_AXES = (
    Axis((1.0, 0.0, 0.0)),
    Axis((0.0, 1.0, 0.0)),
    Axis((0.0, 0.0, 1.0)),
)


def entity_from_dict(d: dict) -> GeometricEntity:
    kind = d.get("kind")
    if kind == "point":
        return Point(d["position"])
    if kind == "plane":
        return Plane(d["normal"], d.get("offset", 0.0))
    if kind == "axis":
        return Axis(d["direction"], d.get("point", (0.0, 0.0, 0.0)))
    raise GeometryError(f"unknown entity kind {kind!r}")
