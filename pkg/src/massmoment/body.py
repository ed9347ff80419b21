"""Reference bodies, their Lagrangian quadrature clouds, and sub-part selectors.

``grid_midpoint`` applies the product midpoint rule in each shape's natural
coordinates (Cartesian for boxes, spherical for balls, cylindrical for
cylinders), so nodes always lie strictly inside the body and smooth integrands
converge at second order. ``monte_carlo`` draws points uniformly by rejection
from the bounding box and gives every accepted point the weight volume/count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GeometryError
from .geometry import Axis, _unit, _vec3

# Sub-part candidates must capture a node of a grid this fine.
SUBPART_PROBE_RESOLUTION = 16


def _midpoints(lo: float, hi: float, n: int) -> tuple[np.ndarray, float]:
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


# shapes

@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec3(self.lo, "min corner"), _vec3(self.hi, "max corner")
        if np.any(hi <= lo):
            raise GeometryError(f"box needs min < max on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def bounding_box(self):
        return self.lo, self.hi

    def contains(self, X):
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.lo) & (X <= self.hi), axis=-1)

    def grid(self, n: int):
        axes = [_midpoints(self.lo[k], self.hi[k], n) for k in range(3)]
        g = np.meshgrid(*(a for a, _ in axes), indexing="ij")
        pts = np.stack([c.reshape(-1) for c in g], axis=-1)
        w = np.full(len(pts), axes[0][1] * axes[1][1] * axes[2][1])
        return pts, w

    def to_dict(self):
        return {"shape": "box", "min": self.lo.tolist(), "max": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        if not self.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, X):
        d = np.asarray(X, dtype=float) - self.center
        return np.einsum("...i,...i->...", d, d) <= self.radius**2

    def _spherical(self, n: int, theta_max: float, pole: np.ndarray):
        r, dr = _midpoints(0.0, self.radius, n)
        th, dth = _midpoints(0.0, theta_max, n)
        ph, dph = _midpoints(0.0, 2.0 * math.pi, n)
        R, TH, PH = (a.reshape(-1) for a in np.meshgrid(r, th, ph, indexing="ij"))
        e1, e2 = Axis(pole).frame()
        st = np.sin(TH)
        local = (R * st * np.cos(PH))[:, None] * e1 + (R * st * np.sin(PH))[:, None] * e2 \
            + (R * np.cos(TH))[:, None] * pole
        w = R * R * st * dr * dth * dph
        return self.center + local, w

    def grid(self, n: int):
        return self._spherical(n, math.pi, np.array([0.0, 0.0, 1.0]))

    def to_dict(self):
        return {"shape": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class HalfBall(Ball):
    """The half of a ball on the side ``normal`` points to."""

    normal: np.ndarray = (0.0, 0.0, 1.0)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "normal", _unit(self.normal, "normal"))

    @property
    def volume(self) -> float:
        return 2.0 / 3.0 * math.pi * self.radius**3

    def contains(self, X):
        d = np.asarray(X, dtype=float) - self.center
        return super().contains(X) & (d @ self.normal >= 0.0)

    def grid(self, n: int):
        return self._spherical(n, math.pi / 2, self.normal)

    def to_dict(self):
        d = super().to_dict()
        d.update(shape="half_ball", normal=self.normal.tolist())
        return d


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Solid circular cylinder; ``axis.point`` is its centre."""

    axis: Axis
    radius: float
    half_height: float

    def __post_init__(self):
        if not (self.radius > 0 and self.half_height > 0):
            raise GeometryError("cylinder radius and half_height must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "half_height", float(self.half_height))

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * 2.0 * self.half_height

    def bounding_box(self):
        n = self.axis.direction
        ext = self.half_height * np.abs(n) + self.radius * np.sqrt(np.clip(1.0 - n * n, 0.0, None))
        return self.axis.point - ext, self.axis.point + ext

    def contains(self, X):
        d = np.asarray(X, dtype=float) - self.axis.point
        along = d @ self.axis.direction
        return (np.abs(along) <= self.half_height) & (self.axis.squared_distance(X) <= self.radius**2)

    def grid(self, n: int):
        r, dr = _midpoints(0.0, self.radius, n)
        ph, dph = _midpoints(0.0, 2.0 * math.pi, n)
        z, dz = _midpoints(-self.half_height, self.half_height, n)
        R, PH, Z = (a.reshape(-1) for a in np.meshgrid(r, ph, z, indexing="ij"))
        e1, e2 = self.axis.frame()
        pts = self.axis.point + (R * np.cos(PH))[:, None] * e1 + (R * np.sin(PH))[:, None] * e2 \
            + Z[:, None] * self.axis.direction
        return pts, R * dr * dph * dz

    def to_dict(self):
        return {"shape": "cylinder", "axis": self.axis.to_dict(), "radius": self.radius,
                "half_height": self.half_height}


Shape = Box | Ball | HalfBall | Cylinder


# densities

@dataclass(frozen=True)
class ConstantDensity:
    value: float = 1.0

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return np.full(X.shape[:-1], float(self.value))

    def lower_bound(self, shape) -> float:
        return float(self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True, eq=False)
class AffineDensity:
    """``rho(X) = c0 + gradient . X``."""

    c0: float
    gradient: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gradient", _vec3(self.gradient, "gradient"))

    def __call__(self, X):
        return self.c0 + np.asarray(X, dtype=float) @ self.gradient

    def lower_bound(self, shape) -> float:
        lo, hi = shape.bounding_box()
        # a linear function attains its minimum over a box at a corner
        corner = np.where(self.gradient >= 0, lo, hi)
        return float(self(corner))

    def to_dict(self):
        return {"kind": "affine", "c0": self.c0, "gradient": self.gradient.tolist()}


@dataclass(frozen=True)
class RadialDensity:
    """``rho(X) = sum_k coefficients[k] * |X - center|**k``."""

    center: tuple = (0.0, 0.0, 0.0)
    coefficients: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in _vec3(self.center, "center")))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise GeometryError("radial density needs at least one coefficient")

    def __call__(self, X):
        d = np.asarray(X, dtype=float) - np.array(self.center)
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        return np.polynomial.polynomial.polyval(r, self.coefficients)

    def lower_bound(self, shape) -> float:
        c = np.array(self.center)
        if isinstance(shape, Ball):
            far = float(np.linalg.norm(shape.center - c)) + shape.radius
        else:
            lo, hi = shape.bounding_box()
            far = float(np.linalg.norm(np.maximum(np.abs(lo - c), np.abs(hi - c))))
        poly = np.polynomial.Polynomial(self.coefficients)
        cand = [0.0, far] + [float(z.real) for z in poly.deriv().roots()
                             if abs(z.imag) < 1e-12 and 0.0 <= z.real <= far]
        return float(min(poly(r) for r in cand))

    def to_dict(self):
        return {"kind": "radial", "center": list(self.center), "coefficients": list(self.coefficients)}


DensityField = ConstantDensity | AffineDensity | RadialDensity


@dataclass(frozen=True, eq=False)
class ReferenceBody:
    shape: Shape
    density: DensityField = field(default_factory=ConstantDensity)

    def __post_init__(self):
        if not self.shape.volume > 0:
            raise GeometryError("body must have positive volume")
        if not self.density.lower_bound(self.shape) > 0:
            raise GeometryError("density must be strictly positive on the body")

    @property
    def volume(self) -> float:
        return self.shape.volume

    def to_dict(self):
        return {"shape": self.shape.to_dict(), "density": self.density.to_dict()}


# clouds

@dataclass(frozen=True)
class GridMidpoint:
    resolution: int = 48

    def to_dict(self):
        return {"generator": "grid_midpoint", "resolution": self.resolution}


@dataclass(frozen=True)
class MonteCarlo:
    count: int
    seed: int = 0

    def to_dict(self):
        return {"generator": "monte_carlo", "count": self.count, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class MaterialPointCloud:
    reference_positions: np.ndarray
    weights: np.ndarray
    reference_densities: np.ndarray
    generator: GridMidpoint | MonteCarlo
    part_tags: np.ndarray | None = None

    def __post_init__(self):
        for name in ("reference_positions", "weights", "reference_densities"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.part_tags is not None:
            tags = np.asarray(self.part_tags)
            if tags.shape != self.weights.shape:
                raise ValueError("part_tags must have one label per point")
            tags.setflags(write=False)
            object.__setattr__(self, "part_tags", tags)

    def __len__(self) -> int:
        return len(self.weights)

    def with_tags(self, labeler: Callable[[np.ndarray], np.ndarray]) -> MaterialPointCloud:
        """Copy of the cloud labelled by ``labeler(reference_positions)``."""
        return MaterialPointCloud(self.reference_positions, self.weights, self.reference_densities,
                                  self.generator, np.asarray(labeler(self.reference_positions)))


def discretize(body: ReferenceBody, generator: GridMidpoint | MonteCarlo) -> MaterialPointCloud:
    shape = body.shape
    if isinstance(generator, GridMidpoint):
        if generator.resolution < 1:
            raise GeometryError("grid resolution must be >= 1")
        pts, w = shape.grid(int(generator.resolution))
    elif isinstance(generator, MonteCarlo):
        if generator.count < 1:
            raise GeometryError("monte carlo count must be >= 1")
        rng = np.random.default_rng(generator.seed)
        lo, hi = shape.bounding_box()
        accepted, need = [], generator.count
        while need > 0:
            cand = rng.uniform(lo, hi, size=(max(2 * need, 64), 3))
            cand = cand[shape.contains(cand)][:need]
            accepted.append(cand)
            need -= len(cand)
        pts = np.concatenate(accepted)
        w = np.full(len(pts), shape.volume / generator.count)
    else:
        raise TypeError(f"unknown generator {generator!r}")
    rho = body.density(pts)
    if np.any(rho <= 0):
        raise GeometryError("density is not strictly positive at every node")
    return MaterialPointCloud(pts, w, rho, generator)


# sub-parts

@dataclass(frozen=True)
class WholeBody:
    def mask(self, X):
        return np.ones(len(X), dtype=bool)

    def to_dict(self):
        return {"kind": "whole"}


@dataclass(frozen=True, eq=False)
class SubBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec3(self.lo, "lo"))
        object.__setattr__(self, "hi", _vec3(self.hi, "hi"))

    def mask(self, X):
        return np.all((X >= self.lo) & (X <= self.hi), axis=-1)

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def to_dict(self):
        return {"kind": "box", "min": self.lo.tolist(), "max": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class SubBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))

    def mask(self, X):
        d = X - self.center
        return np.einsum("...i,...i->...", d, d) <= self.radius**2

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius**3

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class TagSelector:
    tag: object

    def mask(self, X, tags=None):
        if tags is None:
            raise ValueError("cloud carries no part tags")
        return np.asarray(tags) == self.tag

    def to_dict(self):
        return {"kind": "tag", "tag": self.tag}


@dataclass(frozen=True)
class SubPart:
    """A Lagrangian part: its points are chosen from reference positions only."""

    selector: WholeBody | SubBox | SubBall | TagSelector
    id: str = "whole"

    def mask(self, cloud: MaterialPointCloud) -> np.ndarray:
        if isinstance(self.selector, TagSelector):
            return self.selector.mask(cloud.reference_positions, cloud.part_tags)
        return self.selector.mask(cloud.reference_positions)

    def to_dict(self):
        return {"id": self.id, **self.selector.to_dict()}


WHOLE_BODY = SubPart(WholeBody(), "whole")


def sample_subparts(body: ReferenceBody, count: int, seed: int = 0) -> list[SubPart]:
    """Whole body first, then ``count - 1`` random sub-boxes and sub-balls.

    Each random part has between 5% and 50% of the bounding-box volume, lies
    inside the bounding box, and contains at least one node of a
    ``SUBPART_PROBE_RESOLUTION`` grid cloud of the body.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = body.shape.bounding_box()
    L = hi - lo
    bbox_vol = float(np.prod(L))
    probe, _ = body.shape.grid(SUBPART_PROBE_RESOLUTION)
    parts = [WHOLE_BODY]
    while len(parts) < count:
        frac = rng.uniform(0.05, 0.5)
        if rng.random() < 0.5:
            g = frac ** (1 / 3) * np.exp(rng.uniform(-0.3, 0.3, 3))
            g *= (frac / np.prod(g)) ** (1 / 3)
            if np.any(g > 1.0):
                continue
            side = g * L
            corner = lo + rng.random(3) * (L - side)
            sel = SubBox(corner, corner + side)
        else:
            radius = (frac * bbox_vol * 3.0 / (4.0 * math.pi)) ** (1 / 3)
            if 2 * radius > L.min():
                continue
            center = lo + radius + rng.random(3) * (L - 2 * radius)
            sel = SubBall(center, radius)
        if not np.any(sel.mask(probe)):
            continue
        parts.append(SubPart(sel, f"part{len(parts)}"))
    return parts
