"""Reduced densities, mass-moment parameters and the inertia septet.

A mass-moment parameter is ``P(part, t) = integral over the current placement
of rho * p dv``. It is evaluated by pulling back to the reference cloud:
``sum_a w_a rho(x_a, t) p(x_a, t) J(X_a, t)``. Sums go through ``math.fsum``,
which is correctly rounded and therefore independent of summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .body import WHOLE_BODY, MaterialPointCloud, SubPart
from .evolution import EvolvedDensity, MassConsistent
from .geometry import Axis, GeometricEntity, Plane, Point
from .motion import Motion, placement

MAX_POLYNOMIAL_DEGREE = 4


# reduced densities

@dataclass(frozen=True)
class ConstantOne:
    """``p = 1``: the parameter is the mass."""

    kind = "constant_one"
    time_independent = True

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1])

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class SquaredDistance:
    """``p = d(x, entity)**2`` for a fixed point, plane or axis."""

    entity: GeometricEntity
    kind = "squared_distance"
    time_independent = True

    def __call__(self, x, t=0.0):
        return self.entity.squared_distance(np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kind": self.kind, "entity": self.entity.to_dict()}


@dataclass(frozen=True)
class CoordinateSquare:
    """``p = x_i**2`` (1-based ``index``)."""

    index: int
    kind = "coordinate_square"
    time_independent = True

    def __post_init__(self):
        if self.index not in (1, 2, 3):
            raise ValueError(f"coordinate index must be 1, 2 or 3, got {self.index}")

    def __call__(self, x, t=0.0):
        c = np.asarray(x, dtype=float)[..., self.index - 1]
        return c * c

    def to_dict(self):
        return {"kind": self.kind, "index": self.index}


@dataclass(frozen=True)
class Polynomial:
    """``p = sum c * x1**a * x2**b * x3**c`` over ``terms = ((a, b, c), coeff), ...``."""

    terms: tuple
    kind = "polynomial"
    time_independent = True

    def __post_init__(self):
        norm = []
        for powers, coeff in self.terms:
            powers = tuple(int(k) for k in powers)
            if len(powers) != 3 or min(powers) < 0:
                raise ValueError(f"bad exponent triple {powers}")
            if sum(powers) > MAX_POLYNOMIAL_DEGREE:
                raise ValueError(f"total degree {sum(powers)} exceeds {MAX_POLYNOMIAL_DEGREE}")
            norm.append((powers, float(coeff)))
        object.__setattr__(self, "terms", tuple(norm))

    def __call__(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for (a, b, c), coeff in self.terms:
            out = out + coeff * x[..., 0] ** a * x[..., 1] ** b * x[..., 2] ** c
        return out

    def to_dict(self):
        return {"kind": self.kind,
                "terms": [{"powers": list(p), "coefficient": c} for p, c in self.terms]}


ReducedDensity = ConstantOne | SquaredDistance | CoordinateSquare | Polynomial


def evaluate_reduced_density(p: ReducedDensity, x, t: float = 0.0):
    return p(x, t)


@dataclass(frozen=True)
class MomentParameter:
    name: str
    reduced_density: ReducedDensity

    def to_dict(self):
        return {"name": self.name, **self.reduced_density.to_dict()}


def mass() -> MomentParameter:
    return MomentParameter("mass", ConstantOne())


def inertia_about(entity: GeometricEntity, name: str | None = None) -> MomentParameter:
    if name is None:
        name = {Point: "I_point", Plane: "I_plane", Axis: "I_axis"}[type(entity)]
    return MomentParameter(name, SquaredDistance(entity))


# evaluation

def pullback(cloud: MaterialPointCloud, motion: Motion, evolved: EvolvedDensity, t: float,
             mask: np.ndarray | None = None):
    """Current positions and the per-node measure ``w * rho(x, t) * J`` of the selected nodes."""
    X = cloud.reference_positions
    w, rho0 = cloud.weights, cloud.reference_densities
    if mask is not None:
        X, w, rho0 = X[mask], w[mask], rho0[mask]
    x, J = placement(motion, X, t)
    rho = evolved(rho0, X, x, J, t)
    return x, w * rho * J


def _fsum(a: np.ndarray) -> float:
    return math.fsum(a.tolist())


def evaluate_moment(P: MomentParameter, cloud: MaterialPointCloud, part: SubPart,
                    motion: Motion, evolved_density: EvolvedDensity | None = None,
                    t: float = 0.0) -> float:
    if evolved_density is None:
        evolved_density = MassConsistent()
    x, measure = pullback(cloud, motion, evolved_density, t, part.mask(cloud))
    return _fsum(measure * P.reduced_density(x, t))


# inertia septet

SEPTET_IDS = ("I_O", "I_x1", "I_x2", "I_x3", "I_Ox1x2", "I_Ox2x3", "I_Ox3x1")

# coefficients in the basis (A, B, C) = (int rho x1^2, int rho x2^2, int rho x3^2)
SEPTET_MATRIX = np.array([
    [1, 1, 1],
    [0, 1, 1],
    [1, 0, 1],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 0],
    [0, 1, 0],
], dtype=float)
SEPTET_MATRIX.setflags(write=False)


@dataclass(frozen=True)
class InertiaSeptet:
    """Point, axis and coordinate-plane moments for the frame ``O x1 x2 x3``."""

    I_O: float
    I_x1: float
    I_x2: float
    I_x3: float
    I_Ox1x2: float
    I_Ox2x3: float
    I_Ox3x1: float

    def values(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def septet_parameters(origin=(0.0, 0.0, 0.0)) -> dict[str, MomentParameter]:
    """The seven septet members as stand-alone moment parameters."""
    o = np.asarray(origin, dtype=float)
    e = np.eye(3)
    return {
        "I_O": MomentParameter("I_O", SquaredDistance(Point(o))),
        "I_x1": MomentParameter("I_x1", SquaredDistance(Axis(e[0], o))),
        "I_x2": MomentParameter("I_x2", SquaredDistance(Axis(e[1], o))),
        "I_x3": MomentParameter("I_x3", SquaredDistance(Axis(e[2], o))),
        "I_Ox1x2": MomentParameter("I_Ox1x2", SquaredDistance(Plane(e[2], o[2]))),
        "I_Ox2x3": MomentParameter("I_Ox2x3", SquaredDistance(Plane(e[0], o[0]))),
        "I_Ox3x1": MomentParameter("I_Ox3x1", SquaredDistance(Plane(e[1], o[1]))),
    }


def inertia_septet(cloud: MaterialPointCloud, motion: Motion,
                   evolved_density: EvolvedDensity | None = None, t: float = 0.0,
                   origin=(0.0, 0.0, 0.0), part: SubPart = WHOLE_BODY) -> InertiaSeptet:
    if evolved_density is None:
        evolved_density = MassConsistent()
    x, measure = pullback(cloud, motion, evolved_density, t, part.mask(cloud))
    q = (x - np.asarray(origin, dtype=float)) ** 2
    s1, s2, s3 = q[:, 0], q[:, 1], q[:, 2]
    return InertiaSeptet(
        I_O=_fsum(measure * (s1 + s2 + s3)),
        I_x1=_fsum(measure * (s2 + s3)),
        I_x2=_fsum(measure * (s1 + s3)),
        I_x3=_fsum(measure * (s1 + s2)),
        I_Ox1x2=_fsum(measure * s3),
        I_Ox2x3=_fsum(measure * s1),
        I_Ox3x1=_fsum(measure * s2),
    )


@dataclass(frozen=True)
class IdentityResult:
    id: str
    residual: float
    passed: bool


def check_identities(s: InertiaSeptet, tol: float = 1e-12) -> list[IdentityResult]:
    """Residuals of the eleven exact linear relations among the septet.

    Each passes iff ``|residual| <= tol * (1 + |I_O|)``.
    """
    ax = {1: s.I_x1, 2: s.I_x2, 3: s.I_x3}
    pl = {frozenset((1, 2)): s.I_Ox1x2, frozenset((2, 3)): s.I_Ox2x3,
          frozenset((3, 1)): s.I_Ox3x1}

    def plane(i, j):
        return pl[frozenset((i, j))]

    rows = [
        ("point_half_axis_sum", s.I_O - 0.5 * (s.I_x1 + s.I_x2 + s.I_x3)),
        ("point_plane_sum", s.I_O - (s.I_Ox1x2 + s.I_Ox2x3 + s.I_Ox3x1)),
    ]
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        rows.append((f"point_axis_plane_x{i}", s.I_O - (ax[i] + plane(j, k))))
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        rows.append((f"axis_plane_sum_x{i}", ax[i] - (plane(i, j) + plane(i, k))))
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        rows.append((f"plane_axis_combo_x{i}x{j}", plane(i, j) - 0.5 * (ax[i] + ax[j] - ax[k])))
    bound = tol * (1.0 + abs(s.I_O))
    return [IdentityResult(name, float(r), abs(r) <= bound) for name, r in rows]
