"""Per-particle geometric constraints and the equilibrium criterion.

Under conserved mass, conservation of the moment about a fixed point, plane or
axis is equivalent to every particle keeping its squared distance to that
entity. Each verifier checks the particle-level statement and also runs the
global drift of the matching moment so both sides of the equivalence appear in
one verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body import WHOLE_BODY, MaterialPointCloud, SubPart
from .evolution import EvolvedDensity
from .geometry import Axis, Plane, Point
from .laws import DriftReport, global_drift
from .moments import (
    SEPTET_IDS, SEPTET_MATRIX, MomentParameter, SquaredDistance, mass, septet_parameters,
)
from .motion import Motion

DEFAULT_CONSTRAINT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ConstraintVerdict:
    kind: str  # sphere | plane_family | cylinder | equilibrium | none
    deviation: float
    tolerance: float
    holds: bool
    flags: tuple[str, ...] = ()
    drift: DriftReport | None = None
    details: dict = field(default_factory=dict)

    @property
    def drift_conserved(self) -> bool | None:
        return None if self.drift is None else self.drift.conserved

    @property
    def agrees(self) -> bool | None:
        """Whether particle verdict and global drift verdict coincide."""
        return None if self.drift is None else self.holds == self.drift.conserved

    def to_dict(self):
        d = {"kind": self.kind, "deviation": self.deviation, "tolerance": self.tolerance,
             "holds": self.holds, "flags": list(self.flags)}
        if self.drift is not None:
            d["drift"] = self.drift.to_dict()
            d["agrees"] = self.agrees
        d.update(self.details)
        return d


def _trajectories(cloud: MaterialPointCloud, motion: Motion, times):
    X = cloud.reference_positions
    return X, [motion.place(X, t) for t in times]


def _distance_constraint(kind, entity, cloud, motion, times, tol, evolved, parts, name):
    X, xs = _trajectories(cloud, motion, times)
    d0 = entity.squared_distance(X)
    dev = 0.0
    worst_scaled = 0.0
    for x in xs:
        diff = np.abs(entity.squared_distance(x) - d0)
        dev = max(dev, float(diff.max()))
        worst_scaled = max(worst_scaled, float((diff / (1.0 + d0)).max()))
    P = MomentParameter(name, SquaredDistance(entity))
    drift = global_drift(P, cloud, parts or [WHOLE_BODY], motion, evolved, times, tol)
    flags = []
    # the equivalence presumes conserved mass; say so when the density model breaks it
    if not global_drift(mass(), cloud, [WHOLE_BODY], motion, evolved, times, tol).conserved:
        flags.append("mass_not_conserved")
    if isinstance(entity, Plane):
        s0 = entity.signed_distance(X)
        flipped = any(np.any(np.sign(entity.signed_distance(x)) * np.sign(s0) < 0) for x in xs)
        if flipped:
            flags.append("sign_flip")
    return ConstraintVerdict(kind, dev, tol, worst_scaled <= tol, tuple(flags), drift,
                             {"max_scaled_deviation": worst_scaled})


def verify_sphere_constraint(cloud: MaterialPointCloud, motion: Motion, center: Point, times,
                             tol: float = DEFAULT_CONSTRAINT_TOLERANCE,
                             evolved_density: EvolvedDensity | None = None,
                             parts: list[SubPart] | None = None) -> ConstraintVerdict:
    """Every particle stays on the sphere about ``center`` through its start point."""
    if not isinstance(center, Point):
        center = Point(center)
    return _distance_constraint("sphere", center, cloud, motion, times, tol, evolved_density,
                                parts, "I_point")


def verify_plane_constraint(cloud: MaterialPointCloud, motion: Motion, plane: Plane, times,
                            tol: float = DEFAULT_CONSTRAINT_TOLERANCE,
                            evolved_density: EvolvedDensity | None = None,
                            parts: list[SubPart] | None = None) -> ConstraintVerdict:
    """Every particle keeps its squared distance to ``plane``.

    A particle that crosses to the mirror plane is flagged ``sign_flip``
    rather than counted as a deviation.
    """
    return _distance_constraint("plane_family", plane, cloud, motion, times, tol, evolved_density,
                                parts, "I_plane")


def verify_cylinder_constraint(cloud: MaterialPointCloud, motion: Motion, axis: Axis, times,
                               tol: float = DEFAULT_CONSTRAINT_TOLERANCE,
                               evolved_density: EvolvedDensity | None = None,
                               parts: list[SubPart] | None = None) -> ConstraintVerdict:
    return _distance_constraint("cylinder", axis, cloud, motion, times, tol, evolved_density,
                                parts, "I_axis")


def triple_rank(triple) -> int:
    rows = [SEPTET_IDS.index(m) for m in triple]
    return int(np.linalg.matrix_rank(SEPTET_MATRIX[rows]))


def equilibrium_check(conserved_triple, cloud: MaterialPointCloud, motion: Motion, times,
                      tol: float = DEFAULT_CONSTRAINT_TOLERANCE,
                      evolved_density: EvolvedDensity | None = None,
                      origin=(0.0, 0.0, 0.0),
                      parts: list[SubPart] | None = None) -> ConstraintVerdict:
    """Decide whether three conserved septet moments force the body to stand still.

    Only triples whose coefficient rows have rank 3 license a conclusion.
    A rank-3 triple must also actually be conserved (drift within ``tol``);
    otherwise the verdict is ``none`` with ``hypothesis_violated``. When both
    conditions hold the verdict is ``equilibrium`` and ``holds`` reports
    whether every particle stayed at its reference position.
    """
    triple = tuple(conserved_triple)
    if len(triple) != 3 or len(set(triple)) != 3:
        raise ValueError(f"need three distinct septet ids, got {triple}")
    unknown = [m for m in triple if m not in SEPTET_IDS]
    if unknown:
        raise ValueError(f"unknown septet ids {unknown}; expected some of {SEPTET_IDS}")
    rank = triple_rank(triple)
    details = {"triple": list(triple), "rank": rank}
    if rank < 3:
        return ConstraintVerdict("none", float("nan"), tol, False, ("rank_deficient",),
                                 details=details)

    params = septet_parameters(origin)
    drifts = {m: global_drift(params[m], cloud, parts or [WHOLE_BODY], motion, evolved_density,
                              times, tol) for m in triple}
    details["drifts"] = {m: d.max_relative_drift for m, d in drifts.items()}
    if not all(d.conserved for d in drifts.values()):
        return ConstraintVerdict("none", float("nan"), tol, False, ("hypothesis_violated",),
                                 details=details)

    o = np.asarray(origin, dtype=float)
    X, xs = _trajectories(cloud, motion, times)
    sq_dev = max(float(np.abs((x - o) ** 2 - (X - o) ** 2).max()) for x in xs)
    dev = max(float(np.linalg.norm(x - X, axis=-1).max()) for x in xs)
    details["coordinate_square_deviation"] = sq_dev
    return ConstraintVerdict("equilibrium", dev, tol, dev <= tol, (), details=details)
