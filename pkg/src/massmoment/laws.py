"""Conservation tests for mass-moment parameters.

Global test: a parameter is conserved when its value on every sampled part
stays at its initial value over the time grid. Local tests evaluate the
pointwise laws at material points:

* material law   ``rho(x,t) p(x,t) J(X,t) - rho(X,0) p(X,0)``
* spatial law    ``d(rho p)/dt + rho p div_x v``
* two-parameter  ``p1(X,0) p2(x,t) - p1(x,t) p2(X,0)`` and its ratio form.

With ``p = 1`` the first two are the material and spatial continuity equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .body import (
    GridMidpoint, MaterialPointCloud, MonteCarlo, ReferenceBody, SubPart, WHOLE_BODY, discretize,
)
from .evolution import EvolvedDensity, MassConsistent
from .motion import (
    ANALYTIC, DEFAULT_FD_STEP, FiniteDifference, Motion, deformation_state, placement,
    time_derivative,
)
from .moments import ConstantOne, MomentParameter, ReducedDensity, _fsum, evaluate_moment, pullback

DRIFT_GUARD = 1e-300
RATIO_FLOOR = 1e-10
MIN_TOLERANCE = 1e-8
DEFAULT_TIME_STEPS = 9

LAW_IDS = ("material", "spatial", "continuity_material", "continuity_spatial",
           "two_param", "ratio", "mass_plus_P")


def time_grid(horizon: float = 1.0, steps: int = DEFAULT_TIME_STEPS) -> np.ndarray:
    if steps < 1:
        raise ValueError("time grid needs at least one point")
    if steps == 1:
        return np.array([0.0])
    return np.linspace(0.0, horizon, steps)


@dataclass(frozen=True)
class DriftReport:
    parameter: str
    part_ids: tuple[str, ...]
    times: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]  # [part][time]
    max_relative_drift: float
    tolerance: float
    conserved: bool

    @property
    def value_t0(self) -> float:
        return self.values[0][0]

    def to_dict(self):
        return {
            "parameter": self.parameter,
            "part_ids": list(self.part_ids),
            "times": list(self.times),
            "values": [list(v) for v in self.values],
            "max_relative_drift": self.max_relative_drift,
            "tolerance": self.tolerance,
            "conserved": self.conserved,
        }


@dataclass(frozen=True)
class ResidualReport:
    law: str
    max_abs: float
    mean_abs: float
    samples: int
    normalization: str
    tolerance: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool | None:
        if self.tolerance is None:
            return None
        return self.max_abs <= self.tolerance

    def to_dict(self):
        d = {"law": self.law, "max_abs": self.max_abs, "mean_abs": self.mean_abs,
             "samples": self.samples, "normalization": self.normalization,
             "tolerance": self.tolerance, "satisfied": self.satisfied}
        d.update(self.extra)
        return d


def global_drift(P: MomentParameter, cloud: MaterialPointCloud, parts: list[SubPart],
                 motion: Motion, evolved_density: EvolvedDensity | None, times,
                 tol: float) -> DriftReport:
    """Values of ``P`` on every part at every time, and the worst drift from t = 0."""
    times = [float(t) for t in times]
    if not times or times[0] != 0.0:
        raise ValueError("time grid must be non-empty and start at 0")
    if evolved_density is None:
        evolved_density = MassConsistent()
    masks = [part.mask(cloud) for part in parts]
    values = np.empty((len(parts), len(times)))
    for j, t in enumerate(times):
        x, measure = pullback(cloud, motion, evolved_density, t)
        integrand = measure * P.reduced_density(x, t)
        for i, m in enumerate(masks):
            values[i, j] = _fsum(integrand[m])
    drift = np.abs(values - values[:, :1]) / (DRIFT_GUARD + np.abs(values[:, :1]))
    worst = float(drift.max())
    return DriftReport(
        parameter=P.name,
        part_ids=tuple(p.id for p in parts),
        times=tuple(times),
        values=tuple(tuple(float(v) for v in row) for row in values),
        max_relative_drift=worst,
        tolerance=float(tol),
        conserved=worst <= tol,
    )


def quadrature_tolerance(P: MomentParameter, body: ReferenceBody,
                         generator: GridMidpoint | MonteCarlo,
                         evolved_density: EvolvedDensity | None = None) -> float:
    """``max(1e-8, 3 * relative change of P(body, 0) under one refinement)``."""
    from .motion import Identity

    if isinstance(generator, GridMidpoint):
        fine = GridMidpoint(2 * generator.resolution)
    else:
        fine = MonteCarlo(4 * generator.count, generator.seed)
    still = Identity()
    coarse_v = evaluate_moment(P, discretize(body, generator), WHOLE_BODY, still, evolved_density, 0.0)
    fine_v = evaluate_moment(P, discretize(body, fine), WHOLE_BODY, still, evolved_density, 0.0)
    err = abs(coarse_v - fine_v) / (DRIFT_GUARD + abs(fine_v))
    return max(MIN_TOLERANCE, 3.0 * err)


# pointwise laws

def _initial_density(evolved, rho0, X):
    ones = np.ones(np.shape(X)[:-1])
    return evolved(rho0, X, X, ones, 0.0)


def _rho0(reference_density, X):
    if reference_density is None:
        return np.ones(np.shape(X)[:-1])
    return reference_density(X)


def material_law_residual(P: MomentParameter, motion: Motion, evolved_density: EvolvedDensity,
                          X, t: float, reference_density=None) -> np.ndarray:
    """``rho(x,t) p(x,t) J - rho(X,0) p(X,0)`` at particle(s) ``X``.

    ``reference_density`` is the body's initial density field (unit density if omitted).
    """
    X = np.asarray(X, dtype=float)
    rho0 = _rho0(reference_density, X)
    x, J = placement(motion, X, t)
    p = P.reduced_density
    now = evolved_density(rho0, X, x, J, t) * p(x, t) * J
    return now - _initial_density(evolved_density, rho0, X) * p(X, 0.0)


def spatial_law_residual(P: MomentParameter, motion: Motion, evolved_density: EvolvedDensity,
                         X, t: float, dt_step: float = DEFAULT_FD_STEP,
                         reference_density=None) -> np.ndarray:
    """``d(rho p)/dt + rho p div_x v`` following particle(s) ``X``."""
    X = np.asarray(X, dtype=float)
    rho0 = _rho0(reference_density, X)
    p = P.reduced_density

    def rho_p(s):
        x, J = placement(motion, X, s)
        return evolved_density(rho0, X, x, J, s) * p(x, s)

    t = motion.check_time(t)
    rate = time_derivative(rho_p, t, dt_step, motion.time_domain)
    mode = ANALYTIC if motion.analytic else FiniteDifference(dt_step)
    st = deformation_state(motion, X, t, mode)
    return rate + rho_p(t) * st.velocity_divergence


def two_param_relation(p1: ReducedDensity, p2: ReducedDensity, motion: Motion, X, t: float) -> np.ndarray:
    """``p1(X,0) p2(x,t) - p1(x,t) p2(X,0)``."""
    X = np.asarray(X, dtype=float)
    x = motion.place(X, t)
    return p1(X, 0.0) * p2(x, t) - p1(x, t) * p2(X, 0.0)


def ratio_relation(p1: ReducedDensity, p2: ReducedDensity, motion: Motion, X, t: float,
                   floor: float = RATIO_FLOOR) -> np.ndarray:
    """``(p1/p2)(x,t) - (p1/p2)(X,0)``; NaN where ``|p2| < floor`` at either end."""
    X = np.asarray(X, dtype=float)
    x = motion.place(X, t)
    a, b = p2(x, t), p2(X, 0.0)
    ok = (np.abs(a) >= floor) & (np.abs(b) >= floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = p1(x, t) / a - p1(X, 0.0) / b
    return np.where(ok, r, np.nan)


def mass_plus_p_relation(p: ReducedDensity, motion: Motion, X, t: float) -> np.ndarray:
    """Two-parameter relation against the mass, i.e. ``p(X,0) - p(x,t)``."""
    return two_param_relation(p, ConstantOne(), motion, X, t)


def summarize(law: str, residuals, normalization: str = "none",
              tolerance: float | None = None, **extra) -> ResidualReport:
    """Max and mean absolute residual over all finite samples."""
    r = np.abs(np.asarray(residuals, dtype=float)).reshape(-1)
    finite = r[np.isfinite(r)]
    if finite.size == 0:
        return ResidualReport(law, math.nan, math.nan, 0, normalization, tolerance, dict(extra))
    return ResidualReport(law, float(finite.max()), _fsum(finite) / finite.size, int(finite.size),
                          normalization, tolerance, dict(extra))


def material_law_report(P: MomentParameter, cloud: MaterialPointCloud, motion: Motion,
                        evolved_density: EvolvedDensity, times, tol: float,
                        reference_density=None) -> ResidualReport:
    """Material law at every cloud node and grid time, normalised by ``1 + |rho0 p0|``."""
    X = cloud.reference_positions
    rho0 = cloud.reference_densities if reference_density is None else reference_density(X)
    base = np.abs(_initial_density(evolved_density, rho0, X) * P.reduced_density(X, 0.0))
    res = [material_law_residual(P, motion, evolved_density, X, t, lambda _: rho0) / (1.0 + base)
           for t in times]
    law = "continuity_material" if isinstance(P.reduced_density, ConstantOne) else "material"
    return summarize(law, res, "1+|rho0 p0|", tol)


def spatial_law_report(P: MomentParameter, cloud: MaterialPointCloud, motion: Motion,
                       evolved_density: EvolvedDensity, times, tol: float,
                       dt_step: float = DEFAULT_FD_STEP) -> ResidualReport:
    X = cloud.reference_positions
    rho0 = cloud.reference_densities
    base = np.abs(_initial_density(evolved_density, rho0, X) * P.reduced_density(X, 0.0))
    res = [spatial_law_residual(P, motion, evolved_density, X, t, dt_step, lambda _: rho0) / (1.0 + base)
           for t in times]
    law = "continuity_spatial" if isinstance(P.reduced_density, ConstantOne) else "spatial"
    return summarize(law, res, "1+|rho0 p0|", tol, dt_step=dt_step)


def two_param_report(p1: ReducedDensity, p2: ReducedDensity, cloud: MaterialPointCloud,
                     motion: Motion, times, tol: float) -> ResidualReport:
    X = cloud.reference_positions
    res = [two_param_relation(p1, p2, motion, X, t) for t in times]
    ratio = summarize("ratio", [ratio_relation(p1, p2, motion, X, t) for t in times])
    law = "mass_plus_P" if isinstance(p2, ConstantOne) else "two_param"
    return summarize(law, res, "none", tol, ratio_max_abs=ratio.max_abs, ratio_samples=ratio.samples)
