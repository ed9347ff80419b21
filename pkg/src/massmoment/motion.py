"""Motions x = chi(X, t) and their kinematic derivatives.

Every motion is stored as ``X + displacement(X, t)`` with a displacement that is
exactly zero at ``t = 0``, so the reference placement is reproduced bit for bit.
All functions broadcast over leading axes of ``X`` (shape ``(..., 3)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from .errors import DomainError, EvaluationError, SingularMotionError
from .geometry import Axis

DEFAULT_FD_STEP = 1e-4
SINGULAR_JACOBIAN = 1e-12
ANALYTIC = "analytic"


@dataclass(frozen=True)
class FiniteDifference:
    """Central-difference differentiation mode with a fixed step."""

    step: float = DEFAULT_FD_STEP

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")


@dataclass(frozen=True, eq=False)
class DeformationState:
    position: np.ndarray
    deformation_gradient: np.ndarray
    jacobian: np.ndarray
    velocity: np.ndarray
    velocity_divergence: np.ndarray


def _skew(n: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])


def _rotation(n: np.ndarray, theta) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(R - I, dR/dtheta)`` for rotation by ``theta`` about unit ``n``.

    ``theta`` may be an array; the matrices then carry its shape in front.
    """
    K = _skew(n)
    K2 = K @ K
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)[..., None, None]
    c = np.cos(theta)[..., None, None]
    r_minus_i = s * K + (1.0 - c) * K2
    dr = c * K + s * K2
    return r_minus_i, dr


def _apply(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    if M.ndim == 2:
        return v @ M.T
    return np.einsum("...ij,...j->...i", M, v)


def det3(F: np.ndarray) -> np.ndarray:
    """Determinant of 3x3 matrices stacked along leading axes (cofactor expansion)."""
    return (F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
            - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
            + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0]))


@dataclass(frozen=True, kw_only=True)
class Motion:
    """Base class. Subclasses implement the closed-form hooks below."""

    time_domain: tuple[float, float] = (0.0, math.inf)

    kind: ClassVar[str] = "abstract"
    analytic: ClassVar[bool] = True

    def __post_init__(self):
        lo, hi = (float(v) for v in self.time_domain)
        if not (lo <= 0.0 <= hi):
            raise DomainError(f"time domain {self.time_domain} must contain t = 0")
        object.__setattr__(self, "time_domain", (lo, hi))

    def check_time(self, t: float) -> float:
        t = float(t)
        lo, hi = self.time_domain
        if not (lo <= t <= hi):
            raise DomainError(f"t = {t} outside time domain [{lo}, {hi}]")
        return t

    # closed-form hooks, all evaluated at reference position X
    def _displacement(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def _gradient(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def _velocity(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def _divergence(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def _place(self, X: np.ndarray, t: float) -> np.ndarray:
        return X + self._displacement(X, t)

    def place(self, X, t: float) -> np.ndarray:
        t = self.check_time(t)
        return self._place(np.asarray(X, dtype=float), t)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _identity_like(X: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3)).copy()


@dataclass(frozen=True)
class Identity(Motion):
    """Every particle stays at its reference position."""

    kind: ClassVar[str] = "identity"

    def _displacement(self, X, t):
        return np.zeros_like(X)

    def _gradient(self, X, t):
        return _identity_like(X)

    def _velocity(self, X, t):
        return np.zeros_like(X)

    def _divergence(self, X, t):
        return np.zeros(X.shape[:-1])

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Translation(Motion):
    """Uniform drift ``x = X + speed * t * direction``."""

    direction: np.ndarray = (1.0, 0.0, 0.0)
    speed: float = 1.0
    kind: ClassVar[str] = "translation"

    def __post_init__(self):
        super().__post_init__()
        d = np.asarray(self.direction, dtype=float)
        norm = np.linalg.norm(d)
        if d.shape != (3,) or norm == 0:
            raise ValueError("translation direction must be a nonzero 3-vector")
        object.__setattr__(self, "direction", d / norm)

    def _displacement(self, X, t):
        return np.broadcast_to(t * self.speed * self.direction, X.shape).copy()

    def _gradient(self, X, t):
        return _identity_like(X)

    def _velocity(self, X, t):
        return np.broadcast_to(self.speed * self.direction, X.shape).copy()

    def _divergence(self, X, t):
        return np.zeros(X.shape[:-1])

    def to_dict(self):
        return {"kind": self.kind, "direction": self.direction.tolist(), "speed": self.speed}


@dataclass(frozen=True)
class RigidRotation(Motion):
    """Rotation about a fixed axis at constant angular speed (radians per unit time)."""

    axis: Axis = field(default_factory=lambda: Axis((0.0, 0.0, 1.0)))
    angular_speed: float = 1.0
    kind: ClassVar[str] = "rigid_rotation"

    def _displacement(self, X, t):
        r_minus_i, _ = _rotation(self.axis.direction, self.angular_speed * t)
        return _apply(r_minus_i, X - self.axis.point)

    def _gradient(self, X, t):
        r_minus_i, _ = _rotation(self.axis.direction, self.angular_speed * t)
        return np.broadcast_to(np.eye(3) + r_minus_i, X.shape[:-1] + (3, 3)).copy()

    def _velocity(self, X, t):
        _, dr = _rotation(self.axis.direction, self.angular_speed * t)
        return self.angular_speed * _apply(dr, X - self.axis.point)

    def _divergence(self, X, t):
        return np.zeros(X.shape[:-1])

    def to_dict(self):
        return {"kind": self.kind, "axis": self.axis.to_dict(), "angular_speed": self.angular_speed}


@dataclass(frozen=True)
class UniformDilation(Motion):
    """``x = c + (1 + rate*t)(X - c)``."""

    rate: float = 1.0
    center: np.ndarray = (0.0, 0.0, 0.0)
    kind: ClassVar[str] = "uniform_dilation"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def _displacement(self, X, t):
        return (self.rate * t) * (X - self.center)

    def _gradient(self, X, t):
        return (1.0 + self.rate * t) * _identity_like(X)

    def _velocity(self, X, t):
        return self.rate * (X - self.center)

    def _divergence(self, X, t):
        return np.full(X.shape[:-1], 3.0 * self.rate / (1.0 + self.rate * t))

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate, "center": self.center.tolist()}


@dataclass(frozen=True)
class SimpleShear(Motion):
    """``x_i = X_i + rate * t * X_j`` with ``axes = (i, j)``, 1-based, i != j."""

    rate: float = 1.0
    axes: tuple[int, int] = (1, 2)
    kind: ClassVar[str] = "simple_shear"

    def __post_init__(self):
        super().__post_init__()
        i, j = (int(a) for a in self.axes)
        if i == j or not {i, j} <= {1, 2, 3}:
            raise ValueError(f"shear axes must be two distinct indices in 1..3, got {self.axes}")
        object.__setattr__(self, "axes", (i, j))

    def _displacement(self, X, t):
        i, j = self.axes
        d = np.zeros_like(X)
        d[..., i - 1] = self.rate * t * X[..., j - 1]
        return d

    def _gradient(self, X, t):
        i, j = self.axes
        F = _identity_like(X)
        F[..., i - 1, j - 1] = self.rate * t
        return F

    def _velocity(self, X, t):
        i, j = self.axes
        v = np.zeros_like(X)
        v[..., i - 1] = self.rate * X[..., j - 1]
        return v

    def _divergence(self, X, t):
        return np.zeros(X.shape[:-1])

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate, "axes": list(self.axes)}


@dataclass(frozen=True)
class IncompressibleVortex(Motion):
    """Differential rotation about an axis.

    A particle at distance ``r`` from the axis turns with angular speed
    ``angular_speed + profile_coefficient * r**2``. Distance to the axis and
    the axial coordinate are kept, so the map is volume preserving.
    """

    axis: Axis = field(default_factory=lambda: Axis((0.0, 0.0, 1.0)))
    profile_coefficient: float = 1.0
    angular_speed: float = 0.0
    kind: ClassVar[str] = "incompressible_vortex"

    def _omega(self, perp):
        r2 = np.einsum("...i,...i->...", perp, perp)
        return self.angular_speed + self.profile_coefficient * r2

    def _displacement(self, X, t):
        d = X - self.axis.point
        omega = self._omega(self.axis.perpendicular(X))
        r_minus_i, _ = _rotation(self.axis.direction, omega * t)
        return _apply(r_minus_i, d)

    def _gradient(self, X, t):
        d = X - self.axis.point
        perp = self.axis.perpendicular(X)
        omega = self._omega(perp)
        r_minus_i, dr = _rotation(self.axis.direction, omega * t)
        # d theta / dX = 2 t k perp
        return np.eye(3) + r_minus_i + np.einsum(
            "...i,...j->...ij", _apply(dr, d), 2.0 * t * self.profile_coefficient * perp
        )

    def _velocity(self, X, t):
        d = X - self.axis.point
        omega = self._omega(self.axis.perpendicular(X))
        _, dr = _rotation(self.axis.direction, omega * t)
        return omega[..., None] * _apply(dr, d)

    def _divergence(self, X, t):
        return np.zeros(X.shape[:-1])

    def to_dict(self):
        return {
            "kind": self.kind,
            "axis": self.axis.to_dict(),
            "profile_coefficient": self.profile_coefficient,
            "angular_speed": self.angular_speed,
        }


@dataclass(frozen=True)
class Composite(Motion):
    """Apply ``motions`` in sequence: ``x = m_n(... m_1(X, t) ..., t)``.

    The closed-form divergence adds the members' divergences at their
    intermediate points. That is exact when each member has a spatially
    uniform Jacobian, which holds for every shipped analytic kind.
    """

    motions: tuple[Motion, ...] = ()
    kind: ClassVar[str] = "composite"

    def __post_init__(self):
        object.__setattr__(self, "motions", tuple(self.motions))
        if not self.motions:
            raise ValueError("composite motion needs at least one member")
        lo = max([self.time_domain[0]] + [m.time_domain[0] for m in self.motions])
        hi = min([self.time_domain[1]] + [m.time_domain[1] for m in self.motions])
        object.__setattr__(self, "time_domain", (lo, hi))
        super().__post_init__()

    @property
    def analytic(self) -> bool:  # type: ignore[override]
        return all(m.analytic for m in self.motions)

    def _place(self, X, t):
        y = X
        for m in self.motions:
            y = m._place(y, t)
        return y

    def _displacement(self, X, t):
        return self._place(X, t) - X

    def _chain(self, X, t):
        y = X
        F = _identity_like(X)
        ydot = np.zeros_like(X)
        div = np.zeros(X.shape[:-1])
        for m in self.motions:
            Fm = m._gradient(y, t)
            ydot = m._velocity(y, t) + _apply(Fm, ydot)
            div = div + m._divergence(y, t)
            F = Fm @ F
            y = m._place(y, t)
        return F, ydot, div

    def _gradient(self, X, t):
        return self._chain(X, t)[0]

    def _velocity(self, X, t):
        return self._chain(X, t)[1]

    def _divergence(self, X, t):
        return self._chain(X, t)[2]

    def to_dict(self):
        return {"kind": self.kind, "motions": [m.to_dict() for m in self.motions]}


@dataclass(frozen=True)
class Custom(Motion):
    """User-supplied map ``mapping(X, t) -> x``; derivatives always use finite differences.

    ``mapping`` must accept ``X`` of shape ``(..., 3)`` and a float ``t``.
    ``descriptor`` is echoed in reports (e.g. the source expressions).
    """

    mapping: Callable[[np.ndarray, float], np.ndarray] = None
    descriptor: object = None
    kind: ClassVar[str] = "custom"
    analytic: ClassVar[bool] = False

    def __post_init__(self):
        super().__post_init__()
        if not callable(self.mapping):
            raise ValueError("custom motion needs a callable mapping")
        probe = np.array([[0.0, 0.0, 0.0], [0.3, -0.7, 1.1], [-1.0, 2.0, 0.5]])
        if not np.allclose(self._place(probe, 0.0), probe, rtol=0, atol=1e-12):
            raise EvaluationError("custom motion must reduce to the identity at t = 0")

    def _place(self, X, t):
        try:
            x = np.asarray(self.mapping(X, t), dtype=float)
        except Exception as exc:  # noqa: BLE001 - user code
            raise EvaluationError(f"custom motion failed at t = {t}: {exc}") from exc
        if x.shape != X.shape:
            try:
                x = np.broadcast_to(x, X.shape).copy()
            except ValueError:
                raise EvaluationError(f"custom motion returned shape {x.shape}, expected {X.shape}") from None
        if not np.all(np.isfinite(x)):
            raise EvaluationError(f"custom motion produced non-finite positions at t = {t}")
        return x

    def to_dict(self):
        return {"kind": self.kind, "descriptor": self.descriptor}


MOTION_KINDS: dict[str, type[Motion]] = {
    cls.kind: cls
    for cls in (Identity, Translation, RigidRotation, UniformDilation, SimpleShear,
                IncompressibleVortex, Composite, Custom)
}


# finite-difference machinery

def time_derivative(g: Callable[[float], np.ndarray], t: float, h: float,
                    domain: tuple[float, float]) -> np.ndarray:
    """Second-order derivative of ``g`` at ``t``: central inside, one-sided at the ends."""
    lo, hi = domain
    if t - h >= lo and t + h <= hi:
        return (g(t + h) - g(t - h)) / (2.0 * h)
    if t + 2 * h <= hi:
        return (-3.0 * g(t) + 4.0 * g(t + h) - g(t + 2 * h)) / (2.0 * h)
    if t - 2 * h >= lo:
        return (3.0 * g(t) - 4.0 * g(t - h) + g(t - 2 * h)) / (2.0 * h)
    raise DomainError(f"time domain {domain} too short for step {h}")


def spatial_gradient(fn: Callable[[np.ndarray], np.ndarray], X: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a vector map: ``G[..., i, j] = d fn_i / d X_j``."""
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((fn(X + e) - fn(X - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def _check_jacobian(J: np.ndarray, t: float) -> None:
    if np.any(np.abs(J) < SINGULAR_JACOBIAN):
        raise SingularMotionError(f"|J| below {SINGULAR_JACOBIAN} at t = {t}")


def place(motion: Motion, X, t: float) -> np.ndarray:
    return motion.place(X, t)


def deformation_state(motion: Motion, X, t: float, diff_mode=ANALYTIC) -> DeformationState:
    """Position, deformation gradient, J, velocity and div_x v of particle(s) ``X`` at ``t``."""
    t = motion.check_time(t)
    X = np.asarray(X, dtype=float)
    x = motion._place(X, t)
    if diff_mode == ANALYTIC and motion.analytic:
        F = motion._gradient(X, t)
        v = motion._velocity(X, t)
        J = det3(F)
        _check_jacobian(J, t)
        div = motion._divergence(X, t)
    else:
        h = diff_mode.step if isinstance(diff_mode, FiniteDifference) else DEFAULT_FD_STEP
        dom = motion.time_domain

        def vel(Y):
            return time_derivative(lambda s: motion._place(Y, s), t, h, dom)

        F = spatial_gradient(lambda Y: motion._place(Y, t), X, h)
        J = det3(F)
        _check_jacobian(J, t)
        v = vel(X)
        L = spatial_gradient(vel, X, h)
        # div_x v = tr(dF/dt F^-1)
        div = np.trace(np.linalg.solve(F, L), axis1=-2, axis2=-1)
    return DeformationState(x, F, J, v, div)


def placement(motion: Motion, X, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Current positions and J only; cheaper than a full deformation_state."""
    t = motion.check_time(t)
    X = np.asarray(X, dtype=float)
    if not motion.analytic:
        st = deformation_state(motion, X, t)
        return st.position, st.jacobian
    J = det3(motion._gradient(X, t))
    _check_jacobian(J, t)
    return motion._place(X, t), J


def material_derivative(motion: Motion, field: Callable[[np.ndarray, float], np.ndarray],
                        X, t: float, dt_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """d/dt of ``field(chi(X, t), t)`` following the particle(s) ``X``."""
    t = motion.check_time(t)
    X = np.asarray(X, dtype=float)
    return time_derivative(lambda s: field(motion._place(X, s), s), t, dt_step, motion.time_domain)


def jacobian_ode_residual(motion: Motion, X, t: float, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """``dJ/dt - J div_x v`` with dJ/dt from a time difference of det F."""
    t = motion.check_time(t)
    X = np.asarray(X, dtype=float)
    mode = ANALYTIC if motion.analytic else FiniteDifference(step)

    def jac(s):
        return deformation_state(motion, X, s, mode).jacobian

    dJ = time_derivative(jac, t, step, motion.time_domain)
    st = deformation_state(motion, X, t, mode)
    return dJ - st.jacobian * st.velocity_divergence


def observed_order(steps, errors, floor: float = 0.0) -> float:
    """Least-squares slope of log(error) against log(step).

    Returns ``inf`` when every error is at or below ``floor`` (exact up to
    roundoff, so no order can be measured).
    """
    steps = np.asarray(steps, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if np.all(errors <= floor):
        return math.inf
    errors = np.maximum(errors, np.finfo(float).tiny)
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
