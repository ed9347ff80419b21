"""Current density rho(x, t) of the particle that started at X.

Each model is called as ``model(rho0, X, x, J, t)`` with the particle's
reference density, reference and current positions, and Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EvaluationError


@dataclass(frozen=True)
class MassConsistent:
    """``rho = rho0 / J``: mass is conserved along every path by construction."""

    kind = "mass_consistent"

    def __call__(self, rho0, X, x, J, t):
        return np.asarray(rho0) / J

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Frozen:
    """``rho = rho0``: density carried unchanged, whatever the volume change."""

    kind = "frozen"

    def __call__(self, rho0, X, x, J, t):
        return np.broadcast_to(np.asarray(rho0, dtype=float), np.shape(J)).copy()

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Explicit:
    """Closed-form ``rho(x, t)``; at ``t = 0`` it also supplies the initial density."""

    function: Callable[[np.ndarray, float], np.ndarray]
    descriptor: object = None
    kind = "explicit"

    def __call__(self, rho0, X, x, J, t):
        try:
            rho = np.asarray(self.function(np.asarray(x, dtype=float), t), dtype=float)
        except Exception as exc:  # noqa: BLE001 - user code
            raise EvaluationError(f"explicit density failed at t = {t}: {exc}") from exc
        rho = np.broadcast_to(rho, np.shape(J)).copy()
        if np.any(~(rho > 0)):
            raise EvaluationError(f"explicit density not strictly positive at t = {t}")
        return rho

    def to_dict(self):
        return {"kind": self.kind, "expression": self.descriptor}


EvolvedDensity = MassConsistent | Frozen | Explicit
