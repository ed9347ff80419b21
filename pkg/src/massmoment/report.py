"""Run a scenario's checks and emit JSON / CSV reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass

from . import __version__
from .body import discretize, sample_subparts
from .classify import (
    equilibrium_check, verify_cylinder_constraint, verify_plane_constraint,
    verify_sphere_constraint,
)
from .errors import MassMomentError
from .laws import (
    global_drift, material_law_report, quadrature_tolerance, spatial_law_report,
    two_param_report,
)
from .moments import MomentParameter, SquaredDistance, check_identities, inertia_septet, septet_parameters
from .scenario import Scenario

CSV_COLUMNS = ("check_id", "target", "value_t0", "max_drift_or_residual", "tolerance", "verdict")


class RunError(MassMomentError):
    """A check could not be evaluated."""

    def __init__(self, check_id: str, cause: Exception):
        self.check_id = check_id
        super().__init__(f"check {check_id!r}: {type(cause).__name__}: {cause}")


@dataclass
class RunReport:
    scenario: dict
    rows: list[dict]
    wall_time: float
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(r["as_expected"] for r in self.rows)

    def to_dict(self) -> dict:
        # wall_time is left out so reports are byte-identical across runs
        return {"tool": "massmoment", "version": self.version, "scenario": self.scenario,
                "results": self.rows, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(["" if r[c] is None else r[c] for c in CSV_COLUMNS])
        return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    return obj


def _row(chk, target, value_t0, measure, tol, verdict, passed, details=None):
    return {
        "check_id": chk["id"],
        "type": chk["type"],
        "target": target,
        "value_t0": value_t0,
        "max_drift_or_residual": measure,
        "tolerance": tol,
        "verdict": verdict,
        "passed": bool(passed),
        "expected": bool(chk["expect"]),
        "as_expected": bool(passed) == bool(chk["expect"]),
        "details": details or {},
    }


class _Runner:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.cloud = discretize(sc.body, sc.generator)
        self.parts = sample_subparts(sc.body, sc.document["subparts"], sc.seed)
        self.times = [float(t) for t in sc.times]
        self._tol_cache: dict[str, float] = {}

    def conservation_tol(self, P: MomentParameter, key="drift") -> float:
        tol = self.sc.tolerances[key]
        if tol != "auto":
            return float(tol)
        k = json.dumps(_clean(P.reduced_density.to_dict()), sort_keys=True)
        if k not in self._tol_cache:
            self._tol_cache[k] = quadrature_tolerance(P, self.sc.body, self.sc.generator,
                                                      self.sc.evolved_density)
        return self._tol_cache[k]

    def origin(self, chk):
        if "origin" in chk:
            return self.sc.entities[chk["origin"]].position
        return (0.0, 0.0, 0.0)

    def run_check(self, chk) -> dict:
        sc, cloud, times = self.sc, self.cloud, self.times
        typ = chk["type"]
        tols = sc.tolerances
        if typ == "drift":
            P = sc.parameters[chk["parameter"]]
            rep = global_drift(P, cloud, self.parts, sc.motion, sc.evolved_density, times,
                               self.conservation_tol(P))
            return _row(chk, P.name, rep.value_t0, rep.max_relative_drift, rep.tolerance,
                        "conserved" if rep.conserved else "not_conserved", rep.conserved,
                        {"parts": len(rep.part_ids), "times": len(rep.times)})
        if typ in ("material_law", "spatial_law"):
            P = sc.parameters[chk["parameter"]]
            if typ == "material_law":
                rep = material_law_report(P, cloud, sc.motion, sc.evolved_density, times,
                                          tols["pointwise"])
            else:
                rep = spatial_law_report(P, cloud, sc.motion, sc.evolved_density, times,
                                         tols["spatial"], tols["fd_step"])
            return _row(chk, P.name, None, rep.max_abs, rep.tolerance,
                        "satisfied" if rep.satisfied else "violated", rep.satisfied, rep.to_dict())
        if typ == "two_param":
            p1, p2 = (sc.parameters[n] for n in chk["parameters"])
            rep = two_param_report(p1.reduced_density, p2.reduced_density, cloud, sc.motion, times,
                                   tols["pointwise"])
            return _row(chk, f"{p1.name},{p2.name}", None, rep.max_abs, rep.tolerance,
                        "satisfied" if rep.satisfied else "violated", rep.satisfied, rep.to_dict())
        if typ in ("sphere", "plane", "cylinder"):
            entity = sc.entities[chk["entity"]]
            tol = self.conservation_tol(MomentParameter(chk["entity"], SquaredDistance(entity)),
                                        "constraint")
            verify = {"sphere": verify_sphere_constraint, "plane": verify_plane_constraint,
                      "cylinder": verify_cylinder_constraint}[typ]
            v = verify(cloud, sc.motion, entity, times, tol, sc.evolved_density, self.parts)
            details = {"flags": list(v.flags), "drift_max_relative": v.drift.max_relative_drift,
                       "drift_conserved": v.drift.conserved, "agrees": v.agrees,
                       "max_scaled_deviation": v.details["max_scaled_deviation"]}
            return _row(chk, chk["entity"], v.drift.value_t0, v.deviation, tol,
                        "holds" if v.holds else "fails", v.holds, details)
        if typ == "equilibrium":
            params = septet_parameters(self.origin(chk))
            tol = tols["constraint"]
            if tol == "auto":
                tol = max(self.conservation_tol(params[m]) for m in chk["triple"])
            v = equilibrium_check(chk["triple"], cloud, sc.motion, times, float(tol),
                                  sc.evolved_density, self.origin(chk), self.parts)
            if v.kind == "equilibrium":
                verdict = "equilibrium" if v.holds else "not_equilibrium"
            else:
                verdict = "no_conclusion"
            return _row(chk, ",".join(chk["triple"]), None, v.deviation, float(tol), verdict, v.holds,
                        {"flags": list(v.flags), **v.details})
        if typ == "identities":
            worst, failing, first = 0.0, set(), None
            for t in times:
                s = inertia_septet(cloud, sc.motion, sc.evolved_density, t, self.origin(chk))
                if first is None:
                    first = s.I_O
                for r in check_identities(s, tols["identities"]):
                    worst = max(worst, abs(r.residual) / (1.0 + abs(s.I_O)))
                    if not r.passed:
                        failing.add(r.id)
            ok = not failing
            return _row(chk, "septet", first, worst, tols["identities"],
                        "satisfied" if ok else "violated", ok,
                        {"failing": sorted(failing), "septets": len(times)})
        raise ValueError(f"unknown check type {typ!r}")


def run(scenario: Scenario) -> RunReport:
    """Execute every check in declaration order.

    Failed verdicts become rows; evaluation errors abort with a :class:`RunError`.
    """
    start = time.perf_counter()
    runner = _Runner(scenario)
    rows = []
    for chk in scenario.checks:
        try:
            rows.append(runner.run_check(chk))
        except MassMomentError as exc:
            raise RunError(chk["id"], exc) from exc
    return RunReport(scenario.echo(), rows, time.perf_counter() - start)
