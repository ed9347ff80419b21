"""Command line entry point: ``massmoment run|identities|list-motions``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import MassMomentError
from .motion import MOTION_KINDS
from .report import run
from .scenario import load_scenario

EXIT_OK, EXIT_UNEXPECTED, EXIT_ERROR = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="massmoment", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every check of a scenario")
    r.add_argument("scenario", type=Path)
    r.add_argument("--out", type=Path, help="directory for report.json / report.csv (default: stdout)")
    r.add_argument("--format", choices=("json", "csv", "both"), default="json")
    r.add_argument("--seed", type=int)
    r.add_argument("--particles", type=int,
                   help="monte carlo count, or grid nodes (resolution = cube root) for grids")
    r.add_argument("--tol", type=float, help="drift and constraint tolerance")
    r.add_argument("--fd-step", type=float)
    r.add_argument("--times", type=int, help="number of time-grid points")

    i = sub.add_parser("identities", help="only check the linear relations among the inertia septet")
    i.add_argument("scenario", type=Path)
    i.add_argument("--out", type=Path)
    i.add_argument("--format", choices=("json", "csv", "both"), default="json")

    sub.add_parser("list-motions", help="print the motion catalog")
    return p


def _emit(report, out: Path | None, fmt: str) -> None:
    outputs = []
    if fmt in ("json", "both"):
        outputs.append(("report.json", report.to_json()))
    if fmt in ("csv", "both"):
        outputs.append(("report.csv", report.to_csv()))
    if out is None:
        for _, text in outputs:
            sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs:
        (out / name).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-motions":
        for kind, cls in MOTION_KINDS.items():
            doc = (cls.__doc__ or "").strip().splitlines()
            print(f"{kind:24s} {doc[0] if doc else ''}")
        return EXIT_OK
    try:
        sc = load_scenario(args.scenario)
        if args.command == "run":
            sc = sc.with_overrides(seed=args.seed, particles=args.particles, tol=args.tol,
                                   fd_step=args.fd_step, times=args.times)
        else:
            doc = sc.echo()
            doc["checks"] = [{"id": "identities", "type": "identities", "expect": True}]
            from .scenario import from_dict

            sc = from_dict(doc)
        report = run(sc)
    except (MassMomentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit(report, args.out, args.format)
    failed = [r["check_id"] for r in report.rows if not r["as_expected"]]
    print(f"{len(report.rows)} checks in {report.wall_time:.2f} s; "
          f"{'all as expected' if not failed else 'unexpected: ' + ', '.join(failed)}",
          file=sys.stderr)
    return EXIT_OK if not failed else EXIT_UNEXPECTED
