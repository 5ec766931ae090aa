"""Command-line front end.

Two subcommands::

    sugra list
    sugra verify <catalog-id | background-file> [options]

``verify`` runs the closedness, Maxwell, Einstein, and trace residual
checks over a seeded sample plan and prints a report (text by default,
canonical JSON with --json or to --out).  Exit codes: 0 all residual rows
below tolerance, 1 verification failed, 2 bad input.

Reports are byte-deterministic for a fixed (target, seed, points,
tolerance); wall-clock timing is therefore only included when --timing is
passed.  The default seed is 42, overridable by the SUGRA_SEED environment
variable and by --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bgfile import BgFileError, parse_background_file
from .catalog import CatalogError, catalog_ids, get_entry, build
from .equations import Background, FluxSpec, VerificationResult, verify
from .expr import ExprError
from .forms import FormError

__all__ = ["main", "build_report", "report_to_json"]


def _parse_perturb(spec: str) -> tuple[str, float]:
    if ":" not in spec:
        raise ValueError(f"--perturb wants KEY:FACTOR, got {spec!r}")
    key, _, factor = spec.partition(":")
    return key.strip(), float(factor)


def _scale_flux(bg: Background, factor: float) -> Background:
    """Uniformly rescale every flux piece (perturbation for file targets)."""
    fs = bg.flux
    scaled = {}
    for name in ("alpha", "beta", "gamma", "varpi", "nu", "delta", "eps", "theta"):
        f = getattr(fs, name)
        scaled[name] = None if f is None else f.scale(factor)
    new = FluxSpec(psi=fs.psi, phi=fs.phi, **scaled)
    out = Background(bg.product, new, bg.box, bg.ident, bg.provenance, bg.predicate)
    return out


def _resolve_target(target: str, perturb: dict) -> Background:
    if target in catalog_ids():
        return build(target, perturb=perturb or None)
    p = Path(target)
    if p.exists() or target.endswith(".bg"):
        bg = parse_background_file(p)
        for key, factor in perturb.items():
            if key != "flux":
                raise CatalogError(
                    f"file targets support only the 'flux' perturbation, got {key!r}")
            bg = _scale_flux(bg, factor)
        return bg
    raise CatalogError(f"unknown catalog id or missing file {target!r}")


def build_report(target: str, bg: Background, result: VerificationResult,
                 seed: int, points: int, millis: int | None) -> dict:
    rows = [
        {
            "equation": r.equation,
            "block": r.block,
            "max": r.max_abs,
            "mean": r.mean_abs,
            "worst_point": list(r.worst_point),
            "worst_component": r.worst_component,
        }
        for r in result.rows
    ]
    report = {
        "version": __version__,
        "id": bg.ident or target,
        "provenance": bg.provenance,
        "seed": seed,
        "points": points,
        "tolerance": result.tolerance,
        "rows": rows,
        "verdict": "pass" if result.verdict else "fail",
    }
    if millis is not None:
        report["millis"] = millis
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _report_to_text(report: dict) -> str:
    lines = [
        f"sugra {report['version']}  target={report['id']}",
        f"provenance: {report['provenance']}",
        f"seed={report['seed']} points={report['points']} tolerance={report['tolerance']:g}",
        "",
        f"{'equation':<12}{'block':<8}{'max':>12}{'mean':>12}  worst component",
    ]
    for r in report["rows"]:
        ok = "ok " if r["max"] < report["tolerance"] else "FAIL"
        lines.append(
            f"{r['equation']:<12}{r['block']:<8}{r['max']:>12.3e}{r['mean']:>12.3e}"
            f"  {ok} {r['worst_component']}"
        )
    lines.append("")
    if "millis" in report:
        lines.append(f"verdict: {report['verdict']}  ({report['millis']} ms)")
    else:
        lines.append(f"verdict: {report['verdict']}")
    return "\n".join(lines) + "\n"


def _cmd_list() -> int:
    width = max(len(i) for i in catalog_ids())
    for ident in catalog_ids():
        entry = get_entry(ident)
        print(f"{ident:<{width}}  {entry.summary}")
    return 0


def _cmd_verify(args) -> int:
    perturb = {}
    for spec in args.perturb or []:
        try:
            key, factor = _parse_perturb(spec)
        except ValueError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        perturb[key] = factor
    try:
        bg = _resolve_target(args.target, perturb)
    except (CatalogError, BgFileError, FormError, ExprError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    tol = args.tol
    if tol is None:
        tol = getattr(bg, "file_tolerance", None) or 1e-8
    t0 = time.monotonic()
    try:
        result = verify(bg, count=args.points, seed=args.seed, tol=tol, jobs=args.jobs)
    except (FormError, ExprError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    millis = int((time.monotonic() - t0) * 1000) if args.timing else None
    report = build_report(args.target, bg, result, args.seed, args.points, millis)
    payload = report_to_json(report)
    if args.out:
        Path(args.out).write_text(payload)
    if args.json:
        sys.stdout.write(payload)
    else:
        sys.stdout.write(_report_to_text(report))
    return 0 if result.verdict else 1


def main(argv=None) -> int:
    default_seed = int(os.environ.get("SUGRA_SEED", "42"))
    ap = argparse.ArgumentParser(
        prog="sugra",
        description="verify eleven-dimensional product supergravity backgrounds",
    )
    ap.add_argument("--version", action="version", version=f"sugra {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list catalog backgrounds")
    vp = sub.add_parser("verify", help="verify a catalog id or a .bg file")
    vp.add_argument("target", help="catalog id or path to a background file")
    vp.add_argument("--points", type=int, default=100, help="sample points (default 100)")
    vp.add_argument("--seed", type=int, default=default_seed,
                    help="sample seed (default 42, or SUGRA_SEED)")
    vp.add_argument("--tol", type=float, default=None,
                    help="residual tolerance (default 1e-8 or the file's tol)")
    vp.add_argument("--perturb", action="append", metavar="KEY:FACTOR",
                    help="scale a builder profile or constant, e.g. H:1.1")
    vp.add_argument("--out", help="write the JSON report to this path")
    vp.add_argument("--json", action="store_true", help="print JSON to stdout")
    vp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="worker threads for point evaluation")
    vp.add_argument("--timing", action="store_true",
                    help="include wall-clock millis in the report (breaks byte determinism)")
    args = ap.parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
