"""Command-line front end: ``spbc solve|stability|classify|sweep|circular|testpath|export``.

Exit codes: 0 success, 2 solver non-convergence, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .assembly import classify_angle
from .boundary import BoundaryParams, RotationAngle, circular_action, test_path_action
from .dynamics import EQUAL_MASSES, MassSystem
from .errors import DegenerateAngle, SPBCError
from .fixtures import SEED_ALIASES, seed_vector
from .persist import OrbitDocument, export_csv, read_document, timestamp, write_document
from .pipeline import SolveOptions, solve, stability

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _theta(text: str) -> RotationAngle:
    try:
        return RotationAngle.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _vector(text: str):
    try:
        v = [float(x) for x in text.replace(" ", "").split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}") from exc
    if len(v) != 6:
        raise argparse.ArgumentTypeError("seed needs six comma-separated numbers")
    return v


def _masses(text: str) -> MassSystem:
    try:
        return MassSystem(tuple(float(x) for x in text.split(",")))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _seed(args):
    if args.seed is not None:
        return args.seed
    return list(seed_vector(args.seed_fixture))


def _solve_options(args) -> SolveOptions:
    return SolveOptions(modes=args.modes, quad_nodes=args.quad_nodes, shooting_tol=args.tol,
                        skip_outer=args.skip_outer, cycles=args.cycles)


def build_document(sol, opts: SolveOptions, seed, started: str) -> OrbitDocument:
    orbit = sol.orbit
    s = orbit.samples
    samples = [(float(t), q, v) for t, q, v in zip(s.t, s.q, s.v)]
    diag = dict(shooting_residual=sol.shooting.residual,
                junction=orbit.junction_report,
                circular_action=(circular_action(sol.theta, sol.T).action
                                 if not _circular_undefined(sol.theta) else None))
    if sol.outer is not None:
        d = dict(sol.outer.diagnostics)
        d.pop("history", None)
        diag["outer"] = d
    return OrbitDocument(
        masses=sol.ms.masses, theta=sol.theta, T=sol.T, a_vector=list(map(float, sol.a)),
        initial_state=sol.state, classification=orbit.classification, samples=samples,
        action=sol.value, diagnostics=diag,
        provenance=dict(tool="spbc", version=__version__, options=opts.to_dict(),
                        seed=[float(x) for x in seed], started=started, finished=timestamp(),
                        tolerances=dict(shooting=opts.shooting_tol, inner_gtol=opts.inner_gtol,
                                        integrator=1e-13)),
    )


def _circular_undefined(theta) -> bool:
    return theta.is_degenerate()


def _stability_block(rep) -> dict:
    d = rep.to_dict()
    d["computed"] = timestamp()
    return d


def cmd_solve(args) -> int:
    started = timestamp()
    opts = _solve_options(args)
    seed = _seed(args)
    sol = solve(args.theta, args.T, seed, args.masses, opts)
    doc = build_document(sol, opts, seed, started)
    if args.stability:
        doc.stability = _stability_block(stability(sol.state, sol.theta, sol.T, sol.ms, args.verdict_tol))
    write_document(doc, args.out)
    summary = dict(out=args.out, theta=str(sol.theta), action=sol.value,
                   a_vector=doc.a_vector, classification=doc.classification.to_dict())
    if doc.stability:
        summary["verdict"] = doc.stability["verdict"]
    print(json.dumps(summary, indent=1))
    return EXIT_OK


def cmd_stability(args) -> int:
    doc = read_document(args.document)
    rep = stability(doc.initial_state, doc.theta, doc.T, doc.mass_system, args.verdict_tol,
                    subperiod=args.subperiod)
    doc.stability = _stability_block(rep)
    write_document(doc, args.out or args.document)
    print(f"theta = {doc.theta}   period = {rep.period:g}   verdict = {rep.verdict}")
    print(f"symplectic residual {rep.symplectic_residual:.3e}   closure {rep.closure:.3e}")
    print("W eigenvalues (trivial pair first):")
    for w in rep.W_eigenvalues:
        print(f"  {w.real: .9f} {w.imag:+.3e}i")
    return EXIT_OK


def cmd_classify(args) -> int:
    print(json.dumps(dict(theta=str(args.theta), **classify_angle(args.theta).to_dict()), indent=1))
    return EXIT_OK


def _sweep_job(job):
    theta_text, T, seed, opts, with_stab, tol, out_dir, masses = job
    theta = RotationAngle.parse(theta_text)
    row = dict(theta=theta_text, action=None, circular_action=None, kind=None, period=None,
               verdict=None, status="ok", error="")
    ms = MassSystem(masses)
    try:
        if not _circular_undefined(theta):
            row["circular_action"] = circular_action(theta, T).action
        row["kind"] = classify_angle(theta).kind
        row["period"] = classify_angle(theta).period_multiple
        started = timestamp()
        sol = solve(theta, T, seed, ms, opts)
        doc = build_document(sol, opts, seed, started)
        row["action"] = sol.value
        if with_stab:
            doc.stability = _stability_block(stability(sol.state, theta, T, ms, tol))
            row["verdict"] = doc.stability["verdict"]
        write_document(doc, os.path.join(out_dir, f"orbit_{theta_text.replace('/', '_')}.json"))
    except SPBCError as exc:
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


SWEEP_FIELDS = ["theta", "action", "circular_action", "kind", "period", "verdict", "status", "error"]


def cmd_sweep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    opts = _solve_options(args)
    seed = _seed(args)
    jobs = [(t.strip(), args.T, seed, opts, args.stability, args.verdict_tol, args.out,
             args.masses.masses) for t in args.theta_list]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    path = os.path.join(args.out, "summary.csv")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} angles, {failed} failed; summary in {path}")
    return EXIT_OK


def cmd_circular(args) -> int:
    c = circular_action(args.theta, args.T)
    print(json.dumps(dict(theta=str(args.theta), action=c.action, radius=c.radius,
                          period=c.period, a_vector=list(map(float, c.a_circ)),
                          outside_reference_range=c.outside_reference_range), indent=1))
    return EXIT_OK


def cmd_testpath(args) -> int:
    bp = BoundaryParams(_seed(args), args.T, args.theta)
    print(json.dumps(dict(theta=str(args.theta), a_vector=list(bp.a),
                          action=test_path_action(bp, args.masses)), indent=1))
    return EXIT_OK


def cmd_export(args) -> int:
    doc = read_document(args.document)
    n = export_csv(doc, args.out)
    print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spbc", description="Four-body periodic orbits from boundary-parameter minimization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, theta=True):
        if theta:
            sp.add_argument("--theta", type=_theta, required=True,
                            help="P/Q for (P/Q) pi, or radians as a decimal")
        sp.add_argument("--T", type=float, default=1.0, help="half-step time (default 1)")
        sp.add_argument("--masses", type=_masses, default=EQUAL_MASSES,
                        help="four comma-separated masses (default all 1)")

    def seeds(sp):
        sp.add_argument("--seed", type=_vector, default=None, help="six boundary parameters")
        sp.add_argument("--seed-fixture", default="test-path", choices=sorted(SEED_ALIASES))

    def solver(sp):
        sp.add_argument("--modes", type=int, default=32)
        sp.add_argument("--quad-nodes", type=int, default=512)
        sp.add_argument("--tol", type=float, default=1e-10, help="shooting residual target")
        sp.add_argument("--cycles", type=int, default=None)
        sp.add_argument("--skip-outer", action="store_true",
                        help="shoot from the seed fiber without outer minimization")
        sp.add_argument("--stability", action="store_true", help="also run the stability test")
        sp.add_argument("--verdict-tol", type=float, default=1e-3)

    s = sub.add_parser("solve", help="solve, polish and assemble one orbit")
    common(s)
    seeds(s)
    solver(s)
    s.add_argument("--out", default="orbit.json")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("stability", help="monodromy verdict for a solved document")
    s.add_argument("document")
    s.add_argument("--verdict-tol", "--tol", dest="verdict_tol", type=float, default=1e-3)
    s.add_argument("--subperiod", action="store_true",
                   help="integrate 8T and take a matrix power (faster)")
    s.add_argument("--out", default=None, help="write the updated document here")
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("classify", help="orbit type and minimal period for an angle")
    s.add_argument("--theta", type=_theta, required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("sweep", help="solve a list of angles")
    s.add_argument("--theta", dest="theta_list", type=lambda x: [t for t in x.split(",") if t.strip()],
                   required=True, help="comma-separated list, e.g. 2/5,3/7,4/9 (may be empty)")
    common(s, theta=False)
    seeds(s)
    solver(s)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="sweep")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("circular", help="circular benchmark action")
    common(s)
    s.set_defaults(func=cmd_circular)

    s = sub.add_parser("testpath", help="action of the straight test path")
    common(s)
    seeds(s)
    s.set_defaults(func=cmd_testpath)

    s = sub.add_parser("export", help="write document samples as CSV")
    s.add_argument("document")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "sweep":
        for t in args.theta_list:
            try:
                RotationAngle.parse(t)
            except ValueError as exc:
                parser.error(f"bad angle {t!r}: {exc}")
    try:
        return args.func(args)
    except DegenerateAngle as exc:
        print(f"spbc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SPBCError as exc:
        json.dump(dict(error=type(exc).__name__, message=str(exc)), sys.stderr)
        sys.stderr.write("\n")
        return EXIT_SOLVER
    except (OSError, ValueError, KeyError) as exc:
        print(f"spbc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
