from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from . import serialize
from .diagram import SliceSpec, compute_rows, curves_for, eval_record, write_csv, write_curves_csv, write_json
from .energy import WellParams, parse_theta
from .errors import DomainError, ThetaError, TwoWellError
from .laminate import build_laminate, laminate_to_dict, verify_laminate
from .mat2 import as_mat2
from .oracle import run_verify
from .settings import settings

log = logging.getLogger("twowell")

# exit codes
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _emit(doc) -> None:
    sys.stdout.write(serialize.dumps(doc))
    sys.stdout.write("\n")


def _range(values: Sequence[float], name: str):
    lo, hi, n = values
    if n != int(n):
        raise DomainError(f"--{name}: N must be an integer, got {n}")
    return (float(lo), float(hi), int(n))


# ---------- commands ----------

def cmd_eval(args: argparse.Namespace) -> int:
    F = as_mat2(args.matrix)
    _emit(eval_record(F, WellParams(args.lam), parse_theta(args.theta)))
    return EXIT_OK


def cmd_phase_diagram(args: argparse.Namespace) -> int:
    spec = SliceSpec(
        a_range=_range(args.a, "a"),
        b_range=_range(args.b, "b"),
        lam=args.lam,
        theta=args.theta,
    )
    rows = compute_rows(spec, args.threads)
    curves = curves_for(spec)
    if args.format == "json":
        write_json(spec, rows, curves, args.out)
    else:
        write_csv(rows, args.out)
        if args.curves_out:
            write_curves_csv(curves, args.curves_out)
    log.info("phase diagram: %s rows -> %s (%s)", len(rows), args.out, args.format)
    _emit({
        "schema_version": serialize.SCHEMA_VERSION,
        "rows": len(rows),
        "out": args.out,
        "format": args.format,
        "curves_out": args.curves_out,
    })
    return EXIT_OK


def cmd_laminate(args: argparse.Namespace) -> int:
    F = as_mat2(args.matrix)
    p = WellParams(args.lam)
    th = parse_theta(args.theta)
    lam = build_laminate(F, p)
    rep = verify_laminate(lam, p, th)
    ok = rep.passed(1e-6)
    _emit({
        "schema_version": serialize.SCHEMA_VERSION,
        "laminate": laminate_to_dict(lam, p, th),
        "report": rep.to_dict(),
        "passed": ok,
    })
    return EXIT_OK if ok else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    p = WellParams(args.lam)
    reports = run_verify(p, seed=args.seed, samples=args.samples, quick=args.quick)
    ok = all(r.passed for r in reports)
    _emit({
        "schema_version": serialize.SCHEMA_VERSION,
        "lambda": p.lam,
        "seed": args.seed,
        "samples": args.samples,
        "quick": args.quick,
        "passed": ok,
        "suites": [r.to_dict() for r in reports],
    })
    return EXIT_OK if ok else EXIT_FAILED


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(
        "twowell.api:app",
        host=args.host,
        port=args.port,
        reload=args.reload,
        log_level=settings.LOG_LEVEL.lower(),
    )
    return EXIT_OK


# ---------- parser ----------

def _add_matrix_flags(sp: argparse.ArgumentParser, theta: str) -> None:
    sp.add_argument("--matrix", nargs=4, type=float, required=True, metavar=("F11", "F12", "F21", "F22"),
                    help="2x2 matrix, row-major")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.5, help="well parameter, > 1")
    sp.add_argument("--theta", default=theta, help="zero | indicator_det1 | log_squared | table:t0=v0,t1=v1,...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twowell", description="Relaxed two-well energy in 2D")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="W, Wqc, coordinates and region of one matrix")
    _add_matrix_flags(sp, "zero")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("phase-diagram", help="grid over F = (a b; 0 1/a)")
    sp.add_argument("--a", nargs=3, type=float, default=[0.4, 2.0, 201], metavar=("LO", "HI", "N"))
    sp.add_argument("--b", nargs=3, type=float, default=[-1.0, 1.0, 201], metavar=("LO", "HI", "N"))
    sp.add_argument("--lambda", dest="lam", type=float, default=1.5)
    sp.add_argument("--theta", default="indicator_det1")
    sp.add_argument("--out", required=True, help="output file")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--curves-out", dest="curves_out", default=None, help="CSV of the K^qc boundary polylines")
    sp.add_argument("--threads", type=int, default=None, help=f"worker threads (default {settings.THREADS})")
    sp.set_defaults(func=cmd_phase_diagram)

    sp = sub.add_parser("laminate", help="optimal laminate of one matrix, with its verification report")
    _add_matrix_flags(sp, "zero")
    sp.set_defaults(func=cmd_laminate)

    sp = sub.add_parser("verify", help="run every oracle probe")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.5)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--quick", action="store_true", help="a tenth of the samples")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("serve", help="run the HTTP API")
    sp.add_argument("--host", default=settings.API_HOST)
    sp.add_argument("--port", type=int, default=settings.API_PORT)
    sp.add_argument("--reload", action="store_true", default=settings.API_RELOAD)
    sp.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ThetaError) as e:
        # bad lambda, theta, matrix or ranges
        log.error("%s: %s", args.command, e)
        return EXIT_USAGE
    except OSError as e:
        log.error("%s: cannot write output: %s", args.command, e)
        return EXIT_IO
    except TwoWellError:
        log.exception("%s failed", args.command)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
