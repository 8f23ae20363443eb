"""Command-line front end: ``verify``, ``sweep``, ``covariance`` and ``catalog``.

Exit codes: 0 all checks passed, 1 a statistical check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import fnmatch
import io
import json
import sys

from . import __version__
from .catalog import catalog_all, export_json
from .core import DiffPow, KConst, ONE, Separable, since_start
from .montecarlo import (
    PILOT_N, check_many, covariance_experiment, default_factor, sweep_many,
)

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

KERNELS = {
    "one": KConst(1.0),
    "arg1": Separable((since_start(1),)),
    "arg2": Separable((ONE, since_start(1))),
    "diff": DiffPow(0, 1, 1),
}


class UsageError(Exception):
    pass


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(p, steps_default="1024", paths_default=10_000):
    p.add_argument("--t", type=float, default=0.0, help="interval start")
    p.add_argument("--T", type=float, default=1.0, help="interval end")
    p.add_argument("--steps", type=_ints, default=_ints(steps_default),
                   help="partition steps N (comma list for sweeps)")
    p.add_argument("--paths", type=int, default=paths_default, help="Monte Carlo paths M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--output", "-o", default=None, help="write report here instead of stdout")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall times (not reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itoreorder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check identities against the calibrated envelope")
    p.add_argument("--identity", default="*", help="glob over catalog ids")
    _common(p)
    p.add_argument("--refine", type=int, default=4, help="left-side grid refinement factor")
    p.add_argument("--pilot-steps", type=int, default=PILOT_N)
    p.add_argument("--factor", type=float, default=None,
                   help="envelope factor (default 10, 20 for jump drivers)")

    p = sub.add_parser("sweep", help="ms_error over several N and the fitted log-log slope")
    p.add_argument("--identity", required=True, help="glob over catalog ids")
    _common(p, steps_default="256,512,1024,2048")
    p.add_argument("--refine", type=int, default=4)
    p.add_argument("--expect-slope", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                   help="exit 1 unless every fitted slope lies in [LO, HI]")

    p = sub.add_parser("covariance", help="E{IJ} for reversed and forward kernel integrals")
    p.add_argument("--phi1", choices=sorted(KERNELS), default="one")
    p.add_argument("--phi2", choices=sorted(KERNELS), default="one")
    p.add_argument("--i1", type=int, default=1)
    p.add_argument("--i2", type=int, default=1)
    p.add_argument("--nodes", type=int, default=513)
    p.add_argument("--sigmas", type=float, default=4.0)
    _common(p, steps_default="512", paths_default=100_000)

    p = sub.add_parser("catalog", help="list catalog identities")
    p.add_argument("--filter", default="*", help="glob over catalog ids")
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--output", "-o", default=None)
    return parser


# ---------------------------------------------------------------------------
# rendering


def _table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _render(fmt, header, rows, doc) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        return _csv(header, rows)
    return _table(header, rows)


def _emit(text: str, output) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# settings that never change results stay out of reports
_UNREPORTED = ("output", "timing", "threads")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNREPORTED}


def _doc(command, args, results) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "itoreorder",
        "version": __version__,
        "command": command,
        "config": _config(args),
        "results": results,
    }


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6g}"


# ---------------------------------------------------------------------------
# commands


def _match(pattern, interval):
    try:
        catalog = catalog_all(interval)
    except ValueError as exc:
        raise UsageError(str(exc))
    hits = [i for i in catalog if fnmatch.fnmatchcase(i.id, pattern)]
    if not hits:
        raise UsageError(f"unknown identity {pattern!r}")
    return hits


def _check_run(args, min_paths=100):
    if not args.t < args.T:
        raise UsageError(f"need t < T, got t={args.t}, T={args.T}")
    if any(n < 2 for n in args.steps):
        raise UsageError("need N >= 2")
    if args.paths < min_paths:
        raise UsageError(f"need at least {min_paths} paths")
    if args.threads < 1:
        raise UsageError("need at least one thread")


def cmd_verify(args) -> int:
    _check_run(args)
    if len(args.steps) != 1:
        raise UsageError("verify takes a single --steps value")
    if args.refine < 1 or args.pilot_steps < 2:
        raise UsageError("refine and pilot steps must be positive")
    N = args.steps[0]
    hits = _match(args.identity, (args.t, args.T))
    factor = default_factor if args.factor is None else args.factor
    reports = check_many(hits, N, args.paths, args.seed, factor, args.pilot_steps, args.refine,
                         args.threads)
    header = ["identity_id", "citation", "N", "M", "seed", "ms_error", "ci95_lo", "ci95_hi",
              "median", "envelope", "pass"]
    rows = [[r.identity_id, r.citation, r.N, r.M, r.seed, _fmt(r.ms_error), _fmt(r.ci95[0]),
             _fmt(r.ci95[1]), _fmt(r.median), _fmt(r.envelope), r.passed] for r in reports]
    doc = _doc("verify", args, [r.to_dict(args.timing) for r in reports])
    _emit(_render(args.format, header, rows, doc), args.output)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAIL {r.identity_id}: ms_error {r.ms_error:.3e} > envelope {r.envelope:.3e}",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_sweep(args) -> int:
    _check_run(args)
    if len(set(args.steps)) < 3:
        raise UsageError("a sweep needs at least three distinct --steps values")
    hits = _match(args.identity, (args.t, args.T))
    reports = sweep_many(hits, args.steps, args.paths, args.seed, args.refine, args.threads)
    cites = {i.id: i.citation for i in hits}
    header = ["identity_id", "citation", "N", "seed", "ms_error", "ci95_lo", "ci95_hi",
              "fitted_slope"]
    rows = [[rep.identity_id, cites[rep.identity_id], r.N, r.seed, _fmt(r.ms_error),
             _fmt(r.ci95[0]), _fmt(r.ci95[1]), _fmt(rep.fitted_slope)]
            for rep in reports for r in rep.rows]
    results = [{"citation": cites[rep.identity_id], **rep.to_dict(args.timing)} for rep in reports]
    _emit(_render(args.format, header, rows, _doc("sweep", args, results)), args.output)
    if args.expect_slope is None:
        return EXIT_OK
    lo, hi = args.expect_slope
    failed = [r for r in reports if not lo <= r.fitted_slope <= hi]
    for r in failed:
        print(f"FAIL {r.identity_id}: slope {r.fitted_slope:.3f} outside [{lo}, {hi}]",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_covariance(args) -> int:
    _check_run(args, min_paths=2)
    if len(args.steps) != 1:
        raise UsageError("covariance takes a single --steps value")
    if args.i1 < 1 or args.i2 < 1:
        raise UsageError("components are numbered from 1")
    if args.nodes < 2:
        raise UsageError("need at least two quadrature nodes")
    rep = covariance_experiment(KERNELS[args.phi1], KERNELS[args.phi2], args.i1, args.i2,
                                args.steps[0], args.paths, args.seed, (args.t, args.T),
                                args.nodes, args.threads)
    ok = rep.within(args.sigmas)
    header = ["phi1", "phi2", "i1", "i2", "N", "M", "seed", "mc_estimate", "stderr", "ci95_lo",
              "ci95_hi", "quadrature", "target", "z", "pass"]
    row = [args.phi1, args.phi2, rep.i1, rep.i2, rep.N, rep.M, rep.seed, _fmt(rep.mc_estimate),
           _fmt(rep.stderr), _fmt(rep.ci95[0]), _fmt(rep.ci95[1]), _fmt(rep.quadrature),
           _fmt(rep.target), _fmt(rep.z), ok]
    result = {"phi1": args.phi1, "phi2": args.phi2, **rep.to_dict(), "pass": ok}
    _emit(_render(args.format, header, [row], _doc("covariance", args, [result])), args.output)
    if not ok:
        print(f"FAIL covariance: |z| = {abs(rep.z):.2f} > {args.sigmas}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_catalog(args) -> int:
    hits = [i for i in catalog_all() if fnmatch.fnmatchcase(i.id, args.filter)]
    if args.format == "json":
        text = export_json(hits) + "\n"
    else:
        header = ["id", "citation", "k", "drivers"]
        rows = [[i.id, i.citation, i.k, ";".join(d.describe() for d in i.drivers)] for i in hits]
        if args.format == "table":
            header = header + ["formula"]
            rows = [r + [i.formula] for r, i in zip(rows, hits)]
        text = _render(args.format, header, rows, None)
    _emit(text, args.output)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "sweep": cmd_sweep, "covariance": cmd_covariance,
            "catalog": cmd_catalog}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
