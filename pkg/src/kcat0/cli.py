"""Command-line front end.

Subcommands: certify, distance, mconvex, linetype, limits, example36,
selftest.  Reports are JSON (schema ``kcat0/1``) with every numeric
carrying its method tags; convergence tables can also be written as CSV.
Identical argv and seed produce byte-identical reports, so no wall-clock
data ever goes into a report.

Exit codes: 0 success, 1 error, 2 when a certificate verdict is
``violation-certified`` (so shell scripts can branch on it).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import cat0, convexity, limits, metric
from .domains import (
    Ball,
    DefiningFunction,
    HalfPlane,
    Polydisk,
    Product,
    RealPolynomial,
    domain_from_json,
    right_half_plane,
    sector,
    unit_disk,
    upper_half_plane,
)
from .errors import KCat0Error
from .limits import example36_domain
from .points import parse_point

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


def builtin_domain(name: str):
    builtins = {
        "disk": unit_disk,
        "halfplane": upper_half_plane,
        "rhp": right_half_plane,
        "sector-quarter": lambda: sector(0.0, 0.0, math.pi / 2),
        "ball2": lambda: Ball(np.zeros(2, dtype=complex), 1.0),
        "polydisk2": lambda: Polydisk(np.zeros(2, dtype=complex), np.ones(2)),
        "halfplane-x-disk": lambda: Product(upper_half_plane(), unit_disk()),
        "sector-x-disk": lambda: Product(sector(0.0, 0.0, math.pi / 2), unit_disk()),
        "rhp-x-rhp": lambda: Product(right_half_plane(), right_half_plane()),
        "example36": example36_domain,
    }
    if name not in builtins:
        raise KCat0Error(f"unknown builtin domain {name!r}; "
                         f"choose from {sorted(builtins)}")
    return builtins[name]()


def load_domain(args) -> object:
    if getattr(args, "builtin", None):
        return builtin_domain(args.builtin)
    if getattr(args, "domain", None):
        try:
            with open(args.domain) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise KCat0Error(
                f"malformed domain JSON at {args.domain}:{exc.lineno}:{exc.colno}: {exc.msg}")
        return domain_from_json(data)
    raise KCat0Error("provide --builtin or --domain")


def write_report(report, args) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "csv" and hasattr(report, "to_csv"):
        payload = report.to_csv()
    else:
        data = report if isinstance(report, dict) else report.to_json()
        payload = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def cmd_certify(args) -> int:
    if args.mode == "midpoint":
        D = load_domain(args)
        cert = cat0.midpoint_defect(D, parse_point(args.x), parse_point(args.y),
                                    parse_point(args.z), tol=args.tol)
        write_report(cert, args)
        return EXIT_VIOLATION if cert.verdict == "violation-certified" else EXIT_OK
    if args.mode == "product":
        left = builtin_domain(args.left)
        right = builtin_domain(args.right)
        base = parse_point(args.base) if args.base else None
        cert = cat0.product_certificate(left, right, parse_point(args.x),
                                        parse_point(args.y), seed=args.seed, base=base)
        write_report(cert, args)
        return EXIT_VIOLATION if cert.verdict == "violation-certified" else EXIT_OK
    if args.mode == "comparison":
        D = load_domain(args)
        report = cat0.comparison_test(D, parse_point(args.a), parse_point(args.b),
                                      parse_point(args.c),
                                      sample_count=args.samples, seed=args.seed)
        write_report(report, args)
        return EXIT_VIOLATION if report.max_slack > args.tol else EXIT_OK
    raise KCat0Error(f"unknown certify mode {args.mode!r}")


def cmd_distance(args) -> int:
    D = load_domain(args)
    interval = metric.distance(D, parse_point(args.from_), parse_point(args.to))
    report = {
        "schema": "kcat0/1",
        "kind": "distance",
        "from": args.from_,
        "to": args.to,
        "distance": {"value": interval.midpoint, "lo": interval.lo, "hi": interval.hi,
                     "method": sorted(interval.methods),
                     "tol": interval.width},
    }
    write_report(report, args)
    sys.stdout.write(f"{interval.midpoint:.6f}\n")
    return EXIT_OK


def cmd_mconvex(args) -> int:
    D = load_domain(args)
    report = convexity.local_m_convex_check(
        D, window_radius=args.window, m=args.m,
        sample_count=args.samples, seed=args.seed, target_c=args.target_c)
    write_report(report, args)
    return EXIT_OK


_BUILTIN_POLYS = {
    # |z|^2 - 1 on C^2 (the unit ball)
    "ball2": {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0,
              (0, 0, 2, 0): 1.0, (0, 0, 0, 2): 1.0, (0, 0, 0, 0): -1.0},
    # -Im z1 + |z2|^4
    "quartic": {(0, 1, 0, 0): -1.0, (0, 0, 4, 0): 1.0, (0, 0, 0, 4): 1.0,
                (0, 0, 2, 2): 2.0},
}


def cmd_linetype(args) -> int:
    if args.builtin_r:
        poly = RealPolynomial(2, _BUILTIN_POLYS[args.builtin_r])
        r = DefiningFunction.from_polynomial(poly)
    else:
        try:
            with open(args.polynomial) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise KCat0Error(
                f"malformed polynomial JSON at {args.polynomial}:{exc.lineno}:{exc.colno}: {exc.msg}")
        r = DefiningFunction.from_polynomial(RealPolynomial.from_json(data))
    result = convexity.line_type(r, parse_point(args.point), cap=args.cap)
    write_report(result, args)
    return EXIT_OK


def cmd_limits(args) -> int:
    if args.experiment == "dilation-disk":
        seq = limits.dilation_sequence(unit_disk(), unit_disk(),
                                       factor=lambda n: 1.0 + 1.0 / n)
        pairs = [(parse_point(p.split(":")[0]), parse_point(p.split(":")[1]))
                 for p in args.pairs] if args.pairs else [([0.0], [0.5])]
        table = limits.convergence_check(seq, unit_disk(), pairs, args.n)
        write_report(table, args)
        return EXIT_OK
    if args.experiment == "lemma32":
        D = load_domain(args)
        seq = limits.scaling_lemma32(D)
        report = seq.to_json(args.n)
        readings = [limits.hausdorff(seq.domain(n), seq.claimed_limit, args.window,
                                     directions=args.directions) for n in args.n]
        report["hausdorff_readings"] = [
            {"n": int(n), **r.to_json()} for n, r in zip(args.n, readings)]
        write_report(report, args)
        return EXIT_OK
    if args.experiment in ("frankel-flat", "frankel-quartic"):
        if args.experiment == "frankel-flat":
            f = lambda x, z: x * x + (math.exp(-1.0 / abs(z)) if z != 0 else 0.0)
        else:
            f = lambda x, z: x * x + abs(z) ** 4
        result = limits.frankel_2b(f, args.n, window_radius=args.window,
                                   hausdorff_directions=args.directions,
                                   seed=args.seed)
        write_report(result, args)
        return EXIT_OK
    raise KCat0Error(f"unknown limits experiment {args.experiment!r}")


def cmd_example36(args) -> int:
    report = limits.example36(n_list=tuple(args.n), big_n=args.big_n,
                              seed=args.seed, mconvex_samples=args.samples,
                              hausdorff_directions=args.directions)
    write_report(report, args)
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # report, do not abort the battery
            checks.append((name, False, str(exc)))

    ln3_half = 0.5 * math.log(3.0)
    check("disk distance 0 to 0.5",
          lambda: _assert_close(metric.distance(unit_disk(), [0.0], [0.5]).midpoint,
                                ln3_half, 1e-12))
    check("half-plane distance i to 4i",
          lambda: _assert_close(metric.distance(upper_half_plane(), [1j], [4j]).midpoint,
                                math.log(2.0), 1e-12))
    check("product formula on H x D",
          lambda: _assert_close(
              metric.distance(Product(upper_half_plane(), unit_disk()),
                              [1j, 0.0], [4j, 1.0 / 3.0]).midpoint,
              math.log(2.0), 1e-12))
    check("observation product certificate",
          lambda: _assert_close(
              cat0.product_certificate(upper_half_plane(), unit_disk(),
                                       [1j], [4j], base=[0.0]).defect,
              (0.5 * math.log(2.0)) ** 2, 1e-9))
    check("triangle inequality on the ball",
          _ball_triangle_spotcheck)

    for name, ok, msg in checks:
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {name}{(': ' + msg) if msg else ''}\n")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_ERROR


def _assert_close(a, b, tol):
    if abs(a - b) > tol:
        raise KCat0Error(f"{a!r} != {b!r} within {tol!r}")


def _ball_triangle_spotcheck():
    rng = np.random.default_rng(7)
    D = Ball(np.zeros(2, dtype=complex), 1.0)
    for _ in range(50):
        pts = []
        while len(pts) < 3:
            raw = rng.normal(size=4)
            z = (raw[:2] + 1j * raw[2:]) * 0.4
            if D.contains(z):
                pts.append(z)
        dxy = metric.distance(D, pts[0], pts[1]).midpoint
        dxz = metric.distance(D, pts[0], pts[2]).midpoint
        dzy = metric.distance(D, pts[2], pts[1]).midpoint
        if dxy > dxz + dzy + 1e-9:
            raise KCat0Error("triangle inequality failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcat0",
                                     description="Kobayashi / CAT(0) toolbox")
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("KCAT0_SEED", "0")))
    parser.add_argument("--output", "-o", default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")

    # the same options are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common],
                       help="midpoint / product / comparison certificates")
    p.add_argument("--mode", choices=("midpoint", "product", "comparison"),
                   default="midpoint")
    p.add_argument("--builtin")
    p.add_argument("--domain")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--z")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--c")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--base")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("distance", parents=[common], help="Kobayashi distance between two points")
    p.add_argument("--builtin")
    p.add_argument("--domain")
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", required=True)
    p.set_defaults(fn=cmd_distance)

    p = sub.add_parser("mconvex", parents=[common], help="empirical local m-convexity check")
    p.add_argument("--builtin")
    p.add_argument("--domain")
    p.add_argument("--window", type=float, default=2.0)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--target-c", type=float, default=None)
    p.set_defaults(fn=cmd_mconvex)

    p = sub.add_parser("linetype", parents=[common], help="line type of a boundary point")
    p.add_argument("--polynomial")
    p.add_argument("--builtin-r", choices=sorted(_BUILTIN_POLYS))
    p.add_argument("--point", required=True)
    p.add_argument("--cap", type=int, default=16)
    p.set_defaults(fn=cmd_linetype)

    p = sub.add_parser("limits", parents=[common], help="scaling and convergence experiments")
    p.add_argument("--experiment", required=True,
                   choices=("dilation-disk", "lemma32", "frankel-flat", "frankel-quartic"))
    p.add_argument("--builtin")
    p.add_argument("--domain")
    p.add_argument("--n", type=int, nargs="+", default=[10, 100, 1000])
    p.add_argument("--pairs", nargs="*",
                   help="pairs as 'a+bi,...:c+di,...' (from:to)")
    p.add_argument("--window", type=float, default=1.0)
    p.add_argument("--directions", type=int, default=1024)
    p.set_defaults(fn=cmd_limits)

    p = sub.add_parser("example36", parents=[common], help="run the intersection-of-balls pipeline")
    p.add_argument("--n", type=int, nargs="+", default=[1, 10, 100])
    p.add_argument("--big-n", type=int, default=10 ** 6)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--directions", type=int, default=2048)
    p.set_defaults(fn=cmd_example36)

    p = sub.add_parser("selftest", parents=[common], help="run the quick invariant battery")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except KCat0Error as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
