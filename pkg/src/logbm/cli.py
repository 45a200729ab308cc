"""Command-line experiment runner.

Every command prints one JSON document (or CSV rows) whose bytes depend only
on the configuration: keys are sorted, the seed is explicit and each report
row carries the SHA-256 of the inputs and the package version.

Exit status: 0 on success, 1 for an invalid configuration, 2 when an input
violates a geometric precondition, 3 when an enumeration hits its cap.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidParameter, PreconditionViolation, ResourceLimit, Unsupported
from .report import ReportRow, rows_to_csv
from .serialize import body_from_json, dumps, inputs_hash, load_json, load_pair

EXIT_INVALID, EXIT_PRECONDITION, EXIT_RESOURCE = 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _count(text):
    """Sample counts accept scientific notation such as ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"not a positive integer: {text}")
    return int(value)


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from None


def _need_seed(args):
    if args.seed is None:
        raise InvalidParameter("--seed is required for this command")
    return args.seed


def _envelope(args, config, rows, result):
    h = inputs_hash(config)
    rows = [ReportRow(name, h, value, stderr, samples, args_seed)
            for name, value, stderr, samples, args_seed in rows]
    return {"command": config["command"], "version": __version__, "seed": config.get("seed"),
            "inputs_hash": h, "config": config, "rows": [r.to_json() for r in rows],
            "result": result}, rows


# ---------------------------------------------------------------------------
# commands


def cmd_bodies_gen(args):
    from . import bodies as B

    n = args.n
    kind = args.kind
    config = {"command": "bodies gen", "kind": kind, "n": n, "scales": args.scales,
              "depth": args.depth, "seed": args.seed, "dilate": args.dilate, "diag": args.diag}
    if kind == "box":
        body = B.make_box(args.scales or [1.0] * n)
    elif kind == "cross":
        body = B.make_cross(args.scales or [1.0] * n)
    elif kind in ("K0", "C0"):
        a = corner_boxes(n)[0 if kind == "K0" else 1]
        body = B.make_box(a)
    elif kind == "cutbox":
        if args.depth is None:
            raise InvalidParameter("--depth is required for cutbox")
        body = B.cut_corners(B.make_box(args.scales or [1.0] * n), args.depth)
    elif kind == "unconditional":
        body = B.random_unconditional_polytope(n, _need_seed(args))
    elif kind == "symmetric":
        body = B.random_symmetric_polytope(n, _need_seed(args))
    else:
        raise InvalidParameter(f"unknown body kind {kind}")
    if args.dilate is not None or args.diag is not None:
        M = args.dilate * np.eye(body.dim) if args.dilate is not None else np.diag(args.diag)
        out = {"K": body.to_json(), "C": body.linear_image(M).to_json()}
    else:
        out = body.to_json()
    out["meta"] = {"inputs_hash": inputs_hash(config), "version": __version__, "seed": args.seed,
                   "config": config}
    return out, []


def corner_boxes(n):
    """Half-widths of the two boxes whose half-half logarithmic sum is the unit cube."""
    k = 2.0 ** (n - 1)
    return [1.0 / k] + [2.0] * (n - 1), [k] + [0.5] * (n - 1)


def cmd_ineq_check(args):
    from .bodies import is_unconditional
    from .logops import coordinatewise_product, l0_sum
    from .measure import (bm_gap, homothetic_distance, log_minkowski_gap, minkowski_gap, volume,
                          volume_mc)

    seed = _need_seed(args)
    K, C, raw = load_pair(args.pair)
    lam = args.lam
    config = {"command": "ineq check", "pair": {"K": raw["K"], "C": raw["C"]}, "lambda": lam,
              "samples": args.samples, "seed": seed, "grid": args.grid}
    VK = volume(K, args.samples, seed)
    VC = volume(C, args.samples, seed)
    denom = VK.value ** (1 - lam) * VC.value ** lam
    rows = []
    W = l0_sum(K, C, lam, grid=args.grid)
    VW = volume(W, args.samples, seed)
    rows.append(("log_bm_excess", VW.value / denom - 1, VW.stderr / denom, VW.samples, seed))
    if is_unconditional(K) and is_unconditional(C) and 0 < lam < 1:
        P = coordinatewise_product(K, C, lam)
        VP = volume(P, args.samples, seed) if P.is_polytope else volume_mc(P, args.samples, seed)
        rows.append(("product_excess", VP.value / denom - 1, VP.stderr / denom, VP.samples, seed))
    try:
        rows.append(("bm_gap", bm_gap(K, C, 1 - lam, lam), 0.0, 0, seed))
        rows.append(("minkowski_gap", minkowski_gap(K, C, args.samples, seed), 0.0, 0, seed))
        rows.append(("log_minkowski_gap", log_minkowski_gap(K, C, args.samples, seed), 0.0, 0, seed))
    except Unsupported:
        pass
    A, sigma = homothetic_distance(K, C, args.samples, seed)
    rows.append(("homothetic_distance", A, 0.0, 0, seed))
    tol = 1e-9
    ok = all(v >= -tol - 3 * s for name, v, s, _, _ in rows if name != "homothetic_distance")
    result = {"all_nonnegative": ok, "volume_ratio": sigma}
    return _envelope(args, config, rows, result)


def cmd_stability_run(args):
    from .stability import stability_report

    seed = _need_seed(args)
    K, C, raw = load_pair(args.input)
    config = {"command": "stability run", "pair": {"K": raw["K"], "C": raw["C"]}, "lambda": args.lam,
              "tau": args.tau, "c": args.c, "samples": args.samples, "seed": seed,
              "method": args.method}
    rep = stability_report(K, C, lam=args.lam, tau=args.tau, c=args.c, samples=args.samples,
                           seed=seed, method=args.method)
    rows = [("eps", rep.eps, rep.eps_stderr, args.samples if args.method == "mc" else 0, seed),
            ("delta", rep.delta, 0.0, 0, seed), ("bound", rep.bound, 0.0, 0, seed),
            ("ratio", rep.ratio, 0.0, 0, seed)]
    result = rep.to_json()
    result["caveat"] = "the constant c is not fixed by the theory; bound uses the configured c"
    return _envelope(args, config, rows, result)


def cmd_coxeter_table(args):
    from .coxeter import chamber_generators, chamber_transfer, group_order, root_orbit

    rs = chamber_generators(args.type, args.rank)
    config = {"command": "coxeter table", "type": args.type, "rank": args.rank}
    V = rs.generators
    VV = V @ V.T
    off = ~np.eye(rs.rank, dtype=bool)
    Phi, cert = chamber_transfer(V)
    orbit = root_orbit(rs)
    result = {
        "name": rs.name, "rank": rs.rank, "roots": rs.roots, "generators": V,
        "gram_roots_generators": rs.gram(), "gram_generators": VV,
        "checks": rs.check(), "transfer": Phi, "transfer_min_coordinate": cert.min_coordinate,
        "max_norm_squared": float(np.diag(VV).max()), "min_offdiag_inner": float(VV[off].min()),
        "root_orbit_size": len(orbit), "group_order": group_order(rs),
    }
    rows = [("max_norm_squared", result["max_norm_squared"], 0.0, 0, None),
            ("min_offdiag_inner", result["min_offdiag_inner"], 0.0, 0, None),
            ("root_orbit_size", float(len(orbit)), 0.0, 0, None)]
    return _envelope(args, config, rows, result)


def cmd_pl_check(args):
    from .prekopa import GridDensity, pl_excess, pl_stability_distance, shift_grid, sup_convolution
    from .stability import omega_lambda

    fj, gj = load_json(args.f), load_json(args.g)
    try:
        f, g = GridDensity.from_json(fj), GridDensity.from_json(gj)
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidParameter(f"bad grid density: {exc}") from None
    config = {"command": "pl check", "f": fj, "g": gj, "lambda": args.lam, "c": args.c,
              "shift_extent": args.shift_extent, "shift_step": args.shift_step, "seed": args.seed}
    h = sup_convolution(f, g, args.lam)
    eps = pl_excess(f, g, args.lam, h)
    fn, gn = f.normalized(), g.normalized()
    w, dist = pl_stability_distance(fn, gn, shift_grid(args.shift_extent, args.shift_step, f.dim))
    omega = omega_lambda(max(eps, 0.0), args.lam, f.dim, args.c)
    ratio = dist / omega if omega > 0 else None
    result = {"excess": eps, "shift": w, "distance": dist, "omega": omega, "ratio": ratio,
              "mass_h": h.mass, "caveat": "the constant c is not fixed by the theory"}
    rows = [("pl_excess", eps, 0.0, 0, args.seed), ("pl_distance", dist, 0.0, 0, args.seed)]
    return _envelope(args, config, rows, result)


def cmd_example_boxcut(args):
    from .bodies import cut_corners, make_box
    from .logops import l0_sum
    from .measure import volume_exact, volume_mc

    seed = _need_seed(args)
    n, eps = args.n, args.eps
    if n < 2 or not 0 < eps < 1:
        raise InvalidParameter("need n >= 2 and 0 < eps < 1")
    config = {"command": "example boxcut", "n": n, "eps": eps, "seed": seed, "samples": args.samples}
    a, c = corner_boxes(n)
    K0, C0 = make_box(a), make_box(c)
    depth = eps ** (1.0 / n)
    K, C = cut_corners(K0, depth), cut_corners(C0, depth)
    W = l0_sum(K, C, 0.5)
    VK, VC, VW = volume_exact(K), volume_exact(C), volume_exact(W)
    mc = volume_mc(W, args.samples, seed)
    measured = VW / math.sqrt(VK * VC) - 1.0
    eta = 1.0 / float(K.gauge(make_box(a).vertices).max())
    gamma = (1 - eta) / depth
    result = {"depth": depth, "volume_K": VK, "volume_C": VC, "volume_l0": VW,
              "volume_l0_mc": mc.value, "volume_l0_mc_stderr": mc.stderr,
              "measured_eps": measured, "eta": eta, "gamma": gamma,
              "eta_bound": 1 - gamma * depth}
    rows = [("measured_eps", measured, 0.0, 0, seed),
            ("volume_l0_mc", mc.value, mc.stderr, mc.samples, seed),
            ("eta", eta, 0.0, 0, seed), ("gamma", gamma, 0.0, 0, seed)]
    return _envelope(args, config, rows, result)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="logbm", description="Log-Brunn-Minkowski experiment runner.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def common(q, lam=True, seed=True, samples=True):
        if lam:
            q.add_argument("--lambda", dest="lam", type=float, default=0.5)
        if seed:
            q.add_argument("--seed", type=int, default=None)
        if samples:
            q.add_argument("--samples", type=_count, default=100_000)
        q.add_argument("--format", choices=("json", "csv"), default="json")
        q.add_argument("--out", default=None)

    g = sub.add_parser("bodies").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("gen", help="emit a body, or a pair with --dilate/--diag")
    q.add_argument("--kind", required=True,
                   choices=("box", "cross", "cutbox", "K0", "C0", "unconditional", "symmetric"))
    q.add_argument("--n", type=int, default=2)
    q.add_argument("--scales", type=_floats, default=None)
    q.add_argument("--depth", type=float, default=None)
    q.add_argument("--dilate", type=float, default=None)
    q.add_argument("--diag", type=_floats, default=None)
    common(q, lam=False, samples=False)
    q.set_defaults(func=cmd_bodies_gen)

    g = sub.add_parser("ineq").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("check", help="inequality gaps for a pair")
    q.add_argument("--pair", "--input", dest="pair", required=True)
    q.add_argument("--grid", type=int, default=None, help="direction-grid size for the L0 sum")
    common(q)
    q.set_defaults(func=cmd_ineq_check)

    g = sub.add_parser("stability").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("run", help="decomposition stability report")
    q.add_argument("--input", "--pair", dest="input", required=True)
    q.add_argument("--tau", type=float, default=0.5)
    q.add_argument("--c", type=float, default=10.0)
    q.add_argument("--method", choices=("exact", "mc"), default="exact")
    common(q)
    q.set_defaults(func=cmd_stability_run)

    g = sub.add_parser("coxeter").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("table", help="chamber data and invariant checks")
    q.add_argument("--type", required=True)
    q.add_argument("--rank", type=int, default=None)
    common(q, lam=False, seed=False, samples=False)
    q.set_defaults(func=cmd_coxeter_table)

    g = sub.add_parser("pl").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("check", help="grid Prekopa-Leindler excess and shift distance")
    q.add_argument("--f", required=True)
    q.add_argument("--g", required=True)
    q.add_argument("--c", type=float, default=10.0)
    q.add_argument("--shift-extent", type=float, default=1.0)
    q.add_argument("--shift-step", type=float, default=0.05)
    common(q, samples=False)
    q.set_defaults(func=cmd_pl_check)

    g = sub.add_parser("example").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("boxcut", help="corner-cut boxes with unit-cube logarithmic sum")
    q.add_argument("--n", type=int, default=3)
    q.add_argument("--eps", type=float, default=1e-3)
    common(q, lam=False)
    q.set_defaults(func=cmd_example_boxcut)
    return p


def _validate(args):
    lam = getattr(args, "lam", None)
    if lam is not None and not 0 < lam < 1:
        raise InvalidParameter("--lambda must lie in (0, 1)")
    tau = getattr(args, "tau", None)
    if tau is not None and not 0 < tau <= 0.5:
        raise InvalidParameter("--tau must lie in (0, 1/2]")


def run(argv=None, stdout=None):
    """Run one command; returns the exit status."""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        doc, rows = args.func(args)
    except ConfigError as exc:
        print(f"logbm: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PreconditionViolation as exc:
        print(f"logbm: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceLimit as exc:
        print(f"logbm: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidParameter, Unsupported) as exc:
        print(f"logbm: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.format == "csv":
        text = rows_to_csv(rows) if rows else rows_to_csv([])
    else:
        text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
