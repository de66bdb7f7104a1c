"""Command-line front end.

Every command writes its table (CSV by default, 12 significant digits) to
``--out`` or stdout, plus a JSON manifest echoing the configuration, package
versions and wall time. A manifest can be fed back with ``--config`` to rerun
the same command.

Exit status: 0 success, 1 failed verification, 2 invalid input, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .errors import InvalidConfig, OccuLatticeError, SuiteFailed, UnknownCommand

COMMANDS = ("green", "gamma", "lambda", "constant", "law", "mc-tail", "mc-sup", "continuum", "verify")


def _count(text) -> int:
    """Integer from ``"100000"`` or ``"1e5"``."""
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _vector(text) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occulattice", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, set_arg=True):
        sp.add_argument("--walk", default="srw:3", help="srw:d or a walk JSON file")
        if set_arg:
            sp.add_argument("--set", default="origin", help="origin, pair:e1, pair:1,0,0, sphere1, ball1 or a set JSON file")
        sp.add_argument("--tol", type=float, default=1e-8, help="Green quadrature tolerance")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--manifest", help="manifest path (default <out>.manifest.json, or stderr)")
        sp.add_argument("--config", help="JSON file of option values, or a manifest to replay")

    sp = sub.add_parser("green", help="Green's function values")
    common(sp, set_arg=False)
    sp.add_argument("--x", type=_vector, action="append", help="lattice point, repeatable")
    sp.add_argument("--import-cache", help="load a Green-table cache file first")
    sp.add_argument("--export-cache", help="write the Green table to this file afterwards")

    sp = sub.add_parser("gamma", help="escape probability 1/G(0)")
    common(sp, set_arg=False)

    sp = sub.add_parser("lambda", help="spectrum of the Green matrix of a set")
    common(sp)

    sp = sub.add_parser("constant", help="Perron eigenvalue, theta* and the limit constant")
    common(sp)

    sp = sub.add_parser("law", help="exact law of the total occupation time")
    common(sp)
    sp.add_argument("--u-max", type=_count, default=30)

    sp = sub.add_parser("mc-tail", help="simulated occupation-time tail")
    common(sp)
    sp.add_argument("--n-walks", type=_count, default=10**5)
    sp.add_argument("--radius", type=float, default=None, help="truncation radius (default max(1e3, 50 u_max^2))")
    sp.add_argument("--u-max", type=_count, default=15)
    sp.add_argument("--step-cap", type=_count, default=10**7)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("mc-sup", help="sup statistics along single paths")
    common(sp)
    sp.add_argument("--n", type=str, default="1e6", help="path length or comma-separated increasing schedule")
    sp.add_argument("--reps", type=_count, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("continuum", help="lattice-to-continuum eigenvalue study")
    common(sp, set_arg=False)
    sp.add_argument("--domain", default="ball:1", help="ball:r, cube:s or a domain JSON file")
    sp.add_argument("--eps", default="1/4,1/6,1/8,1/12", help="comma-separated decreasing schedule")

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("--suite", default="examples", choices=("examples", "law", "tails", "sup", "continuum", "all"))
    sp.add_argument("--out", help="JSON report path")
    sp.add_argument("--manifest", help="manifest path")
    sp.add_argument("--config", help="JSON file of option values")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        payload = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {args.config}: {exc}") from None
    if "config" in payload and isinstance(payload["config"], dict):
        payload = payload["config"]
    if payload.get("command", args.command) != args.command:
        raise InvalidConfig(f"config is for command {payload['command']!r}, not {args.command!r}")
    # file values become defaults; flags given on the command line win
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in payload.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config", "out", "manifest"):
            continue
        if dest not in known:
            raise InvalidConfig(f"unknown option {key!r} in config")
        if dest == "x" and value is not None:
            value = [tuple(v) for v in value]
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------- commands

def _walk_and_tables(args):
    from .walk import parse_walk_ref

    walk = parse_walk_ref(args.walk)
    io.autoload_table(walk, args.tol)
    return walk


def _sites(args, walk):
    from .spectral import parse_set_ref

    return parse_set_ref(args.set, walk.dimension)


def cmd_green(args):
    from .green import GreenTable, get_table, register_table

    walk = _walk_and_tables(args)
    if args.import_cache:
        register_table(GreenTable.load(walk, args.import_cache))
    table = get_table(walk, args.tol)
    xs = args.x or [(0,) * walk.dimension]
    rows = []
    for x in xs:
        if len(x) != walk.dimension:
            raise InvalidConfig(f"point {x} has the wrong dimension")
        rows.append({"x": ",".join(map(str, x)), "g": table(x)})
    if args.export_cache:
        table.save(args.export_cache)
    return rows, ["x", "g"], walk


def cmd_gamma(args):
    from .green import escape_probability

    walk = _walk_and_tables(args)
    gamma = escape_probability(walk, args.tol)
    return [{"gamma": gamma, "g0": 1.0 / gamma}], ["gamma", "g0"], walk


def cmd_lambda(args):
    from .spectral import build_green_matrix, eigendecompose

    walk = _walk_and_tables(args)
    sites = _sites(args, walk)
    dec = eigendecompose(build_green_matrix(walk, sites, args.tol))
    rows = []
    for j, lam in enumerate(dec.lambdas):
        rows.append({
            "j": j + 1,
            "lambda": float(lam),
            "ratio": float(dec.ratios[j]),
            "weight": None if dec.weights is None else float(dec.weights[j]),
        })
    return rows, ["j", "lambda", "ratio", "weight"], walk


def cmd_constant(args):
    from .spectral import lambda_max, limit_constant

    walk = _walk_and_tables(args)
    lc = limit_constant(lambda_max(walk, _sites(args, walk), args.tol))
    return [{"lambda": lc.lam, "theta_star": lc.theta_star, "constant": lc.constant}], ["lambda", "theta_star", "constant"], walk


def cmd_law(args):
    from .law import law_table, occupation_law

    walk = _walk_and_tables(args)
    law = occupation_law(walk, _sites(args, walk), args.tol)
    return law_table(law, args.u_max), ["u", "survival", "pmf", "asymptote_h1_f1u"], walk


def cmd_mc_tail(args):
    from .law import occupation_law
    from .montecarlo import SimConfig, default_radius, simulate_occupation

    walk = _walk_and_tables(args)
    sites = _sites(args, walk)
    radius = args.radius if args.radius is not None else default_radius(args.u_max)
    cfg = SimConfig.for_set(walk, sites, args.n_walks, radius, args.seed,
                            step_cap=args.step_cap, workers=args.workers)
    est = simulate_occupation(cfg)
    law = occupation_law(walk, sites, args.tol) if sites.origin_index is not None else None
    rows = []
    for u in range(args.u_max + 1):
        rows.append({
            "u": u,
            "survival_hat": est.survival_hat(u),
            "stderr": est.stderr(u),
            "formula": None if law is None else law.survival(u),
        })
    args._extra = {
        "truncated_fraction": est.truncated_fraction,
        "bias_bound": est.bias_bound,
        "mean_steps": est.mean_steps,
        "radius": radius,
    }
    return rows, ["u", "survival_hat", "stderr", "formula"], walk


def cmd_mc_sup(args):
    from .montecarlo import limit_trend

    walk = _walk_and_tables(args)
    sites = _sites(args, walk)
    sched = [_count(s) for s in args.n.split(",")]
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise InvalidConfig("--n schedule must be increasing")
    trend, raw = limit_trend(walk, sites, sched, args.reps, args.seed, args.workers)
    rows = []
    k = len(sched)
    for i, s in enumerate(raw):
        rows.append({"n": s.n, "rep": i // k, "ratio_x": s.ratio_x, "ratio_path": s.ratio_path})
    args._extra = {"predicted_constant": trend[0].predicted, "trend": [t.__dict__ for t in trend]}
    return rows, ["n", "rep", "ratio_x", "ratio_path"], walk


def cmd_continuum(args):
    from .continuum import convergence_study, parse_domain_ref

    walk = _walk_and_tables(args)
    domain = parse_domain_ref(args.domain, walk.dimension)
    eps = [e.strip() for e in args.eps.split(",") if e.strip()]
    rep = convergence_study(walk, domain, eps, green_tol=args.tol)
    rows = [
        {
            "epsilon": str(r.epsilon),
            "set_size": r.set_size,
            "discrete_value": r.discrete_value,
            "rescaled_value": r.rescaled_value,
            "log_form_value": r.log_form_value,
            "reference": r.reference,
            "relative_error": r.relative_error,
        }
        for r in rep.rows
    ]
    args._extra = {
        "sigma2": rep.sigma2,
        "rescaled_by_sigma2": True,
        "rescaling_gap": rep.rescaling_gap,
    }
    cols = ["epsilon", "set_size", "discrete_value", "rescaled_value", "log_form_value", "reference", "relative_error"]
    return rows, cols, walk


HANDLERS = {
    "green": cmd_green,
    "gamma": cmd_gamma,
    "lambda": cmd_lambda,
    "constant": cmd_constant,
    "law": cmd_law,
    "mc-tail": cmd_mc_tail,
    "mc-sup": cmd_mc_sup,
    "continuum": cmd_continuum,
}


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("occulattice", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _config_echo(args) -> dict:
    return {k: (list(map(list, v)) if k == "x" and v else v)
            for k, v in vars(args).items() if not k.startswith("_") and k != "verbose"}


def _emit_manifest(args, started: float, extra: dict | None) -> None:
    manifest = {
        "config": _config_echo(args),
        "versions": _versions(),
        "started_utc": _dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
        "wall_time_s": time.time() - started,
        "outputs": [args.out] if getattr(args, "out", None) else [],
    }
    if extra:
        manifest["details"] = extra
    path = args.manifest or (f"{args.out}.manifest.json" if getattr(args, "out", None) else None)
    if path:
        io.write_json(manifest, path)
    else:
        sys.stderr.write(json.dumps(manifest, sort_keys=True, default=str) + "\n")


def _run_verify(args) -> int:
    from .verify import run_suite

    results = run_suite(args.suite, report=lambda r: print(r.line(), flush=True))
    if args.out:
        io.write_json([{"criterion": r.criterion, "passed": r.passed, "summary": r.summary,
                        "seconds": r.seconds, "measured": r.measured} for r in results], args.out)
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        raise SuiteFailed(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return 0


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    positional = [a for a in argv if not a.startswith("-")]
    if positional and positional[0] not in COMMANDS:
        raise UnknownCommand(f"unknown command {positional[0]!r}; choose from {', '.join(COMMANDS)}")
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    started = time.time()
    if args.command == "verify":
        try:
            return _run_verify(args)
        finally:
            _emit_manifest(args, started, None)
    rows, cols, walk = HANDLERS[args.command](args)
    if args.format == "json":
        io.write_json(rows, args.out)
    else:
        io.write_csv(rows, cols, args.out)
    io.save_table(walk, args.tol)
    _emit_manifest(args, started, getattr(args, "_extra", None))
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except OccuLatticeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError) as exc:
        print(f"error: [cli] {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: [numeric] {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
