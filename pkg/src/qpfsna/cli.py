"""Command-line interface: qpfsna <command> [options]."""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .maps import (
    MAP_NAMES,
    DomainError,
    FiberMap,
    HermanParams,
    LambdaParams,
    LambdaTilde,
    make_map,
    parse_omega,
)
from .parallel import set_default_threads
from .report import MASK64, __version__, dumps, rng_for, write_csv, write_sidecar

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

COMMANDS = ("simulate", "lyapunov", "rotnum", "deviations", "sensitivity", "attractor", "graphs", "verify")


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= MASK64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _count(text: str) -> int:
    v = int(float(text))
    if v != float(text):
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line options override it")
    p.add_argument("--map", choices=MAP_NAMES, default="gopy")
    p.add_argument("--omega", default="golden", help="'golden' or a decimal")
    p.add_argument("--B", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n", type=_count, default=10**5)
    p.add_argument("--transient", type=_count, default=0)
    p.add_argument("--grid", type=_count, default=4096)
    p.add_argument("--depth", type=_count, default=10**4)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="include wall-clock times in JSON output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpfsna", description="Quasiperiodically forced skew products.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    cmds = {}
    for name in COMMANDS:
        cmds[name] = sp = sub.add_parser(name)
        _common(sp)
    cmds["simulate"].add_argument("--theta0", type=float, default=None)
    cmds["simulate"].add_argument("--x0", default=None, help="fiber start, comma separated for 2-D fibers")
    cmds["rotnum"].add_argument("--theta0", type=float, default=None)
    cmds["rotnum"].add_argument("--x0", default=None)
    cmds["deviations"].add_argument("--theta0", type=float, default=None)
    cmds["deviations"].add_argument("--x0", default=None)
    cmds["deviations"].add_argument("--classify", type=_count, default=0, metavar="GRID",
                                    help="also label GRID theta values bounded/unbounded")
    cmds["lyapunov"].add_argument("--samples", type=_count, default=32)
    cmds["sensitivity"].add_argument("--seeds", type=_count, default=32)
    cmds["sensitivity"].add_argument("--max-power", type=int, default=20)
    cmds["verify"].add_argument("--suite", choices=sorted(acceptance.SUITES), default="trivial")
    cmds["verify"].add_argument("--figures", default=None, help="directory for the A11 attractor panels")
    return ap


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def parse(argv) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in conf.items():
            if k not in actions or k in ("config", "help"):
                raise UsageError(f"unknown config key {k!r}")
            a = actions[k]
            try:
                defaults[k] = a.type(v) if a.type else (v.lower() in ("1", "true", "yes") if a.nargs == 0 else v)
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise UsageError(f"config key {k}: {e}") from None
            if a.choices is not None and defaults[k] not in a.choices:
                raise UsageError(f"config key {k}: {v!r} not one of {sorted(a.choices)}")
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def config_echo(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("timings",)}
    d["omega_value"] = parse_omega(args.omega)
    return d


def envelope(args, results, warnings=(), timings=None) -> dict:
    env = {"tool": "qpfsna", "version": __version__, "command": args.command, "config": config_echo(args),
           "results": results, "warnings": list(warnings)}
    if args.timings and timings is not None:
        env["timings"] = timings
    return env


def _map(args):
    return make_map(args.map, omega=parse_omega(args.omega), B=args.B, beta=args.beta, gamma=args.gamma,
                    c=args.c, eps=args.eps)


def _start(args, m):
    """Initial state from --theta0/--x0, drawn from the master seed when absent."""
    rng = rng_for(args.seed)
    th = args.theta0 if getattr(args, "theta0", None) is not None else float(rng.random())
    x0 = getattr(args, "x0", None)
    if isinstance(m, LambdaParams):
        if x0:
            u, v = (float(s) for s in x0.split(","))
        else:
            a, r = 2 * math.pi * rng.random(), rng.random()
            u, v = r * math.cos(a), r * math.sin(a)
        return th, (u, v)
    if isinstance(m, LambdaTilde):
        return th, tuple(float(s) for s in x0.split(",")) if x0 else (float(rng.random()), float(rng.random()))
    if x0:
        return th, float(x0)
    lo, hi = getattr(m, "interval", (0.0, 1.0))
    return th, float(lo + (hi - lo) * rng.random())


def _fiber_names(m) -> list[str]:
    if isinstance(m, LambdaParams):
        return ["u", "v"]
    if isinstance(m, LambdaTilde):
        return ["alpha", "r"]
    if isinstance(m, HermanParams):
        return ["alpha"]
    return ["xi"]


def _emit(args, header, cols, results, warnings=(), timings=None, index=False):
    if args.out:
        write_csv(args.out, header, cols, index=index)
        write_sidecar(args.out, envelope(args, results, warnings, timings))
    else:
        print(dumps(envelope(args, results, warnings, timings)))


def _need_circle(m):
    if not (isinstance(m, FiberMap) and m.circle):
        raise DomainError(f"--map {m.name} has no circle fiber")


# --- commands ------------------------------------------------------------------------

def cmd_simulate(args):
    from .orbit import iterate

    m = _map(args)
    x0 = _start(args, m)
    t = time.perf_counter()
    tr = iterate(m, x0, args.n, args.transient)
    tim = {"iterate": time.perf_counter() - t}
    if not args.out:
        raise UsageError("simulate needs --out")
    steps = np.arange(args.n, dtype=np.int64) + args.transient
    write_csv(args.out, ["n", "theta"] + _fiber_names(m), [steps, tr.thetas] + tr.fiber_columns())
    write_sidecar(args.out, envelope(args, {"rows": args.n, "x0": x0}, timings=tim))
    return EXIT_OK


def cmd_lyapunov(args):
    from .cocycle import lyap_lower_bound
    from .diagnostics import cocycle_lyapunov, fiber_lyapunov
    from .lambda_attractor import RadialFiberSpec, radial_lyapunov

    m = _map(args)
    if isinstance(m, HermanParams):
        r = cocycle_lyapunov(m, max(args.n, 10**3), args.samples, seed=args.seed)
        lb = lyap_lower_bound(m.gamma)
        print(f"cocycle exponent {r.estimate:.10g} +- {r.error:.2g}   lower bound {lb:.10g}")
        res = {"cocycle": r.to_dict(), "lower_bound": lb}
    elif isinstance(m, LambdaParams):
        res = {}
        for side in ("unstable", "stable"):
            spec = RadialFiberSpec(m, side)
            for which in ("zero", "graph"):
                rep = radial_lyapunov(spec, which, args.n)
                res[f"{which}_{side}"] = rep.to_dict()
                print(f"radial exponent ({which}, {side}) {rep.estimate:.10g} +- {rep.error:.2g}")
    elif isinstance(m, FiberMap):
        x0 = _start(args, m)
        r = fiber_lyapunov(m, x0, args.n, args.transient)
        print(f"fiber exponent {r.estimate:.10g} +- {r.error:.2g}")
        res = {"fiber": r.to_dict()}
    else:
        raise DomainError(f"no exponent defined for --map {args.map}")
    if args.out:
        write_sidecar(args.out, envelope(args, res))
    return EXIT_OK


def cmd_rotnum(args):
    from .diagnostics import rotation_number

    m = _map(args)
    _need_circle(m)
    r = rotation_number(m, _start(args, m), args.n)
    print(f"rotation number {float(r.estimate)!r} +- {r.error:.3g}")
    if args.out:
        write_sidecar(args.out, envelope(args, r.to_dict()))
    return EXIT_OK


def cmd_deviations(args):
    from .diagnostics import deviation_profile, rho_classify

    m = _map(args)
    _need_circle(m)
    x0 = _start(args, m)
    prof = deviation_profile(m, x0, args.n)
    res = {"rho_estimate": prof.rho_estimate, "x0": x0,
           "window_sups": [{"length": L, "max": a, "min": b} for L, a, b in prof.window_sups]}
    if args.classify:
        th = (np.arange(args.classify) + 0.5) / args.classify
        rc = rho_classify(m, th, args.n, threads=args.threads)
        res["classification"] = {"theta": th, "label": rc.labels, "growth_above": rc.growth_above,
                                 "growth_below": rc.growth_below, "counts": rc.counts(),
                                 "rho_estimate": rc.rho_estimate, "threshold": rc.threshold}
    _emit(args, ["D"], [prof.deviations], res, index=True)
    return EXIT_OK


def cmd_sensitivity(args):
    from .diagnostics import phase_sensitivity_sweep

    m = _map(args)
    if not isinstance(m, FiberMap):
        raise DomainError("phase sensitivity needs a one-dimensional fiber")
    sched = tuple(2**k for k in range(10, args.max_power + 1))
    r = phase_sensitivity_sweep(m, args.seeds, args.seed, sched, depth=args.depth, threads=args.threads)
    print(f"median mu {r.estimate:.6g}")
    mus = np.array(r.details["mu"], dtype=float)
    resid = np.array([np.nan if x is None else x for x in r.details["residual"]])
    _emit(args, ["seed", "mu", "residual"], [np.arange(args.seeds), mus, resid], r.to_dict())
    return EXIT_OK


def _stem(out: str) -> str:
    return out[:-4] if out.endswith(".csv") else out


def cmd_attractor(args):
    m = _map(args)
    if isinstance(m, LambdaParams):
        from .lambda_attractor import two_point_attractor

        pts = two_point_attractor(m, args.grid, min(args.depth, 10**4), threads=args.threads)
        res = {"points": len(pts), "branch_consistency": pts.branch_consistency,
               "max_invariance": float(pts.invariance.max())}
        if not args.out:
            raise UsageError("attractor needs --out")
        stem = _stem(args.out)
        for suffix, header, cols in (("-polar.csv", ["theta", "alpha", "r"], pts.polar_rows()),
                                     ("-cartesian.csv", ["theta", "u", "v"], pts.cartesian_rows())):
            write_csv(stem + suffix, header, list(cols))
            write_sidecar(stem + suffix, envelope(args, res))
        return EXIT_OK
    if isinstance(m, FiberMap) and not m.circle:
        from .diagnostics import attractor_sample, pinching_profile

        s = attractor_sample(m, args.grid, depth=args.depth, occupation=args.n,
                             transient=max(args.transient, 10**4), seed=args.seed, threads=args.threads)
        prof = pinching_profile(s, 1.0 / args.grid)
        res = {"samples": len(s), "min_bin": prof.min_bin, "min_location": prof.min_location,
               "min_diameter": float(prof.diameters[prof.min_bin]), "max_diameter": prof.max_diameter,
               "empty_bins": int(prof.empty.sum()), "pinch_diameters": prof.diameters}
        _emit(args, ["theta", "xi"], [s.thetas, s.xis], res)
        return EXIT_OK
    raise DomainError(f"no attractor routine for --map {args.map}")


def cmd_graphs(args):
    import warnings as _w

    from .cocycle import stable_graph, unstable_graph
    from .lambda_attractor import RadialFiberSpec, radial_graph

    omega = parse_omega(args.omega)
    h = HermanParams(omega=omega, gamma=args.gamma)
    with _w.catch_warnings(record=True) as caught:
        _w.simplefilter("always")
        u = unstable_graph(h, args.grid, args.depth, threads=args.threads)
        s = stable_graph(h, args.grid, args.depth, threads=args.threads)
    warns = [str(c.message) for c in caught]
    try:
        rho = radial_graph(RadialFiberSpec(LambdaParams(args.beta, args.gamma, omega)), args.grid, args.depth,
                           threads=args.threads).values
    except (DomainError, RuntimeError) as e:
        rho = np.full(args.grid, np.nan)
        warns.append(f"rho_u not computed: {e}")
    res = {"grid": args.grid, "depth": args.depth,
           "phi_u": {"converged": u.converged_fraction(), "invariant_1e-6": u.invariant_fraction(1e-6),
                     "trusted": u.trusted},
           "phi_s": {"converged": s.converged_fraction(), "invariant_1e-6": s.invariant_fraction(1e-6),
                     "trusted": s.trusted}}
    _emit(args, ["theta", "phi_u", "phi_s", "rho_u"], [u.centers, u.values, s.values, rho], res, warns)
    return EXIT_OK


def cmd_verify(args):
    ids = acceptance.SUITES[args.suite]
    results = acceptance.run(ids, args.seed, args.threads, args.figures, echo=print)
    rows = []
    for r in results:
        row = {"id": r.id, "title": r.title, "passed": r.passed, "measured": r.measured, "threshold": r.threshold}
        if args.timings:
            row["seconds"] = r.seconds
        rows.append(row)
    ok = all(r.passed for r in results)
    env = envelope(args, {"suite": args.suite, "passed": ok, "criteria": rows})
    text = dumps(env) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except UsageError as e:
        print(f"qpfsna: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    set_default_threads(args.threads)
    try:
        return HANDLERS[args.command](args)
    except UsageError as e:
        print(f"qpfsna: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ValueError, TypeError, RuntimeError) as e:
        print(f"qpfsna: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
