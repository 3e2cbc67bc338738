"""Command-line front end: ``weakot <command> [flags]``.

Every command prints a JSON report
``{"command", "inputs", "result", "checks": [{"name", "passed", "residual"}]}``
(the ``hopflax`` command writes CSV instead).  Exit status is 0 on success,
1 when a check fails and 2 for usage or input errors.
"""

import argparse
import json
import sys

import numpy as np

from . import classf, ic, transport
from .costs import CostSplit, complement_cost, split_proportional
from .errors import CapabilityError, ParseError, WeakOTError
from .hopflax import hopf_lax, split_cost
from .measures import convex_order_leq
from .io import (dumps_report, parse_cost, parse_function, parse_grid,
                 parse_measure, serialize_measure, write_grid_csv)

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
DEFAULT_TOL = 1e-9
# weak and classical costs count as equal below this gap
EQUALITY_GAP = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _check(name, passed, residual):
    return {"name": name, "passed": bool(passed), "residual": float(residual)}


def _display(result):
    return {k: repr(v) for k, v in result.items() if isinstance(v, float)}


def _measure_pair(args):
    return parse_measure(args.mu), parse_measure(args.nu)


def cmd_transport(args):
    mu, nu = _measure_pair(args)
    theta = parse_cost(args.cost)
    rep = transport.classical_cost(mu, nu, theta)
    marg = rep.target_marginal()
    gap = float(np.max(np.abs(nu.cdf(np.union1d(nu.atoms, marg.atoms))
                              - marg.cdf(np.union1d(nu.atoms, marg.atoms)))))
    result = {"cost": rep.cost,
              "plan": [list(p) for p in rep.plan]}
    return result, [_check("target_marginal", gap <= args.tol, gap)]


def cmd_weak(args):
    mu, nu = _measure_pair(args)
    theta = parse_cost(args.cost)
    rep = transport.weak_cost(mu, nu, theta)
    classical = transport.classical_cost(mu, nu, theta).cost
    nu1 = rep.effective_nu1
    result = {
        "cost": rep.cost,
        "classical_cost": classical,
        "nu1": serialize_measure(nu1),
        "kernel": [{"source": r.source, "mass": r.mass,
                    "targets": [list(t) for t in r.targets],
                    "barycenter": r.barycenter} for r in rep.kernel],
        "notes": list(rep.notes),
    }
    excess = rep.cost - classical
    checks = [
        _check("weak_le_classical", excess <= args.tol, max(excess, 0.0)),
        _check("nu1_convex_order", convex_order_leq(nu1, nu, args.tol), 0.0),
    ]
    return result, checks


def cmd_check_equality(args):
    mu, nu = _measure_pair(args)
    theta = parse_cost(args.cost)
    cert = transport.equality_certificate(mu, nu)
    gap = abs(transport.weak_cost(mu, nu, theta).cost
              - transport.classical_cost(mu, nu, theta).cost)
    agree = cert.holds == (gap <= EQUALITY_GAP)
    result = {"holds": cert.holds,
              "witness": None if cert.witness is None else list(cert.witness),
              "levels": cert.levels, "differences": cert.differences,
              "cost_gap": gap}
    return result, [_check("certificate_matches_costs", agree, gap)]


def cmd_hopflax(args):
    f = parse_function(args.f)
    theta = parse_cost(args.cost)
    grid = parse_grid(args.grid)
    res = hopf_lax(f, theta, args.t, grid)
    scale = 1.0 + np.abs(np.asarray(f.deriv(res.minimizer)))
    resid = float(np.max(res.stationarity_residual / scale))
    out = open(args.out, "w", newline="\n") if args.out else sys.stdout
    try:
        write_grid_csv(out, grid, res.value)
    finally:
        if args.out:
            out.close()
    if resid > args.tol:
        print(f"stationarity residual {resid:.3g} exceeds tolerance",
              file=sys.stderr)
        return None, [_check("stationarity", False, resid)]
    return None, [_check("stationarity", True, resid)]


def _split_from_args(args, theta):
    if args.alpha is not None:
        alpha = parse_cost(args.alpha)
        return CostSplit(alpha, complement_cost(theta, alpha), theta)
    return split_proportional(theta, args.lam)


def cmd_split(args):
    f = parse_function(args.f)
    theta = parse_cost(args.cost)
    split = _split_from_args(args, theta)
    f1, f2 = split_cost(f, split)
    grid = parse_grid(args.grid)
    q = hopf_lax(f, theta, args.t, grid).value
    q1 = hopf_lax(f1, split.alpha, args.t, grid).value
    q2 = hopf_lax(f2, split.beta, args.t, grid).value
    gaps = np.abs(q - q1 - q2)
    rows = [{"x": x, "q_theta": a, "q_alpha": b, "q_beta": c, "residual": d}
            for x, a, b, c, d in zip(grid.tolist(), q.tolist(), q1.tolist(),
                                     q2.tolist(), gaps.tolist())]
    worst = float(gaps.max())
    result = {"alpha": split.alpha.name, "beta": split.beta.name,
              "max_residual": worst, "table": rows}
    return result, [_check("splitting_identity", worst <= args.tol, worst)]


_ND_FUNCTIONS = {
    "linear": lambda c: classf.linear_form(c["c"]),
    "quadratic_plus_linear": lambda c: classf.quadratic_plus_linear(c["a"], c["c"]),
    "diagonal_quadratic": lambda c: classf.diagonal_quadratic(c["d"]),
    "radial": lambda c: classf.radial(c["profile"], int(c["dim"])),
}


def _nd_function(spec):
    try:
        return _ND_FUNCTIONS[spec["family"]](spec)
    except KeyError as exc:
        raise ParseError("function", f"bad function spec {spec!r}") from exc


def _profile(text):
    if text in (None, "identity"):
        return classf.Profile.identity()
    head, _, tail = text.partition(":k=")
    if head == "power" and tail:
        return classf.Profile.power(float(tail))
    raise ParseError("profile", f"expected identity or power:k=<real>, got {text!r}")


def _map(spec, dim):
    fam = spec.get("family")
    if fam == "identity":
        return lambda x: x
    if fam == "contraction":
        s = float(spec["s"])
        return lambda x: (1.0 - s) * x
    if fam == "shift":
        c = np.asarray(spec["c"], dtype=float)
        if c.size != dim:
            raise ParseError("map", "shift vector has the wrong dimension")
        return lambda x: x - c
    raise ParseError("map", f"unknown map family {fam!r}")


def _sample(config, dim):
    if "points" in config:
        return np.asarray(config["points"], dtype=float)
    smp = config.get("sample", {})
    lo, hi = smp.get("box", [-2.0, 2.0])
    rng = np.random.default_rng(int(smp.get("seed", 0)))
    return rng.uniform(lo, hi, size=(int(smp.get("count", 100)), dim))


def cmd_classf(args):
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ParseError("config", f"cannot read {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError("config", f"line {exc.lineno}: {exc.msg}") from exc
    mode = config.get("mode", "test")
    tol = float(config.get("tol", 1e-6))

    if mode == "map":
        dim = int(config.get("dim", 2))
        pts = _sample(config, dim)
        costs = [parse_cost(c) for c in config.get("costs", ["pow:p=2"])]
        box = tuple(config.get("box", [-1.0, 1.0]))
        limit = float(config.get("max_deviation", 5e-2))
        try:
            rep = classf.verify_map_optimality(
                _map(config.get("map", {}), dim), costs, pts, box,
                float(config.get("spacing", 0.02)), tol=limit, class_tol=tol)
        except CapabilityError as exc:
            return {"error": str(exc)}, [_check("class_f", False, float("nan"))]
        result = {"deviations": rep.deviations, "samples_used": rep.samples_used,
                  "samples_excluded": rep.samples_excluded}
        worst = max(rep.deviations.values())
        return result, [_check("map_optimality", rep.passed, worst)]

    f = _nd_function(config.get("function", {}))
    pts = _sample(config, f.dim)
    report = classf.class_f_test(f, pts, tol)
    result = {"in_class": report.in_class,
              "max_symmetry_residual": report.max_symmetry_residual,
              "max_eigen_residual": report.max_eigen_residual,
              "convexity_violations": report.convexity_violations,
              "failing_point": list(report.failing_point),
              "skipped": report.skipped}
    checks = [_check("class_f", report.in_class, report.max_symmetry_residual)]
    if mode == "potential":
        if not report.in_class:
            return result, checks
        G = _profile(config.get("profile"))
        phi = classf.build_potential(f, G, validation_points=pts, tol=tol)
        curl = classf.curl_residual(classf.potential_field(f, G), pts)
        closure = classf.class_f_test(phi, pts, tol)
        result.update({"curl_residual": curl,
                       "potential_in_class": closure.in_class,
                       "potential_values": phi.value(pts[:5])})
        checks += [_check("curl", curl <= tol, curl),
                   _check("potential_in_class", closure.in_class,
                          closure.max_symmetry_residual)]
    elif mode != "test":
        raise ParseError("mode", f"unknown mode {mode!r}")
    return result, checks


def cmd_ic(args):
    mu = parse_measure(args.mu)
    theta = parse_cost(args.cost)
    family = ([parse_function(s) for s in args.f] if args.f
              else ic.default_ic_family(mu, args.kinks))
    rep = ic.ic_check(mu, family, theta, args.t)
    result = {"lhs_product": rep.lhs_product, "margin": rep.margin,
              "satisfied": rep.satisfied, "worst": rep.worst,
              "clipped": rep.clipped, "per_function": list(rep.per_function)}
    # a violated inequality is a finding about mu and theta, not a failure
    return result, [_check("exponent_guard", not rep.clipped, 0.0)]


def build_parser():
    parser = _Parser(prog="weakot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def common(p, measures=2, tol=DEFAULT_TOL):
        if measures >= 1:
            p.add_argument("--mu", required=True, help="measure JSON file")
        if measures == 2:
            p.add_argument("--nu", required=True, help="measure JSON file")
        p.add_argument("--cost", default="pow:p=2", help="pow:p=<real>,scale=<real>")
        p.add_argument("--tol", type=float, default=tol)
        p.add_argument("--out", help="write the report here instead of stdout")

    common(sub.add_parser("transport", help="classical cost"))
    common(sub.add_parser("weak", help="weak cost and optimal nu1"))
    common(sub.add_parser("check-equality", help="equality certificate"))

    for name in ("hopflax", "split"):
        p = sub.add_parser(name)
        common(p, measures=0, tol=1e-5 if name == "split" else 1e-6)
        p.add_argument("--f", required=True, help="e.g. quadratic:scale=1")
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--grid", default="-2:2:0.1",
                       help="min:max:step (write --grid=-1:1:0.5 for negative min)")
        if name == "split":
            group = p.add_mutually_exclusive_group()
            group.add_argument("--lam", type=float, default=0.5)
            group.add_argument("--alpha", help="first cost of the split")

    p = sub.add_parser("classf", help="class membership, potentials, maps")
    p.add_argument("--config", required=True, help="JSON configuration")
    p.add_argument("--out")

    p = sub.add_parser("ic", help="infimum-convolution inequality")
    common(p, measures=1)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--kinks", type=int, default=None)
    p.add_argument("--f", action="append", help="test function (repeatable)")
    return parser


COMMANDS = {
    "transport": cmd_transport,
    "weak": cmd_weak,
    "check-equality": cmd_check_equality,
    "hopflax": cmd_hopflax,
    "split": cmd_split,
    "classf": cmd_classf,
    "ic": cmd_ic,
}


def _inputs(args):
    return {k: v for k, v in sorted(vars(args).items())
            if k != "command" and v is not None}


def run_command(argv=None):
    """Parse ``argv``, run the command and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        result, checks = COMMANDS[args.command](args)
    except WeakOTError as exc:
        print(f"weakot {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK
    if result is None:
        return status
    if isinstance(result, dict):
        result = dict(result, display=_display(result))
    text = dumps_report({"command": args.command, "inputs": _inputs(args),
                         "result": result, "checks": checks})
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def main():
    sys.exit(run_command())
