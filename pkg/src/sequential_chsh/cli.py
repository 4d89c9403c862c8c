"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 state outside the supported class,
3 beyond double precision, 4 self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import bounds, quantum, strategy, verify
from .errors import DomainError, HypothesisViolated, InfeasibleAtPrecision

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_PRECISION, EXIT_VERIFY = 0, 1, 2, 3, 4
MISMATCH_TOL = 1e-9
DEFAULT_EPSILONS = (0.01, 0.1, 1.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """Locale-free number text that parses back to the same double."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None or x is strategy.UNREACHABLE:
        return ""
    if isinstance(x, int):
        return str(x)
    text = f"{float(x):.17g}"
    if not any(ch in text for ch in ".eEn"):
        text += ".0"
    return text


def parse_state(descriptor: str) -> quantum.TwoQubitState:
    """bell | mixed | schmidt:PHI | family:ALPHA,BETA_RE,BETA_IM"""
    kind, _, args = descriptor.partition(":")
    try:
        if kind == "bell" and not args:
            return quantum.make_bell_state()
        if kind == "mixed" and not args:
            return quantum.make_maximally_mixed()
        if kind == "schmidt":
            return quantum.make_schmidt_state(float(args))
        if kind == "family":
            alpha, re, im = (float(v) for v in args.split(","))
            return quantum.make_family_state(alpha, complex(re, im))
    except (ValueError, DomainError) as exc:
        raise UsageError(f"bad state descriptor {descriptor!r}: {exc}") from exc
    raise UsageError(f"unknown state descriptor {descriptor!r}")


def plan_to_document(plan: strategy.MeasurementPlan, state_descriptor: str) -> dict:
    (c0, c1), (b0, b1) = plan.alice_axes, plan.bob_axes
    return {
        "schema_version": SCHEMA_VERSION,
        "theta": plan.theta,
        "epsilon": plan.epsilon,
        "n": plan.n,
        "gammas": list(plan.gammas),
        "state_descriptor": state_descriptor,
        "lambda0": plan.lambda0,
        "lambda1": plan.lambda1,
        "axes": {"c0": list(c0), "c1": list(c1), "b0": list(b0), "b1": list(b1)},
    }


def plan_from_document(doc: dict) -> strategy.MeasurementPlan:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise UsageError(f"unsupported plan schema {doc.get('schema_version')!r}")
    if len(doc["gammas"]) != doc["n"]:
        raise UsageError("plan lists a different number of gammas than n")
    axes = doc["axes"]
    return strategy.MeasurementPlan(
        theta=doc["theta"],
        epsilon=doc["epsilon"],
        gammas=tuple(doc["gammas"]),
        alice_axes=(axes["c0"], axes["c1"]),
        bob_axes=(axes["b0"], axes["b1"]),
        lambda0=doc["lambda0"],
        lambda1=doc["lambda1"],
    )


def write_csv(rows, header, out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    _emit(buf.getvalue(), out)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_plan(args) -> int:
    state = parse_state(args.state)
    try:
        plan = strategy.build_plan(state, args.n, args.epsilon)
    except HypothesisViolated as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except InfeasibleAtPrecision as exc:
        print(f"infeasible at double precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    doc = plan_to_document(plan, args.state)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    summary = sys.stderr if args.out in (None, "-") else sys.stdout
    print(
        f"plan for {plan.n} Bobs on {args.state}: theta = {fmt(plan.theta)}, "
        f"epsilon = {fmt(plan.epsilon)}, lambda1 = {fmt(plan.lambda1)}",
        file=summary,
    )
    for k, g in enumerate(plan.gammas, start=1):
        print(f"  gamma_{k} = {fmt(g)}", file=summary)
    return EXIT_OK


REPORT_HEADER = ("k", "gamma_k", "S_analytic", "S_simulated", "violates", "bound_ok")


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.plan).read_text(encoding="utf-8"))
        plan = plan_from_document(doc)
    except (OSError, ValueError, KeyError, TypeError, DomainError) as exc:
        raise UsageError(f"cannot read plan {args.plan!r}: {exc}") from exc
    state = parse_state(args.state or doc["state_descriptor"])
    dps = args.dps if args.dps is not None else strategy.required_dps(plan.theta)
    report = strategy.simulate_sequence(state, plan, dps=dps or None)
    rows = [(r.k, r.gamma, r.s_analytic, r.s_simulated, r.violates, r.bound_ok) for r in report.rows]
    write_csv(rows, REPORT_HEADER, args.out)
    if not report.consistent(MISMATCH_TOL):
        print(f"analytic and simulated values differ by {report.max_discrepancy:.3e}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def theta_grid(theta_min: float, theta_max: float, per_decade: int) -> list[float]:
    """Logarithmic grid from theta_max downwards, inclusive of both ends up to rounding."""
    out = []
    i = 0
    while True:
        theta = theta_max / 10.0 ** (i / per_decade)
        if theta < theta_min * (1 - 1e-12):
            return out
        out.append(theta)
        i += 1


def scan_rows(epsilons, theta_min, theta_max, per_decade, cap):
    grid = theta_grid(theta_min, theta_max, per_decade)
    rows = []
    for eps in sorted(epsilons):
        for theta in grid:
            rows.append((theta, eps, strategy.count_violations(theta, eps, cap=cap)))
    return rows


def cmd_scan(args) -> int:
    try:
        epsilons = [float(v) for v in args.epsilon_list.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad epsilon list {args.epsilon_list!r}") from exc
    if not 0 < args.theta_min < args.theta_max <= strategy.QUARTER_PI * (1 + 1e-15):
        raise UsageError("need 0 < theta-min < theta-max <= pi/4")
    if args.points_per_decade < 1 or args.cap < 1 or any(not e >= 0 for e in epsilons):
        raise UsageError("points-per-decade and cap must be positive, epsilons non-negative")
    rows = scan_rows(epsilons, args.theta_min, args.theta_max, args.points_per_decade, args.cap)
    write_csv(rows, ("theta", "epsilon", "n_violations"), args.out)
    return EXIT_OK


BOUNDS_HEADER = (
    "k", "p_lo", "p_hi", "c_lo_log2", "c_hi_log2",
    "d_lo_log2", "d_hi_log2", "d_lo_closed_log2", "d_hi_closed_log2",
)


def bounds_rows(n: int, epsilon: float, theta: float):
    env = bounds.envelopes(theta, epsilon, n)
    c_lo, c_hi = bounds.coeff_sequences(epsilon, n)
    d_lo, d_hi = bounds.d_sequences(epsilon, n)
    rows = []
    for k in range(1, n + 1):
        lo_closed, hi_closed = bounds.d_closed_forms(epsilon, k)

        def log2(x):
            return None if x is None else x.log2_value

        rows.append((
            k, env.lower[k - 1], env.upper[k - 1],
            c_lo[k - 1].log2_value, c_hi[k - 1].log2_value,
            log2(d_lo[k - 1]), d_hi[k - 1].log2_value,
            log2(lo_closed), hi_closed.log2_value,
        ))
    return rows


def cmd_bounds(args) -> int:
    if args.n < 1 or not args.epsilon >= 0 or not 0 < args.theta <= strategy.QUARTER_PI:
        raise UsageError("need n >= 1, epsilon >= 0 and theta in (0, pi/4]")
    write_csv(bounds_rows(args.n, args.epsilon, args.theta), BOUNDS_HEADER, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 0:
        raise UsageError("trials must be non-negative")
    results = verify.run_all(args.trials, args.seed, args.tol)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.checked - r.failed}/{r.checked} checks passed")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"first counterexample ({failed[0].name}): {failed[0].counterexample}")
        return EXIT_VERIFY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sequential-chsh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="construct a measurement plan for n Bobs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=strategy.DEFAULT_EPSILON)
    p.add_argument("--state", default="bell", help="bell | schmidt:PHI | family:ALPHA,BETA_RE,BETA_IM")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="score a plan analytically and by density-matrix simulation")
    p.add_argument("--plan", required=True)
    p.add_argument("--out")
    p.add_argument("--state", help="override the plan's state (also accepts 'mixed')")
    p.add_argument("--dps", type=int, help="simulation digits; 0 for double precision (default: automatic)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="violation counts over a logarithmic theta grid")
    p.add_argument("--epsilon-list", default=",".join(str(e) for e in DEFAULT_EPSILONS))
    p.add_argument("--theta-min", type=float, default=1e-300)
    p.add_argument("--theta-max", type=float, default=strategy.QUARTER_PI)
    p.add_argument("--points-per-decade", type=int, default=10)
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bounds", help="envelope, coefficient and double-exponential bound tables")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=strategy.DEFAULT_EPSILON)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run the seeded property suites")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, help="override every numeric tolerance")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
