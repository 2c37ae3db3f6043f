"""Command-line driver: ``ccmdp solve | verify | compare | generate``.

Exit codes: 0 when the resulting policy is feasible, 2 when the instance (or
policy) is infeasible, 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ccmdp.errors import CcmdpError, Infeasible, StructureViolation, TooLarge
from ccmdp.evaluate import evaluate_policy, simulate_risk
from ccmdp.generators import GeneratorParams, generate_gridworld, generate_layered
from ccmdp.io import dump_policy, load_instance, load_policy, serialize_instance
from ccmdp.layers import build_layers
from ccmdp.model import set_mode, validate_instance
from ccmdp.oracle import ORACLE_GUARD, enumerate_optimal, policy_count
from ccmdp.solver import ALGORITHMS, solve

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


@dataclass
class RunReport:
    """Flat record printed by every subcommand; ``wall_time`` is the only nondeterministic field."""

    command: str
    status: str
    mode: str = ""
    algorithm: str = ""
    eps: float | None = None
    gamma: int | None = None
    psi: int | None = None
    psi_exclusive: int | None = None
    max_cluster: int | None = None
    value: float | None = None
    risk_or_cost: float | None = None
    budget: float | None = None
    feasible: bool | None = None
    discretized_value: float | None = None
    certified: bool | None = None
    cells: int | None = None
    simulated_risk: float | None = None
    oracle_value: float | None = None
    ratio: float | None = None
    message: str = ""
    wall_time: float = field(default=0.0)

    def fields(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != ""}

    def text(self) -> str:
        def fmt(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return "".join(f"{k}: {fmt(v)}\n" for k, v in self.fields().items())

    def json(self) -> str:
        return json.dumps(self.fields()) + "\n"


def _structure(report: RunReport, inst) -> None:
    g = build_layers(inst)
    report.gamma, report.psi, report.psi_exclusive, report.max_cluster = g.gamma, g.psi, g.psi_exclusive, g.max_cluster


def _load(args):
    inst = load_instance(args.instance)
    if getattr(args, "mode", None):
        inst = set_mode(inst, args.mode)
    return validate_instance(inst)


def cmd_solve(args) -> tuple[RunReport, int]:
    inst = _load(args)
    report = RunReport("solve", "", mode=inst.mode.value, eps=args.eps, budget=inst.budget)
    _structure(report, inst)
    try:
        sol = solve(inst, args.eps, args.algorithm, trim=args.trim_umax, threads=args.threads)
    except Infeasible as exc:
        report.status, report.message, report.feasible = "infeasible", str(exc), False
        return report, EXIT_INFEASIBLE
    report.algorithm = sol.algorithm
    report.value = sol.report.value
    report.risk_or_cost = sol.report.risk_or_cost
    report.feasible = sol.report.feasible
    report.discretized_value = sol.discretized_value
    report.certified = sol.certified
    report.cells = sol.cells
    if args.simulate:
        report.simulated_risk = simulate_risk(inst, None, sol.policy, args.simulate, args.seed, args.threads)
    if args.policy_out:
        dump_policy(sol.policy, args.policy_out)
    if getattr(args, "oracle", False):
        best = enumerate_optimal(inst, guard=args.guard)
        report.oracle_value = best.optimal_value
        report.ratio = sol.report.value / best.optimal_value if best.optimal_value > 0 else 1.0
    report.status = "feasible" if sol.report.feasible else "infeasible"
    return report, EXIT_OK if sol.report.feasible else EXIT_INFEASIBLE


def cmd_verify(args) -> tuple[RunReport, int]:
    inst = _load(args)
    pi = load_policy(args.policy)
    ev = evaluate_policy(inst, None, pi)
    report = RunReport(
        "verify",
        "feasible" if ev.feasible else "infeasible",
        mode=inst.mode.value,
        value=ev.value,
        risk_or_cost=ev.risk_or_cost,
        budget=inst.budget,
        feasible=ev.feasible,
    )
    if args.simulate:
        report.simulated_risk = simulate_risk(inst, None, pi, args.simulate, args.seed, args.threads)
    return report, EXIT_OK if ev.feasible else EXIT_INFEASIBLE


def cmd_compare(args) -> tuple[RunReport, int]:
    count = policy_count(build_layers(_load(args)))
    if count > args.guard:
        raise TooLarge(f"too large: {count} policies exceed the oracle guard of {args.guard}")
    args.oracle = True
    report, code = cmd_solve(args)
    report.command = "compare"
    return report, code


def cmd_generate(args) -> tuple[RunReport, int]:
    if args.gridworld:
        w, h = (int(x) for x in args.gridworld.lower().split("x"))
        inst = generate_gridworld(
            w,
            h,
            cliffs=args.cliffs,
            horizon=args.horizon,
            budget=args.budget if args.budget is not None else 0.1,
            seed=args.seed,
            slip=args.slip,
        )
    else:
        inst = generate_layered(
            GeneratorParams(
                n_states_per_level=args.states_per_level,
                n_actions=args.actions,
                horizon=args.horizon,
                gamma_target=args.gamma,
                psi_target=args.psi,
                budget=args.budget,
                mode=args.mode or "chance",
                seed=args.seed,
            )
        )
    text = serialize_instance(inst)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return RunReport("generate", "ok", mode=inst.mode.value, budget=inst.budget), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccmdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable report")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: $CCMDP_THREADS or all cores)")
        p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo checks and generators")

    def solving(p):
        p.add_argument("instance")
        p.add_argument("--eps", type=float, default=0.1)
        p.add_argument("--algorithm", choices=ALGORITHMS, default="auto")
        p.add_argument("--mode", choices=("chance", "cost"), default=None, help="override the instance mode")
        p.add_argument("--trim-umax", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--simulate", type=int, default=0, metavar="N", help="also estimate risk from N runs")
        p.add_argument("--policy-out", default=None, help="write the policy as 's k a' lines")
        common(p)

    p = sub.add_parser("solve", help="approximately solve an instance")
    solving(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="solve and compare against the exact optimum")
    solving(p)
    p.add_argument("--guard", type=int, default=ORACLE_GUARD, help="largest policy count the oracle may enumerate")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="evaluate a policy file exactly")
    p.add_argument("instance")
    p.add_argument("policy")
    p.add_argument("--mode", choices=("chance", "cost"), default=None)
    p.add_argument("--simulate", type=int, default=0, metavar="N")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--states-per-level", type=int, default=3)
    p.add_argument("--actions", type=int, default=2)
    p.add_argument("--horizon", type=int, default=3)
    p.add_argument("--gamma", type=int, default=2)
    p.add_argument("--psi", type=int, default=1)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--mode", choices=("chance", "cost"), default=None)
    p.add_argument("--gridworld", default=None, metavar="WxH", help="generate a gridworld instead")
    p.add_argument("--cliffs", type=int, default=1, help="random cliff cells for --gridworld")
    p.add_argument("--slip", type=float, default=0.1)
    common(p)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = args.func(args)
    except (CcmdpError, ValueError, OSError) as exc:
        kind = "structure violation" if isinstance(exc, StructureViolation) else "error"
        report, code = RunReport(args.command, kind, message=str(exc)), EXIT_ERROR
    report.wall_time = round(time.perf_counter() - start, 6)
    if args.command == "generate" and code == EXIT_OK and not args.output:
        return code
    out = report.json() if args.json else report.text()
    (sys.stdout if code != EXIT_ERROR else sys.stderr).write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
