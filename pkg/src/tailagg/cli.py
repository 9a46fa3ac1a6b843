"""Command-line front end.

Subcommands:
  approx            closed-form tail approximation of a weighted sum
  exact             exact countermonotone lognormal pair probability
  simulate          Monte Carlo estimate (plain or conditional) with CI
  check             convergence profile for one hypothesis check
  optimize          two-stage allocation, optionally audited on a grid
  reproduce-tables  regenerate the reference tables as CSVs plus a report

All stochastic commands require an explicit --seed (there is no wall-clock
seeding anywhere).  Floats are emitted with shortest round-trip formatting;
CSV and JSON files are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from . import diagnostics
from .asymptotics import approx_linear
from .errors import TailAggError
from .joint import BIVARIATE_LOGNORMAL, JointModel, joint_from_config
from .models import model_from_config
from .portfolio import LinearConstraint, PortfolioProblem, grid_verify, single_asset_extremes, solve_two_stage
from .rare_event import cond_mc_lognormal, exact_comonotone_lognormal, plain_mc, ratio_vs_asymptotic
from .tables import atomic_write_text, reproduce_tables, write_csv


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _parse_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v != ""]


def _parse_count(text: str) -> int:
    # accept scientific notation like 1e7 for sample counts
    v = float(text)
    if v < 1 or v != int(v) and v > 1e15:
        raise argparse.ArgumentTypeError(f"bad count {text!r}")
    return int(v)


def _parse_grid(spec: str) -> np.ndarray:
    m = re.fullmatch(r"([-0-9.]+):([-0-9.]+):(\d+)", spec)
    if not m:
        raise argparse.ArgumentTypeError("grid spec must be lo:hi:count in log10, e.g. 1:5:9")
    lo, hi, count = float(m.group(1)), float(m.group(2)), int(m.group(3))
    return np.logspace(lo, hi, count)


_CONSTRAINT_RE = re.compile(r"\s*((?:[0-9.]+\s*\*\s*)?a\d+)\s*")


def _parse_constraint(text: str) -> LinearConstraint:
    """Parse '2*a1+3*a2>=1' into a LinearConstraint."""
    if ">=" not in text:
        raise ValueError("constraint must look like '2*a1+3*a2>=1'")
    lhs, rhs = text.split(">=")
    L = float(rhs)
    coeffs = {}
    for term in lhs.split("+"):
        m = re.fullmatch(r"\s*(?:([0-9.eE+-]+)\s*\*\s*)?a(\d+)\s*", term)
        if not m:
            raise ValueError(f"bad constraint term {term!r}")
        coeffs[int(m.group(2))] = float(m.group(1)) if m.group(1) else 1.0
    idx = sorted(coeffs)
    if idx != list(range(1, len(idx) + 1)):
        raise ValueError("constraint terms must cover a1..ad")
    return LinearConstraint(tuple(coeffs[i] for i in idx), L)


def _marginals(joint: JointModel, count: int) -> list:
    return [joint.marginal_model(0) for _ in range(count)]


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        atomic_write_text(out, text + "\n")
    else:
        print(text)


def _recipe_dict(res) -> dict:
    r = res.recipe
    out = {"c": list(r.c), "m_d": r.m_d, "N_d": r.N_d}
    if r.beta is not None:
        out.update(beta=r.beta, q_d=r.q_d, J_d=r.J_d)
    return out


def cmd_approx(args) -> int:
    joint = joint_from_config(_load_json(args.joint))
    a = _parse_floats(args.coeffs)
    models = _marginals(joint, len(a))
    c = _parse_floats(args.c) if args.c else None
    res = approx_linear(models, a, args.threshold, c=c)
    _emit(
        {
            "value": res.value,
            "log10_value": res.log_value / math.log(10.0),
            "recipe": _recipe_dict(res),
        },
        args.out,
    )
    return 0


def cmd_exact(args) -> int:
    est = exact_comonotone_lognormal(args.mu, args.threshold)
    model = JointModel(BIVARIATE_LOGNORMAL, mu=args.mu, sigma=1.0, rho=-1.0).marginal_model(0)
    from .asymptotics import approx_sum_pair

    approx = approx_sum_pair(model, model, args.threshold, c=1.0)
    _emit(
        {
            "estimate": est.estimate,
            "asymptotic_approximation": approx.value,
            "ratio": est.estimate / approx.value,
        },
        args.out,
    )
    return 0


def cmd_simulate(args) -> int:
    joint = joint_from_config(_load_json(args.joint))
    a = _parse_floats(args.coeffs)
    if args.method == "cond":
        if joint.kind != BIVARIATE_LOGNORMAL:
            raise TailAggError("the conditional estimator targets the bivariate lognormal")
        if joint.rho == -1.0:
            raise TailAggError("rho = -1 has a closed form; use the 'exact' subcommand")
        est = cond_mc_lognormal(joint.mu, joint.sigma, joint.rho, a, args.threshold, args.n, args.seed, workers=args.workers)
    else:
        est = plain_mc(joint, a, args.threshold, args.n, args.seed, workers=args.workers)
    payload = {
        "estimate": est.estimate,
        "std_error": est.std_error,
        "half_width95": est.half_width95,
        "n": est.n,
        "seed": args.seed,
        "method": est.method,
    }
    try:
        models = _marginals(joint, len(a))
        approx = approx_linear(models, a, args.threshold)
        rv = ratio_vs_asymptotic(est, approx)
        payload["ratio_vs_asymptotic"] = {
            "ratio": rv.ratio,
            "half_width": rv.half_width,
            "asymptotic_value": approx.value,
        }
    except TailAggError:
        payload["ratio_vs_asymptotic"] = None
    _emit(payload, args.out)
    return 0


_CHECKS = ("A1", "A2", "A3", "A4", "A5", "SUBEXP", "ASYINDEP")


def cmd_check(args) -> int:
    grid = _parse_grid(args.grid_log)
    name = args.assumption.upper()
    if name in ("A1", "A2", "SUBEXP"):
        if not args.model:
            raise TailAggError(f"{name} checks a marginal model; pass --model")
        model = model_from_config(_load_json(args.model))
        if name == "A1":
            report = diagnostics.check_mda_gumbel(model, grid)
        elif name == "SUBEXP":
            report = diagnostics.check_subexp_criterion(model, args.L, grid)
        else:
            if not args.model2:
                raise TailAggError("A2 compares two marginals; pass --model2")
            report = diagnostics.check_tail_ratio(model, model_from_config(_load_json(args.model2)), grid)
    else:
        if not args.joint:
            raise TailAggError(f"{name} checks a joint model; pass --joint")
        joint = joint_from_config(_load_json(args.joint))
        if name in ("A3", "A4"):
            report = diagnostics.check_conditional(
                joint, name, args.t, grid, method=args.method, mc_n=args.mc_n, seed=args.seed or 0
            )
        elif name == "A5":
            report = diagnostics.check_joint_aux(
                joint, args.L, grid, method=args.method, mc_n=args.mc_n, seed=args.seed or 0
            )
        else:
            report = diagnostics.check_asy_indep(joint, grid)
    payload = {
        "assumption": report.assumption,
        "grid": list(report.grid),
        "values": [v if math.isfinite(v) else repr(v) for v in report.values],
        "trend": {"kind": report.trend.kind, "limit": report.trend.limit},
        "method": report.method,
    }
    if report.mc_n is not None:
        payload["mc"] = {"n": report.mc_n, "seed": report.seed}
    _emit(payload, args.out)
    if args.csv:
        write_csv(args.csv, ("x", "value"), list(zip(report.grid, report.values)))
    return 0


def cmd_optimize(args) -> int:
    joint = joint_from_config(_load_json(args.joint))
    constraint = _parse_constraint(args.constraint)
    d = len(constraint.l)
    models = tuple(_marginals(joint, d))
    problem = PortfolioProblem(models, tuple(1.0 for _ in range(d)), constraint, args.threshold)
    sol = solve_two_stage(problem)
    payload = {
        "solution": {
            "a": list(sol.a),
            "m_d": sol.m_d,
            "N_d": sol.N_d,
            "approx_prob": sol.approx_prob,
            "heuristic": sol.heuristic,
        }
    }
    if args.verify:
        if args.seed is None:
            raise TailAggError("--verify is stochastic; pass --seed")
        audit = grid_verify(problem, joint, grid_step=args.grid_step, n=args.n, seed=args.seed, workers=args.workers)
        payload["audit"] = {
            "a_tilde": list(audit.a_tilde),
            "E1": audit.E1,
            "E2": audit.E2,
            "relative_error": audit.relative_error,
            "n": audit.n,
            "seed": audit.seed,
            "single_asset_extremes": list(single_asset_extremes(problem, joint)),
        }
        if args.csv:
            write_csv(
                args.csv,
                ("a1", "a2", "estimate", "std_error", "exact", "zero_hits"),
                [(p.a1, p.a2, p.estimate, p.std_error, int(p.exact), int(p.zero_hits)) for p in audit.points],
            )
    _emit(payload, args.out)
    return 0


def cmd_reproduce_tables(args) -> int:
    which = [int(v) for v in args.which.split(",")] if args.which else list(range(1, 8))
    if any(w > 1 for w in which) and args.seed is None:
        raise TailAggError("tables 2..7 are stochastic; pass --seed")
    report = reproduce_tables(which, args.out_dir, budget_scale=args.budget_scale, seed=args.seed, workers=args.workers)
    print(json.dumps({k: report[k] for k in ("seed", "budget_scale", "table1_ok")}, indent=2))
    for f in report["flags"]:
        print(f"flag: table {f['table']} x={f['threshold']} {f['column']}: ours={f['ours']!r} published={f['published']!r}")
    return 0 if report["table1_ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tailagg",
        description="Tail probabilities of aggregated rapidly-varying risks: "
        "closed-form approximations, hypothesis diagnostics, rare-event simulation, "
        "and minimax portfolio allocation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("approx", help="closed-form approximation of P(sum a_i X_i > x)")
    pa.add_argument("--joint", required=True, help="joint model config (JSON)")
    pa.add_argument("--coeffs", required=True, help="comma-separated coefficients, e.g. 3,2")
    pa.add_argument("--threshold", type=float, required=True)
    pa.add_argument("--c", help="tail-ratio constants (analytic override)")
    pa.add_argument("--out", help="write JSON here instead of stdout")
    pa.set_defaults(fn=cmd_approx)

    pe = sub.add_parser("exact", help="exact countermonotone lognormal pair probability")
    pe.add_argument("--mu", type=float, default=0.0)
    pe.add_argument("--threshold", type=float, required=True)
    pe.add_argument("--out")
    pe.set_defaults(fn=cmd_exact)

    ps = sub.add_parser("simulate", help="Monte Carlo estimate with confidence interval")
    ps.add_argument("--joint", required=True)
    ps.add_argument("--coeffs", required=True)
    ps.add_argument("--threshold", type=float, required=True)
    ps.add_argument("--n", type=_parse_count, required=True, help="sample budget, e.g. 1e7")
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--method", choices=("cond", "plain"), default="cond")
    ps.add_argument("--workers", type=int, default=1)
    ps.add_argument("--out")
    ps.set_defaults(fn=cmd_simulate)

    pc = sub.add_parser("check", help="convergence profile for one hypothesis check")
    pc.add_argument("--assumption", required=True, choices=_CHECKS)
    pc.add_argument("--joint", help="joint config (A3/A4/A5/ASYINDEP)")
    pc.add_argument("--model", help="marginal config (A1/A2/SUBEXP)")
    pc.add_argument("--model2", help="second marginal (A2)")
    pc.add_argument("--L", type=float, default=1.0)
    pc.add_argument("--t", type=float, default=1.0)
    pc.add_argument("--grid-log", default="1:5:9", help="log10 grid lo:hi:count")
    pc.add_argument("--method", choices=("auto", "closed_form", "mc"), default="auto")
    pc.add_argument("--mc-n", type=_parse_count, default=10**6)
    pc.add_argument("--seed", type=int)
    pc.add_argument("--csv", help="also write (x, value) rows here")
    pc.add_argument("--out")
    pc.set_defaults(fn=cmd_check)

    po = sub.add_parser("optimize", help="two-stage allocation with optional grid audit")
    po.add_argument("--joint", required=True)
    po.add_argument("--constraint", required=True, help="e.g. '2*a1+3*a2>=1'")
    po.add_argument("--threshold", type=float, required=True)
    po.add_argument("--verify", action="store_true")
    po.add_argument("--grid-step", type=float, default=0.01)
    po.add_argument("--n", type=_parse_count, default=10**4)
    po.add_argument("--seed", type=int)
    po.add_argument("--workers", type=int, default=1)
    po.add_argument("--csv", help="per-grid-point estimates")
    po.add_argument("--out")
    po.set_defaults(fn=cmd_optimize)

    pt = sub.add_parser("reproduce-tables", help="regenerate reference tables 1..7")
    pt.add_argument("--which", help="comma-separated table ids, default all")
    pt.add_argument("--budget-scale", type=float, default=1.0)
    pt.add_argument("--seed", type=int)
    pt.add_argument("--workers", type=int, default=1)
    pt.add_argument("--out-dir", required=True)
    pt.set_defaults(fn=cmd_reproduce_tables)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (TailAggError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
