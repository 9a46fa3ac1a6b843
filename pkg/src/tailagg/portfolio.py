"""Tail-risk-minimal portfolio allocation via the two-stage surrogate.

The exact problem - minimize P(sum_i a_i X_i > x) subject to an earnings
constraint - is intractable; replacing the objective by its asymptotic form
N_d * P(X_1 > x/m_d) splits it into two stages solved in sequence:

  (i)  minimize m_d = max_i a_i over the feasible set, then
  (ii) among allocations attaining that minimax value m, minimize
       N_d = sum of tail-ratio constants over the argmax set.

For a linear constraint sum_i a_i l_i >= L with positive l_i the stage-(i)
optimum forces every coordinate to the common maximum, so the solution is the
equal allocation a_i = L / sum_j l_j and stage (ii) is degenerate.

The surrogate is a heuristic at finite thresholds (solutions carry
`heuristic=True`); `grid_verify` is the audit path, re-estimating the tail
probability on a one-dimensional sweep of the constraint set exactly as the
reference simulation study does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleConstraint, UnsupportedConstraint
from .joint import BIVARIATE_LOGNORMAL, JointModel
from .models import TailModel
from .rare_event import cond_mc_lognormal, exact_lognormal_single


@dataclass(frozen=True)
class LinearConstraint:
    """sum_i a_i * l_i >= L with positive per-unit earnings l_i."""

    l: tuple
    L: float

    def __post_init__(self):
        if not all(v > 0 for v in self.l):
            raise UnsupportedConstraint("linear constraints require positive coefficients")

    def satisfied(self, a: Sequence[float], tol: float = 1e-9) -> bool:
        return float(np.dot(self.l, a)) >= self.L - tol


@dataclass(frozen=True)
class GridConstraint:
    """A finite candidate set filtered by a general feasibility function h(a) >= L."""

    candidates: tuple
    h: Callable[[Sequence[float]], float]
    L: float

    def satisfied(self, a: Sequence[float], tol: float = 1e-9) -> bool:
        return float(self.h(a)) >= self.L - tol


@dataclass(frozen=True)
class PortfolioProblem:
    models: tuple
    c: tuple  # tail-ratio constants vs models[0], c[0] = 1
    constraint: object
    threshold: float

    def __post_init__(self):
        if len(self.models) != len(self.c):
            raise ValueError("need one tail-ratio constant per model")
        if self.c[0] != 1.0:
            raise ValueError("the first tail-ratio constant is 1 by definition")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True)
class StageTrace:
    minimax_value: float
    tie_constant: float


@dataclass(frozen=True)
class PortfolioSolution:
    a: tuple
    m_d: float
    N_d: float
    approx_prob: float
    stage_trace: StageTrace
    heuristic: bool = True


def _recipe_stats(a: Sequence[float], c: Sequence[float]):
    m = max(a)
    n = sum(c[i] for i in range(len(a)) if a[i] == m)
    return m, n


def _approx_prob(model: TailModel, c_sum: float, m: float, x: float) -> float:
    if m == 0.0:
        return 0.0
    return math.exp(math.log(c_sum) + float(model.log_survival(x / m)))


def solve_two_stage(p: PortfolioProblem) -> PortfolioSolution:
    """Minimize the asymptotic tail surrogate over the constraint set."""
    if isinstance(p.constraint, LinearConstraint):
        l = np.asarray(p.constraint.l, dtype=float)
        if len(l) != len(p.models):
            raise ValueError("constraint and model dimensions differ")
        L = p.constraint.L
        if L <= 0:
            a = tuple(0.0 for _ in l)
            m, n = 0.0, float(sum(p.c))
            return PortfolioSolution(a, m, n, 0.0, StageTrace(m, n))
        m = L / float(l.sum())
        a = tuple(m for _ in l)
        n = float(sum(p.c))
        return PortfolioSolution(a, m, n, _approx_prob(p.models[0], n, m, p.threshold), StageTrace(m, n))

    if isinstance(p.constraint, GridConstraint):
        feasible = [tuple(float(v) for v in cand) for cand in p.constraint.candidates if p.constraint.satisfied(cand)]
        feasible = [cand for cand in feasible if all(v >= 0 for v in cand)]
        if not feasible:
            raise InfeasibleConstraint("no candidate satisfies the constraint")
        m_star = min(max(cand) for cand in feasible)
        stage2 = [cand for cand in feasible if max(cand) == m_star]
        # among minimax-optimal candidates minimize the tie constant,
        # breaking remaining ties lexicographically
        best = min(stage2, key=lambda cand: (_recipe_stats(cand, p.c)[1], cand))
        m, n = _recipe_stats(best, p.c)
        return PortfolioSolution(best, m, n, _approx_prob(p.models[0], n, m, p.threshold), StageTrace(m_star, n))

    raise UnsupportedConstraint(f"unknown constraint type {type(p.constraint).__name__}")


@dataclass(frozen=True)
class GridPoint:
    a1: float
    a2: float
    estimate: float
    std_error: float
    exact: bool
    zero_hits: bool


@dataclass(frozen=True)
class GridAudit:
    """Naive sweep of the 2-asset constraint set with per-point estimates."""

    a_tilde: tuple
    E1: float
    E2: float
    relative_error: float
    points: tuple
    n: int
    seed: int
    threshold: float


def grid_verify(
    p: PortfolioProblem,
    joint: JointModel,
    grid_step: float = 0.01,
    n: int = 10**4,
    seed: int = 0,
    workers: int = 1,
) -> GridAudit:
    """Audit the two-stage solution on a grid over the binding 2-asset constraint.

    a1 sweeps 0, grid_step, ... up to L/l1; a2 is set from the binding
    constraint.  Probabilities come from the conditional estimator except at
    the single-asset endpoints, which are exact.  E1 is the grid minimum, E2
    the estimate at the two-stage solution, and relative_error their gap
    (E2 - E1)/E1.  Per-point substreams are derived from (seed, grid index),
    so enlarging the worker pool cannot change any estimate.
    """
    if not isinstance(p.constraint, LinearConstraint) or len(p.models) != 2:
        raise UnsupportedConstraint("grid_verify audits the 2-asset linear-constraint study")
    if joint.kind != BIVARIATE_LOGNORMAL:
        raise UnsupportedConstraint("the audit estimator is the bivariate-lognormal conditional MC")
    l1, l2 = (float(v) for v in p.constraint.l)
    L = p.constraint.L
    x = p.threshold
    k_max = int(math.floor(L / l1 / grid_step + 1e-9))

    points = []
    for k in range(k_max + 1):
        a1 = k * grid_step
        a2 = max((L - l1 * a1) / l2, 0.0)
        if a1 <= 0.0 or a2 <= 0.0:
            coef = a2 if a1 <= 0.0 else a1
            est = exact_lognormal_single(joint.mu, joint.sigma, coef, x)
            points.append(GridPoint(a1, a2, est, 0.0, True, est == 0.0))
            continue
        res = cond_mc_lognormal(joint.mu, joint.sigma, joint.rho, [a1, a2], x, n, (seed, k), workers=workers)
        points.append(GridPoint(a1, a2, res.estimate, res.std_error, False, res.estimate == 0.0))

    k_min = int(np.argmin([pt.estimate for pt in points]))
    e1 = points[k_min].estimate
    a_tilde = (points[k_min].a1, points[k_min].a2)

    star = solve_two_stage(p).a
    k_star = int(round(star[0] / grid_step))
    if 0 <= k_star <= k_max and abs(points[k_star].a1 - star[0]) < grid_step / 2:
        e2 = points[k_star].estimate
    else:
        res = cond_mc_lognormal(joint.mu, joint.sigma, joint.rho, list(star), x, n, (seed, 10**6), workers=workers)
        e2 = res.estimate
    rel = (e2 - e1) / e1 if e1 > 0 else math.inf
    return GridAudit(a_tilde, e1, e2, rel, tuple(points), n, seed, x)


def single_asset_extremes(p: PortfolioProblem, joint: JointModel) -> tuple:
    """Exact tail probabilities of the two all-in-one-asset allocations."""
    if not isinstance(p.constraint, LinearConstraint) or len(p.models) != 2:
        raise UnsupportedConstraint("single-asset extremes are a 2-asset notion")
    l1, l2 = (float(v) for v in p.constraint.l)
    L, x = p.constraint.L, p.threshold
    return (
        exact_lognormal_single(joint.mu, joint.sigma, L / l1, x),
        exact_lognormal_single(joint.mu, joint.sigma, L / l2, x),
    )
