"""Exact buffer synthesis: resilience margins, certificates, loss designs.

Four LP-backed designs plus the closed-form minimal-budget certificate:

* ``max_default_margin``   -- largest radius with guaranteed full clearing,
* ``budget_certificate``   -- cheapest buffer certifying a target radius,
* ``max_insolvency_margin``-- largest radius keeping clearing feasible,
* ``min_loss_linf`` / ``min_loss_l1`` -- worst-case-loss minimization at a
  fixed radius (one scenario block per asset under budgeted shocks).

``sweep`` evaluates optimal and heuristic policies over a budget grid.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .clearing import worst_case_loss
from .errors import BufferNetError, NumericalFailure
from .network import (
    LINF,
    L1,
    BufferAllocation,
    DerivedQuantities,
    NetworkInstance,
    UncertaintyModel,
    derive,
    scores_for_norm,
)

ACTIVE_TOL = 1e-9

OPT_MARGIN = "opt_margin"
OPT_LOSS = "opt_loss"
MARGIN_THEN_LOSS = "margin_then_loss"
UNIFORM = "uniform"
EXPOSURE_PROPORTIONAL = "exposure_proportional"

POLICIES = (OPT_MARGIN, OPT_LOSS, MARGIN_THEN_LOSS, UNIFORM, EXPOSURE_PROPORTIONAL)


@dataclass
class DesignResult:
    """Optimal buffer vector with the achieved margin or worst-case loss."""

    buffer: np.ndarray | None
    objective: float
    spend: float
    status: str
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SweepRow:
    budget: float
    policy: str
    metric: str
    value: float
    spend: float
    buffer: np.ndarray | None


def _require_budget(budget: float):
    if not budget >= 0.0:
        raise ValueError("budget must be nonnegative")


def _require_nominal_margin(derived: DerivedQuantities):
    r = derived.nominal_margin
    if not np.all(r > 0.0):
        raise BufferNetError(
            f"design requires a strictly positive nominal margin (min r = {r.min():.6g})")


def _finite_margin_result(objective, buffer, costs, sol=None):
    spend = float(costs @ buffer)
    diag = {"active_banks": np.flatnonzero(buffer > ACTIVE_TOL).tolist()}
    if sol is not None:
        diag["iterations"] = sol.iterations
    return DesignResult(buffer, objective, spend, "optimal", diag)


# -- default resilience margin ----------------------------------------------

def default_margin(instance: NetworkInstance, b: np.ndarray, norm: str,
                   derived: DerivedQuantities | None = None) -> float:
    """Largest radius with full clearing for every admissible shock.

    Closed form: min over banks of (r_i + b_i) / alpha_i, with x/0 = +inf.
    """
    d = derived or derive(instance)
    alpha = scores_for_norm(d, norm)
    num = d.nominal_margin + np.asarray(b, dtype=float)
    ratios = np.full(instance.n, np.inf)
    pos = alpha > 0.0
    ratios[pos] = num[pos] / alpha[pos]
    return float(ratios.min()) if ratios.size else np.inf


def default_margin_lp(instance: NetworkInstance, budget: float, norm: str,
                      derived: DerivedQuantities | None = None) -> lp.LinearProgram:
    """LP maximizing the default margin: variables (b_1..b_n, eps)."""
    d = derived or derive(instance)
    n = instance.n
    alpha = scores_for_norm(d, norm)
    G = np.zeros((n + 1, n + 1))
    G[:n, :n] = -np.eye(n)
    G[:n, n] = alpha
    G[n, :n] = instance.costs
    h = np.concatenate([d.nominal_margin, [budget]])
    obj = np.zeros(n + 1)
    obj[n] = -1.0
    return lp.LinearProgram(obj, G, h,
                            np.zeros(n + 1), np.full(n + 1, np.inf),
                            variable_names=[f"b[{s}]" for s in instance.names] + ["eps"])


def max_default_margin(instance: NetworkInstance, budget: float, norm: str,
                       derived: DerivedQuantities | None = None, solver=None) -> DesignResult:
    """Budgeted maximization of the default resilience margin (an LP)."""
    _require_budget(budget)
    d = derived or derive(instance)
    _require_nominal_margin(d)
    alpha = scores_for_norm(d, norm)
    if not np.any(alpha > 0.0):
        return _finite_margin_result(np.inf, np.zeros(instance.n), instance.costs)
    sol = lp.solve(default_margin_lp(instance, budget, norm, d), solver=solver)
    if sol.status != lp.OPTIMAL:
        raise NumericalFailure(f"default-margin LP returned {sol.status}")
    buffer = sol.primal[:instance.n].copy()
    return _finite_margin_result(float(sol.primal[instance.n]), buffer,
                                 instance.costs, sol)


def budget_certificate(instance: NetworkInstance, eps: float, norm: str,
                       derived: DerivedQuantities | None = None) -> tuple[float, np.ndarray]:
    """Minimal budget and buffer certifying default margin >= eps.

    Closed form: b_i = [alpha_i * eps - r_i]_+ and B = q . b  (the exact
    zero-loss budget threshold at radius eps).
    """
    if not eps >= 0.0:
        raise ValueError("target radius must be nonnegative")
    d = derived or derive(instance)
    _require_nominal_margin(d)
    alpha = scores_for_norm(d, norm)
    b = np.maximum(alpha * eps - d.nominal_margin, 0.0)
    return float(instance.costs @ b), b


def certificate_inverse(instance: NetworkInstance, budget: float, norm: str,
                        derived: DerivedQuantities | None = None) -> float:
    """Invert the certificate map: max {eps : B_def(eps) <= budget}.

    Piecewise-linear inversion of H(eps) = sum_i q_i [alpha_i eps - r_i]_+,
    the closed-form counterpart of the default-margin LP.
    """
    _require_budget(budget)
    d = derived or derive(instance)
    _require_nominal_margin(d)
    alpha = scores_for_norm(d, norm)
    q = instance.costs
    pos = alpha > 0.0
    if not pos.any():
        return np.inf
    kinks = np.sort(d.nominal_margin[pos] / alpha[pos])

    def H(eps):
        return float(q @ np.maximum(alpha * eps - d.nominal_margin, 0.0))

    eps = kinks[0]  # H is zero up to the first kink
    if budget == 0.0:
        return float(eps)
    for nxt in kinks[1:]:
        if H(nxt) >= budget:
            break
        eps = nxt
    # On the active segment H is affine with slope sum of q_i alpha_i over
    # banks already topped up.
    lo = max(eps, kinks[0])
    active = pos & (alpha * lo - d.nominal_margin >= -1e-15)
    slope = float(q[active] @ alpha[active])
    while True:
        eps_star = lo + (budget - H(lo)) / slope
        nxt_kinks = kinks[kinks > lo + 1e-15]
        if nxt_kinks.size and eps_star > nxt_kinks[0] + 1e-15:
            lo = nxt_kinks[0]
            active = pos & (alpha * lo - d.nominal_margin >= -1e-15)
            slope = float(q[active] @ alpha[active])
            continue
        return float(eps_star)


# -- insolvency resilience margin ---------------------------------------------

def insolvency_lp(instance: NetworkInstance, budget: float | None, norm: str,
                  b_fixed: np.ndarray | None = None,
                  derived: DerivedQuantities | None = None) -> lp.LinearProgram:
    """LP maximizing the insolvency margin.

    With ``budget`` the variables are (p, b, eps); with ``b_fixed`` the
    buffer is folded into the inflow and the variables are (p, eps).
    """
    d = derived or derive(instance)
    n = instance.n
    s = scores_for_norm(d, norm)
    M = np.eye(n) - d.relative_liabilities.T
    base = instance.external.copy()
    if b_fixed is not None:
        base = base + np.asarray(b_fixed, dtype=float)
        G = np.concatenate([M, s[:, None]], axis=1)
        h = base
        obj = np.zeros(n + 1)
        obj[n] = -1.0
        lo = np.zeros(n + 1)
        up = np.concatenate([d.total_liabilities, [np.inf]])
        names = [f"p[{x}]" for x in instance.names] + ["eps"]
        return lp.LinearProgram(obj, G, h, lo, up, variable_names=names)
    G = np.zeros((n + 1, 2 * n + 1))
    G[:n, :n] = M
    G[:n, n:2 * n] = -np.eye(n)
    G[:n, 2 * n] = s
    G[n, n:2 * n] = instance.costs
    h = np.concatenate([base, [budget]])
    obj = np.zeros(2 * n + 1)
    obj[2 * n] = -1.0
    lo = np.zeros(2 * n + 1)
    up = np.concatenate([d.total_liabilities, np.full(n + 1, np.inf)])
    names = ([f"p[{x}]" for x in instance.names]
             + [f"b[{x}]" for x in instance.names] + ["eps"])
    return lp.LinearProgram(obj, G, h, lo, up, variable_names=names)


def max_insolvency_margin(instance: NetworkInstance, budget: float, norm: str,
                          derived: DerivedQuantities | None = None, solver=None) -> DesignResult:
    """Budgeted maximization of the insolvency resilience margin (an LP)."""
    _require_budget(budget)
    d = derived or derive(instance)
    s = scores_for_norm(d, norm)
    n = instance.n
    if not np.any(s > 0.0):
        return _finite_margin_result(np.inf, np.zeros(n), instance.costs)
    sol = lp.solve(insolvency_lp(instance, budget, norm, derived=d), solver=solver)
    if sol.status == lp.INFEASIBLE:
        return DesignResult(None, -np.inf, 0.0, "infeasible",
                            {"iterations": sol.iterations})
    if sol.status != lp.OPTIMAL:
        raise NumericalFailure(f"insolvency-margin LP returned {sol.status}")
    buffer = sol.primal[n:2 * n].copy()
    return _finite_margin_result(float(sol.primal[2 * n]), buffer, instance.costs, sol)


def insolvency_margin(instance: NetworkInstance, b: np.ndarray, norm: str,
                      derived: DerivedQuantities | None = None, solver=None) -> float:
    """Insolvency resilience margin of a fixed buffer (no budget variable)."""
    d = derived or derive(instance)
    if not np.any(scores_for_norm(d, norm) > 0.0):
        return np.inf
    sol = lp.solve(insolvency_lp(instance, None, norm, b_fixed=b, derived=d),
                   solver=solver)
    if sol.status == lp.INFEASIBLE:
        return -np.inf
    if sol.status != lp.OPTIMAL:
        raise NumericalFailure(f"insolvency-margin LP returned {sol.status}")
    return float(sol.primal[instance.n])


def robust_feasible(instance: NetworkInstance, b: np.ndarray, eps: float, norm: str,
                    derived: DerivedQuantities | None = None, solver=None) -> bool:
    """Feasibility of the stressed clearing system at a fixed radius."""
    d = derived or derive(instance)
    s = scores_for_norm(d, norm)
    n = instance.n
    M = np.eye(n) - d.relative_liabilities.T
    c = instance.external + np.asarray(b, dtype=float) - eps * s
    problem = lp.LinearProgram(np.zeros(n), M, c, np.zeros(n),
                               d.total_liabilities.copy())
    return lp.solve(problem, solver=solver).status == lp.OPTIMAL


def bisect_insolvency_margin(instance: NetworkInstance, b: np.ndarray, norm: str,
                             tol: float = 1e-6,
                             derived: DerivedQuantities | None = None) -> float:
    """Independent bisection oracle for the insolvency margin of a buffer."""
    d = derived or derive(instance)
    if not np.any(scores_for_norm(d, norm) > 0.0):
        return np.inf
    if not robust_feasible(instance, b, 0.0, norm, d):
        return -np.inf
    lo, hi = 0.0, 1.0
    while robust_feasible(instance, b, hi, norm, d):
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            return np.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if robust_feasible(instance, b, mid, norm, d):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- worst-case loss minimization ---------------------------------------------

def loss_linf_lp(instance: NetworkInstance, eps: float, budget: float,
                 derived: DerivedQuantities | None = None) -> lp.LinearProgram:
    """Loss-design LP under box shocks: variables (p, b)."""
    d = derived or derive(instance)
    n = instance.n
    M = np.eye(n) - d.relative_liabilities.T
    G = np.zeros((n + 1, 2 * n))
    G[:n, :n] = M
    G[:n, n:] = -np.eye(n)
    G[n, n:] = instance.costs
    h = np.concatenate([instance.external - eps * d.stress_vector_linf, [budget]])
    obj = np.concatenate([-np.ones(n), np.zeros(n)])
    lo = np.zeros(2 * n)
    up = np.concatenate([d.total_liabilities, np.full(n, np.inf)])
    names = [f"p[{x}]" for x in instance.names] + [f"b[{x}]" for x in instance.names]
    return lp.LinearProgram(obj, G, h, lo, up, variable_names=names)


def loss_l1_lp(instance: NetworkInstance, eps: float, budget: float,
               derived: DerivedQuantities | None = None) -> lp.LinearProgram:
    """Loss-design epigraph LP under budgeted shocks.

    Variables (t, b, p^(1), ..., p^(m)): the count grows linearly in the
    asset dimension, one clearing block per asset.
    """
    d = derived or derive(instance)
    n, m = instance.n, instance.m
    M = np.eye(n) - d.relative_liabilities.T
    pbar = d.total_liabilities
    nv = 1 + n + n * m
    rows = m + n * m + 1
    G = np.zeros((rows, nv))
    h = np.empty(rows)
    for k in range(m):
        # epigraph: 1'pbar - 1'p^(k) - t <= 0
        G[k, 0] = -1.0
        G[k, 1 + n + k * n:1 + n + (k + 1) * n] = -1.0
        h[k] = -pbar.sum()
        # stressed clearing block for asset k
        r0 = m + k * n
        G[r0:r0 + n, 1 + n + k * n:1 + n + (k + 1) * n] = M
        G[r0:r0 + n, 1:1 + n] = -np.eye(n)
        h[r0:r0 + n] = instance.external - eps * d.asset_columns[k]
    G[rows - 1, 1:1 + n] = instance.costs
    h[rows - 1] = budget
    obj = np.zeros(nv)
    obj[0] = 1.0
    lo = np.zeros(nv)
    up = np.concatenate([[np.inf], np.full(n, np.inf), np.tile(pbar, m)])
    return lp.LinearProgram(obj, G, h, lo, up)


def _loss_design(instance, problem, budget, extract, solver):
    sol = lp.solve(problem, solver=solver)
    if sol.status == lp.INFEASIBLE:
        return DesignResult(None, np.inf, 0.0, "infeasible",
                            {"iterations": sol.iterations,
                             "phase1_objective": sol.phase1_objective})
    if sol.status != lp.OPTIMAL:
        raise NumericalFailure(f"loss-design LP returned {sol.status}")
    loss, buffer = extract(sol)
    spend = float(instance.costs @ buffer)
    return DesignResult(buffer, max(loss, 0.0), spend, "optimal",
                        {"iterations": sol.iterations,
                         "active_banks": np.flatnonzero(buffer > ACTIVE_TOL).tolist()})


def min_loss_linf(instance: NetworkInstance, eps: float, budget: float,
                  derived: DerivedQuantities | None = None, solver=None) -> DesignResult:
    """Minimize the worst-case loss at radius eps under box shocks."""
    _require_budget(budget)
    if not eps >= 0.0:
        raise ValueError("radius must be nonnegative")
    d = derived or derive(instance)
    n = instance.n
    pbar_sum = d.total_liabilities.sum()

    def extract(sol):
        return pbar_sum + sol.objective_value, sol.primal[n:].copy()

    return _loss_design(instance, loss_linf_lp(instance, eps, budget, d),
                        budget, extract, solver)


def min_loss_l1(instance: NetworkInstance, eps: float, budget: float,
                derived: DerivedQuantities | None = None, solver=None) -> DesignResult:
    """Minimize the worst-case loss at radius eps under budgeted shocks."""
    _require_budget(budget)
    if not eps >= 0.0:
        raise ValueError("radius must be nonnegative")
    d = derived or derive(instance)
    n = instance.n
    if instance.m == 0:
        # No assets: the shock set is trivial and the box LP applies as-is.
        return min_loss_linf(instance, 0.0, budget, d, solver=solver)

    def extract(sol):
        return sol.objective_value, sol.primal[1:1 + n].copy()

    return _loss_design(instance, loss_l1_lp(instance, eps, budget, d),
                        budget, extract, solver)


def min_loss(instance: NetworkInstance, eps: float, budget: float, norm: str,
             derived: DerivedQuantities | None = None, solver=None) -> DesignResult:
    if norm == LINF:
        return min_loss_linf(instance, eps, budget, derived, solver=solver)
    if norm == L1:
        return min_loss_l1(instance, eps, budget, derived, solver=solver)
    raise ValueError(f"unknown norm {norm!r}")


# -- baseline policies ---------------------------------------------------------

def baseline_uniform(instance: NetworkInstance, budget: float) -> BufferAllocation:
    """Equal spending across banks: q_i b_i = B / n."""
    _require_budget(budget)
    b = budget / (instance.n * instance.costs)
    return BufferAllocation(b, float(instance.costs @ b), budget)


def baseline_exposure_proportional(instance: NetworkInstance, budget: float, norm: str,
                                   derived: DerivedQuantities | None = None) -> BufferAllocation:
    """Spending proportional to the norm-matched exposure score.

    Falls back to the uniform split when every score is zero.
    """
    _require_budget(budget)
    d = derived or derive(instance)
    alpha = scores_for_norm(d, norm)
    total = alpha.sum()
    if total <= 0.0:
        return baseline_uniform(instance, budget)
    b = budget * alpha / (total * instance.costs)
    return BufferAllocation(b, float(instance.costs @ b), budget)


# -- budget sweeps --------------------------------------------------------------

def _sweep_cell(instance, d, budget, policy, norm, radius, solver):
    u = UncertaintyModel(norm, radius) if radius is not None else None
    if policy == OPT_MARGIN:
        res = max_default_margin(instance, budget, norm, d, solver=solver)
        return SweepRow(budget, policy, "margin", res.objective, res.spend, res.buffer)
    if policy == OPT_LOSS:
        res = min_loss(instance, radius, budget, norm, d, solver=solver)
        return SweepRow(budget, policy, "loss", res.objective, res.spend, res.buffer)
    if policy == MARGIN_THEN_LOSS:
        res = max_default_margin(instance, budget, norm, d, solver=solver)
        loss = worst_case_loss(instance, res.buffer, u, d, solver=solver)
        return SweepRow(budget, policy, "loss", loss, res.spend, res.buffer)
    if policy == UNIFORM:
        alloc = baseline_uniform(instance, budget)
    elif policy == EXPOSURE_PROPORTIONAL:
        alloc = baseline_exposure_proportional(instance, budget, norm, d)
    else:
        raise ValueError(f"unknown policy {policy!r}")
    if radius is None:
        value = default_margin(instance, alloc.buffer, norm, d)
        return SweepRow(budget, policy, "margin", value, alloc.spend, alloc.buffer)
    value = worst_case_loss(instance, alloc.buffer, u, d, solver=solver)
    return SweepRow(budget, policy, "loss", value, alloc.spend, alloc.buffer)


def sweep(instance: NetworkInstance, budgets, norm: str, policies,
          radius: float | None = None, derived: DerivedQuantities | None = None,
          max_workers: int = 1, solver=None) -> list[SweepRow]:
    """Evaluate policies over a nondecreasing budget grid.

    Optimal policies solve their design LP per cell; heuristics allocate
    then re-evaluate (margin when no radius is given, worst-case loss at
    ``radius`` otherwise).  Failed cells are recorded as +inf rather than
    aborting; row order is fixed by (budget index, policy index) regardless
    of execution order.
    """
    budgets = [float(x) for x in budgets]
    if any(b2 < b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budget grid must be nondecreasing")
    for p in policies:
        if p not in POLICIES:
            raise ValueError(f"unknown policy {p!r}")
        if radius is None and p in (OPT_LOSS, MARGIN_THEN_LOSS):
            raise ValueError(f"policy {p!r} requires a radius")
    d = derived or derive(instance)

    def cell(args):
        budget, policy = args
        try:
            return _sweep_cell(instance, d, budget, policy, norm, radius, solver)
        except BufferNetError as exc:
            warnings.warn(f"sweep cell (B={budget}, {policy}) failed: {exc}")
            metric = "loss" if (radius is not None or policy in (OPT_LOSS, MARGIN_THEN_LOSS)) else "margin"
            return SweepRow(budget, policy, metric, np.inf, 0.0, None)

    cells = [(b, p) for b in budgets for p in policies]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(cell, cells))
    else:
        rows = [cell(c) for c in cells]
    return rows
