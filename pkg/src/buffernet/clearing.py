"""Clearing vectors, systemic losses, and worst-case loss evaluation.

``clear`` solves the maximal-clearing LP for a realized inflow vector;
``fictitious_default`` is the LP-free fixed-point oracle for the same
quantity.  ``worst_case_loss`` evaluates the exact worst case over a
norm-bounded shock set for a fixed buffer, and ``vertex_oracle`` brute
forces the same maximum over the extreme points of the set.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import lp
from .errors import DimensionTooLarge, IterationLimit, NumericalFailure
from .network import (
    LINF,
    L1,
    DerivedQuantities,
    NetworkInstance,
    UncertaintyModel,
    derive,
)

DEFAULT_TOL = 1e-7


@dataclass
class ClearingResult:
    """Outcome of one clearing computation.

    ``systemic_loss`` is the total payment shortfall at the maximal
    clearing vector, +inf when the clearing problem is infeasible.
    ``default_set`` lists banks paying strictly less than their due.
    """

    feasible: bool
    clearing_vector: np.ndarray | None
    systemic_loss: float
    default_set: list[int]
    iterations: int = 0


def clearing_lp(instance: NetworkInstance, c: np.ndarray,
                derived: DerivedQuantities | None = None) -> lp.LinearProgram:
    """Build the maximal-clearing LP for realized inflow c.

    Variables are the payments p with box 0 <= p <= pbar; rows encode
    (I - A^T) p <= c; the objective maximizes total payments.
    """
    d = derived or derive(instance)
    n = instance.n
    G = np.eye(n) - d.relative_liabilities.T
    return lp.LinearProgram(
        objective=-np.ones(n),
        inequality_lhs=G,
        inequality_rhs=np.asarray(c, dtype=float),
        lower_bounds=np.zeros(n),
        upper_bounds=d.total_liabilities.copy(),
        variable_names=[f"p[{name}]" for name in instance.names],
    )


def _result_from_payments(pbar: np.ndarray, p: np.ndarray, iterations: int) -> ClearingResult:
    loss = max(float(pbar.sum() - p.sum()), 0.0)
    defaults = np.flatnonzero(p < pbar - DEFAULT_TOL).tolist()
    return ClearingResult(True, p, loss, defaults, iterations)


def clear(instance: NetworkInstance, c: np.ndarray,
          derived: DerivedQuantities | None = None, solver=None) -> ClearingResult:
    """Maximal clearing vector and systemic loss at realized inflow c."""
    d = derived or derive(instance)
    problem = clearing_lp(instance, c, d)
    sol = lp.solve(problem, solver=solver)
    if sol.status == lp.INFEASIBLE:
        return ClearingResult(False, None, np.inf, [], sol.iterations)
    if sol.status != lp.OPTIMAL:
        # Payments are boxed, so the LP cannot be unbounded.
        raise NumericalFailure(f"clearing LP returned {sol.status}")
    return _result_from_payments(d.total_liabilities, sol.primal, sol.iterations)


def fictitious_default(instance: NetworkInstance, c: np.ndarray,
                       derived: DerivedQuantities | None = None,
                       tol: float = 1e-12, max_iter: int = 10 ** 6) -> ClearingResult:
    """Greatest-fixed-point iteration p <- min(pbar, c + A^T p) from p = pbar.

    Iterates are componentwise nonincreasing; a negative component proves
    the clearing problem infeasible.  Independent oracle for ``clear``.
    """
    d = derived or derive(instance)
    pbar = d.total_liabilities
    AT = d.relative_liabilities.T
    c = np.asarray(c, dtype=float)
    p = pbar.copy()
    for k in range(1, max_iter + 1):
        nxt = np.minimum(pbar, c + AT @ p)
        if nxt.min(initial=0.0) < -tol:
            return ClearingResult(False, None, np.inf, [], k)
        if np.max(np.abs(nxt - p)) <= tol:
            return _result_from_payments(pbar, nxt, k)
        p = nxt
    raise IterationLimit(f"fictitious default did not converge in {max_iter} iterations")


def worst_case_loss(instance: NetworkInstance, b: np.ndarray, u: UncertaintyModel,
                    derived: DerivedQuantities | None = None, solver=None) -> float:
    """Exact worst-case systemic loss over the shock set for a fixed buffer.

    Under box shocks the worst case collapses to the single stressed inflow
    cbar + b - eps * s_inf; under budgeted shocks it is the maximum over the
    per-asset scenario blocks.  +inf when any required clearing block is
    infeasible.
    """
    d = derived or derive(instance)
    b = np.asarray(b, dtype=float)
    if u.norm == LINF:
        c = instance.external + b - u.radius * d.stress_vector_linf
        return clear(instance, c, d, solver=solver).systemic_loss
    losses = l1_block_losses(instance, b, u.radius, d, solver=solver)
    if losses.size == 0:
        return clear(instance, instance.external + b, d, solver=solver).systemic_loss
    return float(losses.max())


def l1_block_losses(instance: NetworkInstance, b: np.ndarray, radius: float,
                    derived: DerivedQuantities | None = None, solver=None) -> np.ndarray:
    """Per-asset worst-case losses under budgeted shocks (one block per asset).

    Entry k is the clearing loss at cbar + b - radius * |zeta_k|; an inf
    entry identifies the asset block whose scenario is infeasible.
    """
    d = derived or derive(instance)
    b = np.asarray(b, dtype=float)
    out = np.empty(instance.m)
    for k in range(instance.m):
        c = instance.external + b - radius * d.asset_columns[k]
        out[k] = clear(instance, c, d, solver=solver).systemic_loss
    return out


def vertex_oracle(instance: NetworkInstance, b: np.ndarray, u: UncertaintyModel,
                  derived: DerivedQuantities | None = None, solver=None) -> float:
    """Brute-force worst-case loss over the extreme points of the shock set.

    Box shocks enumerate all 2^m sign patterns (m <= 16); budgeted shocks
    enumerate the 2m spikes +-radius * e_k plus the zero shock.  +inf
    dominates the maximum.
    """
    d = derived or derive(instance)
    b = np.asarray(b, dtype=float)
    m = instance.m
    S = instance.portfolio
    eps = u.radius
    if u.norm == LINF:
        if m > 16:
            raise DimensionTooLarge(f"box-vertex enumeration needs m <= 16, got {m}")
        deltas = [np.array(signs, dtype=float) * eps for signs in product((-1.0, 1.0), repeat=m)]
    else:
        deltas = [np.zeros(m)]
        for k in range(m):
            spike = np.zeros(m)
            spike[k] = eps
            deltas.append(spike.copy())
            deltas.append(-spike)
    worst = -np.inf
    for delta in deltas:
        c = instance.external + b + S @ delta
        loss = clear(instance, c, d, solver=solver).systemic_loss
        worst = max(worst, loss)
        if np.isinf(worst):
            break
    return worst
