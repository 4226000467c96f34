"""Dense linear programming core.

Canonical problem shape used everywhere in this package:

    minimize    objective @ x
    subject to  inequality_lhs @ x <= inequality_rhs
                lower_bounds <= x <= upper_bounds   (entries may be infinite)

The built-in solver is a two-phase primal simplex on bounded variables with
a dense tableau.  Bland's rule is engaged after a stall threshold so the
method always terminates; exhausting the hard iteration cap raises
:class:`~buffernet.errors.NumericalFailure`.  Any callable with the same
``LinearProgram -> LpSolution`` contract can be dropped in as a replacement
backend (pass it as ``solver=`` or rebind ``DEFAULT_SOLVER``); the built-in
simplex is the default and the only backend exercised by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure

FEAS_TOL = 1e-9
GAP_TOL = 1e-7
PIVOT_TOL = 1e-10

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Nonbasic variable states.
_BASIC = 0
_AT_LOWER = 1
_AT_UPPER = 2
_FREE = 3

_STALL_LIMIT = 64


@dataclass
class LinearProgram:
    """A dense LP in the canonical minimize / row-inequality / box form."""

    objective: np.ndarray
    inequality_lhs: np.ndarray
    inequality_rhs: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    variable_names: list[str] | None = None

    def __post_init__(self):
        self.objective = np.atleast_1d(np.asarray(self.objective, dtype=float))
        n = self.objective.size
        self.inequality_lhs = np.asarray(self.inequality_lhs, dtype=float)
        if self.inequality_lhs.size == 0:
            self.inequality_lhs = self.inequality_lhs.reshape(0, n)
        if self.inequality_lhs.ndim != 2:
            raise ValueError("inequality_lhs must be a 2-d matrix")
        self.inequality_rhs = np.atleast_1d(np.asarray(self.inequality_rhs, dtype=float))
        self.lower_bounds = np.atleast_1d(np.asarray(self.lower_bounds, dtype=float))
        self.upper_bounds = np.atleast_1d(np.asarray(self.upper_bounds, dtype=float))
        if self.inequality_lhs.shape[0] != self.inequality_rhs.size:
            raise ValueError("row count of inequality_lhs must match inequality_rhs")
        if self.inequality_lhs.shape[1] != n:
            raise ValueError("column count of inequality_lhs must match objective")
        if self.lower_bounds.size != n or self.upper_bounds.size != n:
            raise ValueError("bound vectors must match objective length")
        if np.any(self.lower_bounds > self.upper_bounds):
            raise ValueError("lower_bounds must be <= upper_bounds componentwise")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.inequality_rhs.size


@dataclass
class LpSolution:
    """Solver output.

    ``duals`` are the nonnegative multipliers of the inequality rows under
    the G @ x <= h / minimization sign convention.  For an infeasible LP the
    phase-1 optimum is reported in ``phase1_objective`` as a diagnostic.
    """

    status: str
    primal: np.ndarray | None
    objective_value: float
    duals: np.ndarray | None
    iterations: int
    phase1_objective: float = 0.0


@dataclass
class VerificationReport:
    """Independent optimality check of an LpSolution (report-only)."""

    primal_residual: float
    dual_residual: float
    complementarity: float
    duality_gap: float
    passed: bool


class SimplexSolver:
    """Two-phase bounded-variable primal simplex with a dense tableau."""

    def __init__(self, feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL,
                 cost_tol: float = 1e-9, stall_limit: int = _STALL_LIMIT):
        self.feas_tol = feas_tol
        self.pivot_tol = pivot_tol
        self.cost_tol = cost_tol
        self.stall_limit = stall_limit

    def __call__(self, lp: LinearProgram) -> LpSolution:
        return self._solve(lp)

    # -- setup -----------------------------------------------------------

    def _solve(self, lp: LinearProgram) -> LpSolution:
        n, m = lp.n_vars, lp.n_rows
        G, h = lp.inequality_lhs, lp.inequality_rhs

        lower = np.concatenate([lp.lower_bounds, np.zeros(m)])
        upper = np.concatenate([lp.upper_bounds, np.full(m, np.inf)])

        # Nonbasic start: every structural variable at its finite bound
        # nearest zero (free variables sit at zero); slacks default to
        # their lower bound until the basis is chosen.
        status = np.full(n + m, _AT_LOWER, dtype=np.int8)
        values = np.zeros(n + m)
        for j in range(n):
            lj, uj = lower[j], upper[j]
            if lj > -np.inf and uj < np.inf:
                if abs(lj) <= abs(uj):
                    values[j], status[j] = lj, _AT_LOWER
                else:
                    values[j], status[j] = uj, _AT_UPPER
            elif lj > -np.inf:
                values[j], status[j] = lj, _AT_LOWER
            elif uj < np.inf:
                values[j], status[j] = uj, _AT_UPPER
            else:
                values[j], status[j] = 0.0, _FREE

        residual = h - G @ values[:n]
        bad = residual < 0.0
        art_rows = np.flatnonzero(bad)
        k = art_rows.size

        # Equality system [G | I | -E_bad] z = h; artificial columns carry
        # -1 so their basic start values are positive.
        A = np.zeros((m, n + m + k))
        A[:, :n] = G
        A[:, n:n + m] = np.eye(m)
        A[art_rows, n + m + np.arange(k)] = -1.0

        lower = np.concatenate([lower, np.zeros(k)])
        upper = np.concatenate([upper, np.full(k, np.inf)])
        status = np.concatenate([status, np.full(k, _AT_LOWER, dtype=np.int8)])
        values = np.concatenate([values, np.zeros(k)])

        basis = np.where(bad, n + m + np.cumsum(bad) - 1, n + np.arange(m))
        status[basis] = _BASIC
        values[n:n + m][~bad] = residual[~bad]
        values[n + m:] = -residual[art_rows]

        sign = np.where(bad, -1.0, 1.0)
        tab = sign[:, None] * np.concatenate([A, h[:, None]], axis=1)

        N = n + m + k
        allowed = np.ones(N, dtype=bool)
        iter_cap = 50 * (m + N) + 10_000
        total_iters = 0

        # -- phase 1 -------------------------------------------------------
        if k:
            c1 = np.zeros(N)
            c1[n + m:] = 1.0
            d = c1 - c1[basis] @ tab[:, :N]
            d[basis] = 0.0
            outcome, iters = self._iterate(
                tab, d, basis, status, values, lower, upper, allowed,
                float(values[n + m:].sum()), iter_cap, live=N)
            total_iters += iters
            if outcome == UNBOUNDED:
                raise NumericalFailure("phase-1 objective reported unbounded")
            self._refresh_basics(tab, basis, values, N)
            p1 = float(values[n + m:].sum())
            if p1 > self.feas_tol:
                return LpSolution(INFEASIBLE, None, np.inf, None, total_iters,
                                  phase1_objective=p1)
            total_iters += self._expel_artificials(tab, basis, status, values,
                                                   lower, n + m, N)
            allowed[n + m:] = False

        # -- phase 2 -------------------------------------------------------
        # Artificial columns are dead after phase 1 (masked from entering
        # and multiplied only by zero nonbasic values), so pivots skip them.
        c2 = np.zeros(N)
        c2[:n] = lp.objective
        d = c2 - c2[basis] @ tab[:, :N]
        d[basis] = 0.0
        outcome, iters = self._iterate(
            tab, d, basis, status, values, lower, upper, allowed,
            float(c2 @ values), iter_cap, live=n + m)
        total_iters += iters
        if outcome == UNBOUNDED:
            return LpSolution(UNBOUNDED, None, -np.inf, None, total_iters)

        self._refresh_basics(tab, basis, values, N)
        primal = values[:n].copy()
        duals = -(c2[basis] @ tab[:, n:n + m])
        return LpSolution(OPTIMAL, primal, float(lp.objective @ primal),
                          duals, total_iters)

    # -- main pivot loop ---------------------------------------------------

    def _iterate(self, tab, d, basis, status, values, lower, upper, allowed,
                 obj, iter_cap, live):
        m = basis.size
        N = d.size
        movable = allowed & (np.isinf(upper - lower) | (upper - lower > 0.0))
        bland = False
        stall = 0
        best_obj = obj
        iters = 0
        scratch = np.empty((m, live))

        while True:
            at_lo = (status == _AT_LOWER) & movable
            at_up = (status == _AT_UPPER) & movable
            free = (status == _FREE) & movable
            score = np.zeros(N)
            score[at_lo] = -d[at_lo]
            score[at_up] = d[at_up]
            score[free] = np.abs(d[free])
            candidates = score > self.cost_tol
            if not candidates.any():
                return OPTIMAL, iters
            if bland:
                j = int(np.flatnonzero(candidates)[0])
            else:
                j = int(np.argmax(score))

            iters += 1
            if iters > iter_cap:
                raise NumericalFailure(
                    f"simplex exceeded {iter_cap} iterations (anti-cycling exhausted)")

            if status[j] == _AT_UPPER or (status[j] == _FREE and d[j] > 0.0):
                direction = -1.0
            else:
                direction = 1.0

            col = tab[:m, j]
            coef = direction * col
            xb = values[basis]
            ratios = np.full(m, np.inf)
            dec = coef > self.pivot_tol
            lo_b = lower[basis]
            sel = dec & (lo_b > -np.inf)
            ratios[sel] = (xb[sel] - lo_b[sel]) / coef[sel]
            inc = coef < -self.pivot_tol
            up_b = upper[basis]
            sel = inc & (up_b < np.inf)
            ratios[sel] = (up_b[sel] - xb[sel]) / (-coef[sel])
            np.maximum(ratios, 0.0, out=ratios)

            span = upper[j] - lower[j]
            t_flip = span if np.isfinite(span) else np.inf
            t_rows = ratios.min() if m else np.inf
            t_star = min(t_flip, t_rows)
            if not np.isfinite(t_star):
                return UNBOUNDED, iters

            if t_flip <= t_rows:
                values[basis] = xb - direction * t_star * col
                values[j] = upper[j] if status[j] == _AT_LOWER else lower[j]
                status[j] = _AT_UPPER if status[j] == _AT_LOWER else _AT_LOWER
                obj += d[j] * direction * t_star
            else:
                tie = ratios <= t_star + 1e-10 * (1.0 + t_star)
                rows = np.flatnonzero(tie)
                if bland:
                    r = int(rows[np.argmin(basis[rows])])
                else:
                    r = int(rows[np.argmax(np.abs(coef[rows]))])
                leaving = basis[r]
                values[basis] = xb - direction * t_star * col
                values[j] += direction * t_star
                if coef[r] > 0.0:
                    values[leaving] = lower[leaving]
                    status[leaving] = _AT_LOWER
                else:
                    values[leaving] = upper[leaving]
                    status[leaving] = _AT_UPPER
                status[j] = _BASIC
                basis[r] = j

                piv = tab[r, j]
                prow = tab[r] / piv
                colj = tab[:, j].copy()
                np.multiply(colj[:, None], prow[None, :live], out=scratch)
                tab[:, :live] -= scratch
                tab[:, N] -= colj * prow[N]
                tab[r, :live] = prow[:live]
                tab[r, N] = prow[N]
                dj = d[j]
                d[:live] -= dj * prow[:live]
                d[j] = 0.0
                obj += dj * direction * t_star

            if obj < best_obj - 1e-12 * (1.0 + abs(best_obj)):
                best_obj = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= self.stall_limit:
                    bland = True

    # -- helpers -----------------------------------------------------------

    def _refresh_basics(self, tab, basis, values, N):
        """Recompute basic values from the pivoted tableau to kill drift."""
        nb = values.copy()
        nb[basis] = 0.0
        values[basis] = tab[:, N] - tab[:, :N] @ nb

    def _expel_artificials(self, tab, basis, status, values, lower, n_real, N):
        """Pivot zero-valued artificial variables out of the basis.

        Rows whose tableau entries vanish over all real columns are linearly
        dependent; their artificial stays basic at zero and is harmless.
        """
        pivots = 0
        for r in np.flatnonzero(basis >= n_real):
            row = np.abs(tab[r, :n_real])
            j = int(np.argmax(row))
            if row[j] <= self.pivot_tol:
                continue
            leaving = basis[r]
            prow = tab[r] / tab[r, j]
            colj = tab[:, j].copy()
            tab -= np.outer(colj, prow)
            tab[r] = prow
            values[leaving] = 0.0
            status[leaving] = _AT_LOWER
            status[j] = _BASIC
            basis[r] = j
            pivots += 1
        return pivots


DEFAULT_SOLVER = SimplexSolver()


def solve(lp: LinearProgram, solver=None) -> LpSolution:
    """Solve an LP with the built-in simplex (or a drop-in backend).

    Deterministic: identical input bits yield an identical LpSolution.
    """
    return (solver or DEFAULT_SOLVER)(lp)


def verify(lp: LinearProgram, sol: LpSolution, gap_tol: float = GAP_TOL) -> VerificationReport:
    """Check an optimal solution against the KKT conditions from scratch.

    Reports the primal residual, dual feasibility residual (multiplier sign
    plus stationarity of the bound-classified reduced costs), the worst
    complementary-slackness product and the duality gap.  Passes iff all
    four are <= ``gap_tol``.
    """
    if sol.status != OPTIMAL:
        raise ValueError("verify requires an Optimal solution")
    x = np.asarray(sol.primal, dtype=float)
    mu = np.asarray(sol.duals, dtype=float)
    G, h = lp.inequality_lhs, lp.inequality_rhs
    c = lp.objective
    lo, up = lp.lower_bounds, lp.upper_bounds

    gx = G @ x
    primal_residual = max(
        float(np.max(gx - h, initial=0.0)),
        float(np.max(lo - x, initial=0.0)),
        float(np.max(x - up, initial=0.0)),
        0.0,
    )

    w = c + G.T @ mu
    dual_residual = max(0.0, float(np.max(-mu, initial=0.0)))
    near = 1e-7
    lo_f = np.where(np.isfinite(lo), lo, 0.0)
    up_f = np.where(np.isfinite(up), up, 0.0)
    at_lo = np.isfinite(lo) & (x <= lo_f + near * (1.0 + np.abs(lo_f)))
    at_up = np.isfinite(up) & (x >= up_f - near * (1.0 + np.abs(up_f)))
    interior = ~(at_lo | at_up)
    stat = np.zeros_like(w)
    stat[at_lo & ~at_up] = np.maximum(0.0, -w[at_lo & ~at_up])
    stat[at_up & ~at_lo] = np.maximum(0.0, w[at_up & ~at_lo])
    stat[interior] = np.abs(w[interior])
    if stat.size:
        dual_residual = max(dual_residual, float(stat.max()))

    complementarity = float(np.max(np.abs(mu * (h - gx)), initial=0.0))

    # Dual objective with sub-tolerance reduced costs clamped to zero so a
    # genuinely optimal solution never pairs a ~1e-15 cost with an infinite
    # bound.
    wt = np.where(np.abs(w) <= 1e-9, 0.0, w)
    psi = 0.0
    for j in range(x.size):
        if wt[j] > 0.0:
            psi += wt[j] * lo[j] if np.isfinite(lo[j]) else -np.inf
        elif wt[j] < 0.0:
            psi += wt[j] * up[j] if np.isfinite(up[j]) else -np.inf
    dual_objective = -float(h @ mu) + psi
    duality_gap = abs(float(c @ x) - dual_objective)

    passed = (primal_residual <= gap_tol and dual_residual <= gap_tol
              and complementarity <= gap_tol and duality_gap <= gap_tol)
    return VerificationReport(primal_residual, dual_residual, complementarity,
                              duality_gap, passed)


def dump(lp: LinearProgram, path: str | None = None) -> str:
    """Render an LP in the fixed plain-text layout used by golden tests.

    Layout: objective row, then one ``G | h`` row per constraint, then one
    ``lower upper`` row per variable.  Writes to ``path`` when given.
    """
    def row(vals):
        return " ".join(f"{v:.12g}" for v in vals)

    lines = ["minimize", row(lp.objective), "subject_to"]
    for i in range(lp.n_rows):
        lines.append(row(lp.inequality_lhs[i]) + " | " + f"{lp.inequality_rhs[i]:.12g}")
    lines.append("bounds")
    for j in range(lp.n_vars):
        lines.append(f"{lp.lower_bounds[j]:.12g} {lp.upper_bounds[j]:.12g}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
