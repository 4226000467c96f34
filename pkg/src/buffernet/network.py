"""Financial-network data model and derived quantities.

A :class:`NetworkInstance` is the primitive object of the package: the
interbank liabilities matrix, the common-asset portfolio matrix, nominal
external inflows and per-unit intervention costs.  Everything downstream
(clearing, margins, buffer design) works off :func:`derive`, which computes
total liabilities, the row-stochastic relative-liability matrix, nominal
net-worth margins and the per-norm exposure/stress scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError

LINF = "linf"
L1 = "l1"


@dataclass
class NetworkInstance:
    """One-period interbank network with common external assets.

    liabilities[i, j] is the amount bank i owes bank j (currency units,
    nonnegative, zero diagonal).  portfolio[i, k] is bank i's signed
    position in asset k.  external[i] is the nominal external net inflow
    and costs[i] > 0 the per-unit cost of injecting buffer at bank i.
    """

    liabilities: np.ndarray
    portfolio: np.ndarray
    external: np.ndarray
    costs: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.liabilities = np.asarray(self.liabilities, dtype=float)
        self.portfolio = np.asarray(self.portfolio, dtype=float)
        if self.portfolio.ndim == 1:
            self.portfolio = self.portfolio.reshape(-1, 1)
        self.external = np.asarray(self.external, dtype=float).ravel()
        self.costs = np.asarray(self.costs, dtype=float).ravel()
        if self.names is None:
            self.names = [f"b{i + 1}" for i in range(self.external.size)]
        else:
            self.names = [str(s) for s in self.names]

    @property
    def n(self) -> int:
        return self.external.size

    @property
    def m(self) -> int:
        return self.portfolio.shape[1] if self.portfolio.ndim == 2 else 0


@dataclass
class DerivedQuantities:
    """All instance-level quantities the formulations consume.

    ``exposure_scores_linf`` / ``exposure_scores_l1`` are the per-bank dual
    norm scores used under the respective uncertainty model (row 1-norms of
    the portfolio under box shocks, row sup-norms under budgeted shocks);
    ``stress_vector_linf`` duplicates the former by definition.
    ``asset_columns[k]`` is the absolute cross-sectional exposure profile
    of asset k.
    """

    total_liabilities: np.ndarray
    relative_liabilities: np.ndarray
    nominal_margin: np.ndarray
    exposure_scores_linf: np.ndarray
    exposure_scores_l1: np.ndarray
    stress_vector_linf: np.ndarray
    asset_columns: np.ndarray


@dataclass
class UncertaintyModel:
    """Norm-bounded price-shock model: a ball of the given radius."""

    norm: str
    radius: float

    def __post_init__(self):
        if self.norm not in (LINF, L1):
            raise ValueError(f"norm must be '{LINF}' or '{L1}', got {self.norm!r}")
        if not self.radius >= 0.0:
            raise ValueError("radius must be nonnegative")


@dataclass
class BufferAllocation:
    """A nonnegative buffer vector together with its spend and budget cap."""

    buffer: np.ndarray
    spend: float
    budget_cap: float


@dataclass
class ValidationReport:
    structurally_valid: bool
    r_positive: bool
    nominal_margin: np.ndarray
    violations: list[str] = field(default_factory=list)


def derive(instance: NetworkInstance) -> DerivedQuantities:
    """Compute every derived quantity of a (valid) instance.

    Zero-liability rows of the relative matrix follow the unit-vector
    convention, so rows always sum to one.
    """
    p = instance.liabilities
    n = instance.n
    pbar = p.sum(axis=1)
    rel = np.eye(n)
    pos = pbar > 0.0
    if pos.any():
        rel[pos] = p[pos] / pbar[pos, None]
    r = instance.external + rel.T @ pbar - pbar
    absS = np.abs(instance.portfolio)
    scores_linf = absS.sum(axis=1)
    scores_l1 = absS.max(axis=1) if instance.m else np.zeros(n)
    return DerivedQuantities(
        total_liabilities=pbar,
        relative_liabilities=rel,
        nominal_margin=r,
        exposure_scores_linf=scores_linf,
        exposure_scores_l1=scores_l1,
        stress_vector_linf=scores_linf.copy(),
        asset_columns=absS.T.copy(),
    )


def scores_for_norm(derived: DerivedQuantities, norm: str) -> np.ndarray:
    """Dual-norm exposure score vector matching the uncertainty model."""
    if norm == LINF:
        return derived.exposure_scores_linf
    if norm == L1:
        return derived.exposure_scores_l1
    raise ValueError(f"unknown norm {norm!r}")


def validate(instance: NetworkInstance) -> ValidationReport:
    """Check structural invariants and the advisory no-default flag.

    Raises StructuralError listing every violated invariant when the
    structure is broken.  The returned report's ``r_positive`` flag is
    advisory: design operations require it, clearing does not.
    """
    violations = []
    p = instance.liabilities
    n = instance.n
    if p.ndim != 2 or p.shape != (n, n):
        violations.append(
            f"liabilities must be {n}x{n} to match external, got {p.shape}")
    if instance.portfolio.ndim != 2 or instance.portfolio.shape[0] != n:
        violations.append(
            f"portfolio must have {n} rows, got {instance.portfolio.shape}")
    if instance.costs.size != n:
        violations.append(f"costs must have length {n}, got {instance.costs.size}")
    if len(instance.names) != n:
        violations.append(f"names must have length {n}, got {len(instance.names)}")
    for label, arr in (("liabilities", p), ("portfolio", instance.portfolio),
                       ("external", instance.external), ("costs", instance.costs)):
        if not np.all(np.isfinite(arr)):
            violations.append(f"{label} contains non-finite entries")
    if not violations:
        if np.any(p < 0.0):
            bad = np.argwhere(p < 0.0)
            violations.append(f"liabilities has negative entries at {bad.tolist()[:5]}")
        if np.any(np.abs(np.diag(p)) > 0.0):
            bad = np.flatnonzero(np.abs(np.diag(p)) > 0.0)
            violations.append(f"liabilities diagonal must be zero, nonzero at {bad.tolist()[:5]}")
        if np.any(instance.costs <= 0.0):
            bad = np.flatnonzero(instance.costs <= 0.0)
            violations.append(f"costs must be strictly positive, violated at {bad.tolist()[:5]}")
    if violations:
        raise StructuralError(violations)
    r = derive(instance).nominal_margin
    return ValidationReport(
        structurally_valid=True,
        r_positive=bool(np.all(r > 0.0)),
        nominal_margin=r,
    )
