"""buffernet: exact pre-shock buffer design for financial contagion networks.

Clearing vectors, default/insolvency resilience margins, minimal-budget
certificates, and worst-case-loss-minimizing buffer allocations under
l-infinity and l-1 price-shock uncertainty, all solved exactly by linear
programming with independent brute-force oracles for verification.
"""

from .network import (
    NetworkInstance,
    DerivedQuantities,
    UncertaintyModel,
    BufferAllocation,
    ValidationReport,
    LINF,
    L1,
    derive,
    validate,
)
from .clearing import (
    ClearingResult,
    clear,
    fictitious_default,
    worst_case_loss,
    l1_block_losses,
    vertex_oracle,
)
from .design import (
    DesignResult,
    SweepRow,
    default_margin,
    max_default_margin,
    budget_certificate,
    certificate_inverse,
    max_insolvency_margin,
    insolvency_margin,
    bisect_insolvency_margin,
    min_loss_linf,
    min_loss_l1,
    baseline_uniform,
    baseline_exposure_proportional,
    sweep,
)
from .instances import (
    CorePeripheryParams,
    MarginalData,
    generate_core_periphery,
    reconcile,
    ipf_reconstruct,
    assemble_from_marginals,
    load_instance,
    save_instance,
)
from . import lp, errors

__version__ = "0.1.0"

__all__ = [
    "NetworkInstance", "DerivedQuantities", "UncertaintyModel",
    "BufferAllocation", "ValidationReport", "LINF", "L1", "derive", "validate",
    "ClearingResult", "clear", "fictitious_default", "worst_case_loss",
    "l1_block_losses", "vertex_oracle",
    "DesignResult", "SweepRow", "default_margin", "max_default_margin",
    "budget_certificate", "certificate_inverse", "max_insolvency_margin",
    "insolvency_margin", "bisect_insolvency_margin", "min_loss_linf",
    "min_loss_l1", "baseline_uniform", "baseline_exposure_proportional",
    "sweep",
    "CorePeripheryParams", "MarginalData", "generate_core_periphery",
    "reconcile", "ipf_reconstruct", "assemble_from_marginals",
    "load_instance", "save_instance",
    "lp", "errors",
]
