"""Exception hierarchy shared across the package."""


class BufferNetError(Exception):
    """Base class for all buffernet errors."""


class NumericalFailure(BufferNetError):
    """The LP solver exhausted its anti-cycling safeguards."""


class StructuralError(BufferNetError):
    """A network instance violates structural invariants.

    Carries the full list of violations in ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class IterationLimit(BufferNetError):
    """A fixed-point iteration hit its iteration cap without converging."""


class DimensionTooLarge(BufferNetError):
    """Brute-force enumeration refused because the dimension is too large."""


class DegenerateDraw(BufferNetError):
    """The synthetic generator failed to produce a valid instance."""


class ZeroMass(BufferNetError):
    """Marginal totals sum to zero and cannot be reconciled."""


class NoConvergence(BufferNetError):
    """Iterative proportional fitting did not reach the tolerance.

    Usually signals infeasible support (some marginal mass can only be
    absorbed by forbidden cells).
    """

    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class ParseError(BufferNetError):
    """An instance or data file is malformed; the message names the field."""


class SchemaVersionError(BufferNetError):
    """An instance file carries an unsupported schema version."""
