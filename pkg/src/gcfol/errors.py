"""Exception types shared across the engine."""


class GcfolError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GcfolError, ValueError):
    """An argument lies outside the domain of an operation."""


class NotInvertibleMode(DomainError):
    """A periodic primitive was requested for a zero Fourier mode."""


class ScenarioMismatch(DomainError):
    """Operands belong to different scenarios or coefficient rings."""


class InvalidGenerator(DomainError):
    """A lattice generator is not an automorphism of the fibre torus."""


class DegenerateSpinor(DomainError):
    """A spinor vanishes at the evaluation point."""


class PreconditionError(GcfolError):
    """A documented precondition of an operation does not hold."""


class NotClosed(PreconditionError):
    """A form expected to be d_S-closed is not."""


class NotExact(GcfolError):
    """A closed form has a nonzero harmonic part and therefore no primitive.

    ``residual`` holds the harmonic representative that blocks exactness.
    """

    def __init__(self, residual, message="form is not exact"):
        super().__init__(message)
        self.residual = residual


class InvariantViolation(GcfolError):
    """An internal consistency check failed; this signals a bug, not a verdict."""


class ScenarioSyntaxError(GcfolError):
    """A scenario file could not be parsed; carries a line/column location."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class ScenarioSemanticError(GcfolError):
    """A scenario parsed but violates a named invariant."""

    def __init__(self, invariant, detail=""):
        super().__init__(f"{invariant}" + (f": {detail}" if detail else ""))
        self.invariant = invariant
