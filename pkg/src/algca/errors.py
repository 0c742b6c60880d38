"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the command line
driver can print a single machine-parseable line.
"""


class AlgcaError(Exception):
    """Base class for all library errors."""

    def __init__(self, message="", witness=None):
        super().__init__(message)
        self.witness = witness

    @property
    def code(self):
        return type(self).__name__


class SchemaError(AlgcaError):
    """Malformed JSON input; the message names the offending field."""


class EmptyShift(AlgcaError):
    pass


class UnknownSymbol(AlgcaError):
    pass


class DepthTooLarge(AlgcaError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, message="", witness=None, first_infeasible=None):
        super().__init__(message, witness)
        self.first_infeasible = first_infeasible


class NotAllowed(AlgcaError):
    pass


class NotIrreducible(AlgcaError):
    pass


class NotStationary(AlgcaError):
    pass


class NotClosed(AlgcaError):
    """Structural compatibility fails for a shift / operation pair."""


class StructureViolation(AlgcaError):
    """A table lies outside the hypotheses of the right-structure analysis."""


class NotBijective(AlgcaError):
    pass


class ProductFailed(AlgcaError):
    def __init__(self, message="", witness=None, certificate=None):
        super().__init__(message, witness)
        self.certificate = certificate


class HypothesisFailed(AlgcaError):
    pass


class SearchExceeded(AlgcaError):
    pass


class IncompleteCover(AlgcaError):
    pass


class NotPermutative(UserWarning):
    """Warning: the map forced by the Psi-identity is not injective."""
