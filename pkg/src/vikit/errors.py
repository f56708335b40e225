"""Shared exception types."""


class VikitError(Exception):
    pass


class ContractError(VikitError):
    """An operation was called outside its stated preconditions."""


class DimensionMismatch(ContractError):
    pass


class EllipsoidFailure(VikitError):
    """Budget exhausted without any stopping case firing.

    Should be unreachable when the problem satisfies the optimizer's
    preconditions; carries diagnostics instead of being absorbed.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EmptinessCertificate(VikitError):
    """Raised when a solve certifies that a constraint set is (nearly) empty.

    Carries the index of the offending set and the optimizer report, so
    callers can surface a typed violation certificate.
    """

    def __init__(self, set_index, report=None, at_point=None):
        super().__init__(f"emptiness certificate for set index {set_index}")
        self.set_index = set_index
        self.report = report
        self.at_point = at_point


class SchemaError(VikitError):
    """Problem file failed validation; message carries a JSON-pointer path."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
