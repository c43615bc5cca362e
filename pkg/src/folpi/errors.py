"""Exception hierarchy.  Each family carries the CLI exit code it maps to."""


class FolpiError(Exception):
    exit_code = 1


class ParseError(FolpiError, ValueError):
    exit_code = 2


class NotReducedError(ParseError):
    pass


class HypothesisViolation(FolpiError):
    """An input breaks a standing assumption (containment, two central
    components, non-rational centre, ...)."""

    exit_code = 3


class NumericFailure(FolpiError, ArithmeticError):
    exit_code = 4


class InconsistencyError(FolpiError):
    """Two routes that must agree did not."""

    exit_code = 1


class NonRationalPoint(HypothesisViolation):
    def __init__(self, message: str, certificate: str):
        super().__init__(f"{message}; minimal polynomial of the tangent direction: {certificate}")
        self.certificate = certificate


class BlowupCapExceeded(HypothesisViolation):
    pass


class GraphError(HypothesisViolation):
    pass


class FlowError(NumericFailure):
    pass
