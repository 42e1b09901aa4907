"""
Exceptions raised by turnpoint.

Every error derives from ``TurnpointError``. Argument-shaped errors also
derive from ``ValueError`` so callers may catch them the usual way.
"""


class TurnpointError(Exception):
    pass


class StructuralError(TurnpointError, ValueError):
    """Malformed input: index mismatch, empty grid, bad shape."""


class ModeError(StructuralError):
    pass


class SingularSymbolError(TurnpointError, ArithmeticError):
    def __init__(self, message, m=None):
        super().__init__(message)
        self.m = m


class DegreeDropError(TurnpointError, ArithmeticError):
    pass


class SectorError(TurnpointError):
    pass


class DivergenceError(TurnpointError):
    pass


class NonConvergenceError(TurnpointError):
    pass


class PrecisionError(TurnpointError):
    pass


class FitError(TurnpointError, ValueError):
    pass


class GeometryError(TurnpointError):
    pass


class ContradictionError(GeometryError):
    pass


class DomainError(TurnpointError, ValueError):
    pass


class GridCoverageError(TurnpointError):
    pass


class AdmissibilityError(TurnpointError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class OverflowReportError(TurnpointError, OverflowError):
    def __init__(self, message, log_value):
        super().__init__(message)
        self.log_value = log_value


class PipelineOrderError(TurnpointError):
    def __init__(self, stage):
        super().__init__(f"stage {stage!r} has not been run for this configuration")
        self.stage = stage
